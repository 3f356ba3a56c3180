"""fwsimp: parse, execute, and verifiably simplify iptables filter rulesets."""

from .errors import (
    BlowupLimitExceededError,
    DepthExhaustedError,
    FwsimpError,
    NotConvergedError,
    NotEmittableError,
    NotNnfError,
    ParseError,
    TopLevelReturnError,
    UndefinedChainError,
    UniverseTooLargeError,
    UnknownPrimitiveError,
    UnsupportedActionError,
    WellFormednessError,
)
from .fmt import format_match, format_rule, parse_match
from .ipspace import Cidr, cidr_contains, cidr_intersect, compress_rule
from .matchers import default_bool_matcher, default_ternary_matcher
from .model import (
    ACCEPT,
    Accept,
    Action,
    And,
    BUILTIN_CHAINS,
    BoolMatcher,
    Call,
    DROP,
    Drop,
    DstCidr,
    EMPTY,
    Empty,
    Extra,
    FilterDecision,
    LOG,
    Log,
    MatchExpr,
    NOT_TRUE,
    Not,
    Packet,
    Prim,
    Primitive,
    Protocol,
    REJECT,
    RETURN,
    Reject,
    Return,
    Rule,
    Ruleset,
    SrcCidr,
    TRUE,
    Tactic,
    Ternary,
    TernaryMatcher,
    TrueExpr,
    and_fold,
    conjuncts,
    match_eval_bool,
    match_primitives,
    well_formed,
)
from .normalize import is_nnf, nnf_normalize, normalize_rules
from .parser import parse_save
from .emitter import emit_json, emit_save
from .semantics import (
    ChainOutcome,
    Decision,
    FellThrough,
    LoopCheck,
    ReturnedEarly,
    check_derivation,
    check_no_loops,
    eval_chain,
    eval_firewall,
)
from .ternary import (
    AgreementOracle,
    accepted_set,
    approx_rule_matches,
    eval_approx,
    process_unknowns,
    simplify_ruleset,
    strip_established_prefix,
    ternary_eval,
)
from .unfold import add_match, optimize, process_call, process_return, unfold_completely

__version__ = "0.1.0"
