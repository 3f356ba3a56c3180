"""Core data model: match expressions, rules, chains, rulesets, packets.

Everything here is an immutable value with structural equality, so models
can be shared freely between threads and compared directly in tests.
Match expressions form a small algebra: the constant ``TRUE``, primitive
conditions, negation, and binary conjunction.  There is deliberately no
disjunction constructor; iptables has none.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Union

if TYPE_CHECKING:
    from .ipspace import Cidr


# --------------------------------------------------------------------------
# Primitives (atomic match conditions)

PROTOCOL_NAMES = ("tcp", "udp", "icmp", "all")


@dataclass(frozen=True)
class SrcCidr:
    """Source address lies in a CIDR prefix."""

    cidr: "Cidr"


@dataclass(frozen=True)
class DstCidr:
    """Destination address lies in a CIDR prefix."""

    cidr: "Cidr"


@dataclass(frozen=True)
class Protocol:
    """Layer-4 protocol equals ``name``; ``all`` matches every packet.

    A Protocol("all") conjunct is distinct from having no protocol
    conjunct at all: the former round-trips through the model, the
    latter is simply absence.
    """

    name: str

    def __post_init__(self):
        if self.name not in PROTOCOL_NAMES:
            raise ValueError(f"unknown protocol name: {self.name!r}")


@dataclass(frozen=True)
class Extra:
    """Any match condition we do not interpret, kept verbatim.

    ``module`` is the first ``-m`` module name of the captured option
    run ("" when the run does not start with ``-m``).  ``options`` is
    the raw option text byte-for-byte as it appeared in the input, so
    emission can reproduce it exactly.
    """

    module: str
    options: str


Primitive = Union[SrcCidr, DstCidr, Protocol, Extra]


# --------------------------------------------------------------------------
# Match expressions

@dataclass(frozen=True)
class TrueExpr:
    """Matches every packet."""


@dataclass(frozen=True)
class Prim:
    prim: Primitive


@dataclass(frozen=True)
class Not:
    inner: "MatchExpr"


@dataclass(frozen=True)
class And:
    left: "MatchExpr"
    right: "MatchExpr"


MatchExpr = Union[TrueExpr, Prim, Not, And]

TRUE = TrueExpr()
NOT_TRUE = Not(TRUE)


def conjuncts(m: MatchExpr) -> list[MatchExpr]:
    """Flatten the top-level conjunction spine of ``m`` into a list."""
    if isinstance(m, And):
        return conjuncts(m.left) + conjuncts(m.right)
    return [m]


def and_fold(parts: list[MatchExpr]) -> MatchExpr:
    """Right-associated conjunction of ``parts``; TRUE when empty."""
    if not parts:
        return TRUE
    out = parts[-1]
    for part in reversed(parts[:-1]):
        out = And(part, out)
    return out


def match_primitives(m: MatchExpr) -> list[Primitive]:
    """All primitives occurring anywhere in ``m``, in syntactic order."""
    if isinstance(m, TrueExpr):
        return []
    if isinstance(m, Prim):
        return [m.prim]
    if isinstance(m, Not):
        return match_primitives(m.inner)
    if isinstance(m, And):
        return match_primitives(m.left) + match_primitives(m.right)
    raise TypeError(f"not a match expression: {m!r}")


# --------------------------------------------------------------------------
# Actions and rules

@dataclass(frozen=True)
class Accept:
    pass


@dataclass(frozen=True)
class Drop:
    pass


@dataclass(frozen=True)
class Reject:
    pass


@dataclass(frozen=True)
class Log:
    pass


@dataclass(frozen=True)
class Empty:
    """Rule without a target; only counters are updated."""


@dataclass(frozen=True)
class Call:
    chain: str

    def __post_init__(self):
        if not self.chain:
            raise ValueError("Call requires a nonempty chain name")


@dataclass(frozen=True)
class Return:
    pass


Action = Union[Accept, Drop, Reject, Log, Empty, Call, Return]

ACCEPT = Accept()
DROP = Drop()
REJECT = Reject()
LOG = Log()
EMPTY = Empty()
RETURN = Return()


@dataclass(frozen=True)
class Rule:
    match: MatchExpr
    action: Action


# --------------------------------------------------------------------------
# Rulesets (the complex chain model)

BUILTIN_CHAINS = ("INPUT", "FORWARD", "OUTPUT")


@dataclass
class Ruleset:
    """Named chains plus default policies for the builtin chains.

    ``chains`` maps a chain name to its rule list; ``builtin_policies``
    maps a builtin chain name to Accept or Drop.  Treat instances as
    immutable after construction.
    """

    chains: dict[str, list[Rule]]
    builtin_policies: dict[str, Action]

    def policy(self, chain: str) -> Action:
        try:
            return self.builtin_policies[chain]
        except KeyError:
            raise ValueError(f"chain {chain!r} has no declared policy") from None


def well_formed(ruleset: Ruleset) -> list[str]:
    """Return a list of well-formedness violations (empty means ok).

    A ruleset is well-formed when every Call target is a defined chain
    and no builtin chain is used as a Call target.
    """
    violations = []
    for name, rules in ruleset.chains.items():
        for index, rule in enumerate(rules):
            if not isinstance(rule.action, Call):
                continue
            target = rule.action.chain
            if target not in ruleset.chains:
                violations.append(
                    f"chain {name!r} rule {index}: jump to undefined chain {target!r}"
                )
            elif target in BUILTIN_CHAINS:
                violations.append(
                    f"chain {name!r} rule {index}: jump to builtin chain {target!r}"
                )
    return violations


# --------------------------------------------------------------------------
# Packets and matchers

PACKET_PROTOCOLS = ("tcp", "udp", "icmp", "other")


@dataclass(frozen=True)
class Packet:
    """Concrete packet: source/destination address and layer-4 protocol.

    Addresses are plain unsigned integers; production packets are
    32-bit, test universes may use narrower widths.
    """

    src: int
    dst: int
    protocol: str

    def __post_init__(self):
        if self.protocol not in PACKET_PROTOCOLS:
            raise ValueError(f"unknown packet protocol: {self.protocol!r}")


class FilterDecision(enum.Enum):
    UNDECIDED = "undecided"
    ALLOW = "allow"
    DENY = "deny"


class Ternary(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


class Tactic(enum.Enum):
    """Policy for resolving Unknown match results.

    IN_DOUBT_ALLOW forces a match when the rule accepts and a mismatch
    when it drops; IN_DOUBT_DENY behaves the opposite way.
    """

    IN_DOUBT_ALLOW = "allow"
    IN_DOUBT_DENY = "deny"


# A primitive matcher decides whether one primitive applies to a packet.
BoolMatcher = Callable[[Primitive, Packet], bool]
TernaryMatcher = Callable[[Primitive, Packet], Ternary]


def match_eval_bool(gamma: BoolMatcher, m: MatchExpr, p: Packet) -> bool:
    """Evaluate a match expression against a packet under matcher ``gamma``."""
    if isinstance(m, TrueExpr):
        return True
    if isinstance(m, Prim):
        return bool(gamma(m.prim, p))
    if isinstance(m, Not):
        return not match_eval_bool(gamma, m.inner, p)
    if isinstance(m, And):
        return match_eval_bool(gamma, m.left, p) and match_eval_bool(gamma, m.right, p)
    raise TypeError(f"not a match expression: {m!r}")
