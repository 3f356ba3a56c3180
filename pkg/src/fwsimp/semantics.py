"""Reference interpreter for iptables filtering plus a derivation checker.

The interpreter processes a chain rule by rule: non-matching rules are
skipped; a matching Accept allows, Drop/Reject deny, Log and Empty do
nothing, Call recurses into the named chain, and Return aborts the
called chain without a decision.  A decision, once made, is final.

``check_derivation`` re-encodes the same behavior as a search over the
rule-relation (including every way of splitting a chain in two), which
is deliberately independent of the interpreter: the two are tested
against each other, and the search also witnesses that exactly one
final state is derivable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .errors import DepthExhaustedError, TopLevelReturnError, UndefinedChainError
from .model import (
    Accept,
    BoolMatcher,
    Call,
    Drop,
    Empty,
    FilterDecision,
    Log,
    Packet,
    Reject,
    Return,
    Rule,
    Ruleset,
    TRUE,
    match_eval_bool,
)


# --------------------------------------------------------------------------
# Chain outcome

@dataclass(frozen=True)
class Decision:
    decision: FilterDecision


@dataclass(frozen=True)
class FellThrough:
    """Chain ran out of rules without deciding."""


@dataclass(frozen=True)
class ReturnedEarly:
    """A matching Return ended a called chain without deciding."""


ChainOutcome = Union[Decision, FellThrough, ReturnedEarly]

TraceEntry = tuple[str, int, Rule]


def eval_chain(
    ruleset: Ruleset,
    gamma: BoolMatcher,
    packet: Packet,
    chain: list[Rule],
    depth_budget: int,
    called: bool = False,
    trace: Optional[list[TraceEntry]] = None,
    chain_name: str = "",
) -> ChainOutcome:
    """Process ``chain`` for ``packet`` starting from the undecided state.

    ``called`` marks an invocation on behalf of a Call rule; only there
    is a matching Return legal (it yields ReturnedEarly).  A matching
    Return at the outermost level raises TopLevelReturnError.
    ``depth_budget`` bounds Call nesting; exhausting it raises
    DepthExhaustedError, which cannot happen on loop-free rulesets when
    the budget is at least the call-graph depth.
    """
    for index, rule in enumerate(chain):
        if not match_eval_bool(gamma, rule.match, packet):
            continue
        if trace is not None:
            trace.append((chain_name, index, rule))
        action = rule.action
        if isinstance(action, Accept):
            return Decision(FilterDecision.ALLOW)
        if isinstance(action, (Drop, Reject)):
            return Decision(FilterDecision.DENY)
        if isinstance(action, (Log, Empty)):
            continue
        if isinstance(action, Return):
            if not called:
                raise TopLevelReturnError(
                    f"Return matched at top level (chain {chain_name or '?'}, rule {index})"
                )
            return ReturnedEarly()
        if isinstance(action, Call):
            if depth_budget <= 0:
                raise DepthExhaustedError(f"call depth budget exhausted at {action.chain!r}")
            target = ruleset.chains.get(action.chain)
            if target is None:
                raise UndefinedChainError(f"call to undefined chain {action.chain!r}")
            outcome = eval_chain(
                ruleset,
                gamma,
                packet,
                target,
                depth_budget - 1,
                called=True,
                trace=trace,
                chain_name=action.chain,
            )
            if isinstance(outcome, Decision):
                return outcome
            continue  # FellThrough and ReturnedEarly both resume here
        raise TypeError(f"not an action: {action!r}")
    return FellThrough()


def eval_firewall(
    ruleset: Ruleset,
    gamma: BoolMatcher,
    packet: Packet,
    start_chain: str,
    trace: Optional[list[TraceEntry]] = None,
) -> FilterDecision:
    """Filter ``packet`` through a builtin chain and its default policy.

    Evaluation always uses the two-rule wrapper "call the start chain,
    then apply the default policy unconditionally", so the result is
    never Undecided and a Return inside the start chain falls through
    to the policy.
    """
    policy = ruleset.policy(start_chain)
    wrapper = [Rule(TRUE, Call(start_chain)), Rule(TRUE, policy)]
    budget = len(ruleset.chains) + 1
    outcome = eval_chain(
        ruleset, gamma, packet, wrapper, budget, trace=trace, chain_name="<wrapper>"
    )
    assert isinstance(outcome, Decision), "policy rule always decides"
    return outcome.decision


# --------------------------------------------------------------------------
# Call-graph check

@dataclass
class LoopCheck:
    ok: bool
    cycle: Optional[list[str]]
    depth: int


def check_no_loops(ruleset: Ruleset, start_chain: str) -> LoopCheck:
    """Check the call graph reachable from ``start_chain`` for cycles.

    Returns a witness cycle when one exists; otherwise ``depth`` is the
    longest run of nested calls, which bounds both the interpreter's
    recursion and the number of unfolding iterations needed.
    """
    graph: dict[str, list[str]] = {}

    def edges(name: str) -> list[str]:
        if name not in graph:
            graph[name] = [
                rule.action.chain
                for rule in ruleset.chains.get(name, [])
                if isinstance(rule.action, Call)
            ]
        return graph[name]

    state: dict[str, int] = {}  # 1 = on stack, 2 = done
    depth: dict[str, int] = {}
    stack: list[str] = []

    def visit(name: str) -> Optional[list[str]]:
        state[name] = 1
        stack.append(name)
        best = 0
        for target in edges(name):
            if state.get(target) == 1:
                return stack[stack.index(target):] + [target]
            if state.get(target) != 2:
                cycle = visit(target)
                if cycle is not None:
                    return cycle
            best = max(best, depth[target] + 1)
        depth[name] = best
        state[name] = 2
        stack.pop()
        return None

    cycle = visit(start_chain)
    if cycle is not None:
        return LoopCheck(False, cycle, -1)
    return LoopCheck(True, None, depth[start_chain])


# --------------------------------------------------------------------------
# Derivation search (test oracle for determinism and for the interpreter)

def check_derivation(
    ruleset: Ruleset,
    gamma: BoolMatcher,
    packet: Packet,
    chain: list[Rule],
    t_start: FilterDecision,
    t_end: FilterDecision,
) -> bool:
    """Decide whether the rule relation can take ``chain`` from t_start to t_end.

    Implements the relation directly: the decided state is absorbing;
    from the undecided state the empty chain stays undecided, a single
    rule steps by its action (with Call trying both the decided-result
    and the returned-without-result readings, the latter over every
    candidate Return position), and longer chains try every two-part
    split with every intermediate state.
    """
    matches = {}

    def match(m) -> bool:
        if m not in matches:
            matches[m] = match_eval_bool(gamma, m, packet)
        return matches[m]

    rules = tuple(chain)
    memo: dict[tuple, bool] = {}

    def derivable(rs: tuple[Rule, ...], t0: FilterDecision, t1: FilterDecision) -> bool:
        key = (rs, t0, t1)
        if key in memo:
            return memo[key]
        memo[key] = result = _search(rs, t0, t1)
        return result

    def _search(rs, t0, t1) -> bool:
        if t0 != FilterDecision.UNDECIDED:
            return t0 == t1  # decided state never changes
        if len(rs) == 0:
            return t1 == FilterDecision.UNDECIDED
        if len(rs) == 1:
            (rule,) = rs
            if not match(rule.match):
                return t1 == FilterDecision.UNDECIDED
            action = rule.action
            if isinstance(action, Accept):
                return t1 == FilterDecision.ALLOW
            if isinstance(action, (Drop, Reject)):
                return t1 == FilterDecision.DENY
            if isinstance(action, (Log, Empty)):
                return t1 == FilterDecision.UNDECIDED
            if isinstance(action, Return):
                return False  # no rule covers a top-level Return
            if isinstance(action, Call):
                target = tuple(ruleset.chains[action.chain])
                if derivable(target, FilterDecision.UNDECIDED, t1):
                    return True
                if t1 == FilterDecision.UNDECIDED:
                    for k, inner in enumerate(target):
                        if isinstance(inner.action, Return) and match(inner.match):
                            if derivable(
                                target[:k],
                                FilterDecision.UNDECIDED,
                                FilterDecision.UNDECIDED,
                            ):
                                return True
                return False
            raise TypeError(f"not an action: {action!r}")
        for split in range(1, len(rs)):
            for mid in FilterDecision:
                if derivable(rs[:split], FilterDecision.UNDECIDED, mid) and derivable(
                    rs[split:], mid, t1
                ):
                    return True
        return False

    return derivable(rules, t_start, t_end)
