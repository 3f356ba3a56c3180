"""Three-valued match evaluation, in-doubt tactics, and unknown removal.

Match expressions evaluate in Kleene logic once a matcher may answer
Unknown.  A tactic turns an Unknown rule match into a definite verdict
based on the rule's action: in-doubt-allow forces a match for Accept
rules and a mismatch for Drop rules (so the accepted set is an upper
bound on the exact one); in-doubt-deny does the opposite (lower bound).

``process_unknowns`` rewrites a rule so that no statically-unknown
primitive remains while preserving its behavior under the chosen
tactic.  The negated-conjunction case is the delicate one: because
``not Unknown = Unknown``, the rewrite must recurse on the negated
operands and only then reassemble with De Morgan, comparing the
rewritten operands against the ``true``/``!true`` constants.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable

from .errors import UniverseTooLargeError, UnsupportedActionError
from .model import (
    Accept,
    Action,
    And,
    BoolMatcher,
    Drop,
    Extra,
    FilterDecision,
    MatchExpr,
    Not,
    NOT_TRUE,
    Packet,
    Prim,
    Primitive,
    Reject,
    Rule,
    Tactic,
    Ternary,
    TernaryMatcher,
    TRUE,
    TrueExpr,
)
from .unfold import optimize

_PROBE_PACKET = Packet(0, 0, "other")


def ternary_not(v: Ternary) -> Ternary:
    if v == Ternary.TRUE:
        return Ternary.FALSE
    if v == Ternary.FALSE:
        return Ternary.TRUE
    return Ternary.UNKNOWN


def ternary_and(a: Ternary, b: Ternary) -> Ternary:
    if a == Ternary.FALSE or b == Ternary.FALSE:
        return Ternary.FALSE
    if a == Ternary.UNKNOWN or b == Ternary.UNKNOWN:
        return Ternary.UNKNOWN
    return Ternary.TRUE


def ternary_eval(gamma: TernaryMatcher, m: MatchExpr, p: Packet) -> Ternary:
    """Kleene evaluation of a match expression."""
    if isinstance(m, TrueExpr):
        return Ternary.TRUE
    if isinstance(m, Prim):
        return gamma(m.prim, p)
    if isinstance(m, Not):
        return ternary_not(ternary_eval(gamma, m.inner, p))
    if isinstance(m, And):
        left = ternary_eval(gamma, m.left, p)
        if left == Ternary.FALSE:
            return Ternary.FALSE
        return ternary_and(left, ternary_eval(gamma, m.right, p))
    raise TypeError(f"not a match expression: {m!r}")


def _tactic_forces_match(tactic: Tactic, action: Action) -> bool:
    if not isinstance(action, (Accept, Drop)):
        raise UnsupportedActionError(
            f"in-doubt tactics are only defined for Accept/Drop, got {action!r}"
        )
    if tactic == Tactic.IN_DOUBT_ALLOW:
        return isinstance(action, Accept)
    return isinstance(action, Drop)


def approx_rule_matches(
    gamma: TernaryMatcher, tactic: Tactic, m: MatchExpr, action: Action, p: Packet
) -> bool:
    """Whether a rule applies under the embedded ternary semantics.

    Only Accept and Drop rules have a defined in-doubt behavior, so any
    other action is rejected up front (unfolded input required).
    """
    forces = _tactic_forces_match(tactic, action)
    value = ternary_eval(gamma, m, p)
    if value == Ternary.TRUE:
        return True
    if value == Ternary.FALSE:
        return False
    return forces


def eval_approx(
    rules: list[Rule],
    gamma: TernaryMatcher,
    tactic: Tactic,
    p: Packet,
    default: FilterDecision = FilterDecision.DENY,
) -> FilterDecision:
    """First-match evaluation of an unfolded Accept/Drop list under a tactic."""
    for rule in rules:
        if approx_rule_matches(gamma, tactic, rule.match, rule.action, p):
            return FilterDecision.ALLOW if isinstance(rule.action, Accept) else FilterDecision.DENY
    return default


def accepted_set(
    rules: list[Rule],
    gamma: TernaryMatcher,
    tactic: Tactic,
    universe: Iterable[Packet],
    max_size: int = 1_000_000,
) -> set[Packet]:
    """Packets of ``universe`` accepted under the tactic (closure set)."""
    packets = list(universe)
    if len(packets) > max_size:
        raise UniverseTooLargeError(f"universe has {len(packets)} packets, cap is {max_size}")
    return {
        p
        for p in packets
        if eval_approx(rules, gamma, tactic, p) == FilterDecision.ALLOW
    }


# --------------------------------------------------------------------------
# Unknown elimination

def is_unknown_primitive(gamma: TernaryMatcher, prim: Primitive) -> bool:
    """Static unknown-ness of a primitive under ``gamma``.

    Rewriting has no packet in hand, so it relies on matchers
    classifying unknown-ness per primitive, independent of the packet
    (the default matcher does).  A single probe packet decides.
    """
    return gamma(prim, _PROBE_PACKET) == Ternary.UNKNOWN


def process_unknowns(gamma: TernaryMatcher, tactic: Tactic, rule: Rule) -> Rule:
    """Rewrite one rule so no statically-unknown primitive remains.

    The rewrite preserves the rule's behavior under the given tactic,
    and the result's truth value never depends on an unknown primitive.
    """
    force = _tactic_forces_match(tactic, rule.action)
    forced = TRUE if force else NOT_TRUE

    def pu(m: MatchExpr) -> MatchExpr:
        if isinstance(m, TrueExpr):
            return TRUE
        if isinstance(m, Prim):
            return forced if is_unknown_primitive(gamma, m.prim) else m
        if isinstance(m, And):
            left = pu(m.left)
            right = pu(m.right)
            if left == NOT_TRUE or right == NOT_TRUE:
                return NOT_TRUE
            if left == TRUE:
                return right
            if right == TRUE:
                return left
            return And(left, right)
        if isinstance(m, Not):
            inner = m.inner
            if isinstance(inner, TrueExpr):
                return NOT_TRUE
            if isinstance(inner, Prim):
                return forced if is_unknown_primitive(gamma, inner.prim) else m
            if isinstance(inner, Not):
                return pu(inner.inner)
            if isinstance(inner, And):
                left = pu(Not(inner.left))
                right = pu(Not(inner.right))
                if left == TRUE:
                    return TRUE
                if right == TRUE:
                    return TRUE
                if left == NOT_TRUE:
                    return right
                if right == NOT_TRUE:
                    return left
                return Not(And(Not(left), Not(right)))
        raise TypeError(f"not a match expression: {m!r}")

    return Rule(pu(rule.match), rule.action)


def simplify_ruleset(rules: list[Rule], gamma: TernaryMatcher, tactic: Tactic) -> list[Rule]:
    """Unknown removal over a whole unfolded Accept/Drop list.

    Rewrites every rule, re-runs :func:`optimize` (which deletes the
    ``!true`` rules the rewrite produces), and truncates after the
    first unconditional rule, which shadows everything behind it.
    """
    rewritten = [process_unknowns(gamma, tactic, rule) for rule in rules]
    cleaned = optimize(rewritten)
    out: list[Rule] = []
    for rule in cleaned:
        out.append(rule)
        if isinstance(rule.match, TrueExpr):
            break
    return out


# --------------------------------------------------------------------------
# Connection-state prefix handling

class EstablishedRuleWarning(UserWarning):
    """A state ESTABLISHED rule was found outside the leading position."""


def _is_established_match(m: MatchExpr) -> bool:
    if isinstance(m, Prim):
        prim = m.prim
        return (
            isinstance(prim, Extra)
            and prim.module in ("state", "conntrack")
            and "ESTABLISHED" in prim.options
        )
    if isinstance(m, And):
        return _is_established_match(m.left) or _is_established_match(m.right)
    return False


def strip_established_prefix(rules: list[Rule]) -> list[Rule]:
    """Drop a leading accept-established rule to analyze connection setup.

    At most one rule is removed, and only from the leading position: a
    rule counts as leading when everything before it cannot decide a
    packet by itself (calls, logging, returns).  An established rule
    found deeper in the chain is left alone with a warning.
    """
    for index, rule in enumerate(rules):
        if _is_established_match(rule.match):
            if all(not isinstance(r.action, (Accept, Drop, Reject)) for r in rules[:index]):
                return rules[:index] + rules[index + 1:]
            warnings.warn(
                f"state ESTABLISHED rule at position {index} is not leading; kept",
                EstablishedRuleWarning,
                stacklevel=2,
            )
            return list(rules)
    return list(rules)


@dataclass
class AgreementOracle:
    """A Boolean matcher paired with a ternary matcher that never contradicts it.

    Agreement means: for every primitive and packet the ternary matcher
    either answers Unknown or matches the Boolean answer.  Closure
    inclusion (lower ⊆ exact ⊆ upper) relies on exactly this.
    """

    bool_matcher: BoolMatcher
    ternary_matcher: TernaryMatcher

    def agree_on(self, prims: Iterable[Primitive], packets: Iterable[Packet]) -> bool:
        packets = list(packets)
        for prim in prims:
            for p in packets:
                t = self.ternary_matcher(prim, p)
                if t == Ternary.UNKNOWN:
                    continue
                if (t == Ternary.TRUE) != bool(self.bool_matcher(prim, p)):
                    return False
        return True
