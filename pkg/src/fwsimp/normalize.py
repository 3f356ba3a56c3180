"""Negation normal form: one rule becomes a run of NNF rules.

iptables only accepts matches where negation sits directly on a
primitive.  A negated conjunction therefore splits one rule into
several consecutive rules sharing the action (a meta-logical
disjunction), and a conjunction of such runs multiplies out like a
distributive law.  The rule sequence produced for ``(m, a)`` filters
exactly like the original under both the Boolean and the ternary
semantics, for every matcher and tactic.
"""

from __future__ import annotations

import os

from .errors import BlowupLimitExceededError
from .model import And, MatchExpr, Not, Prim, Rule, TrueExpr

DEFAULT_BLOWUP_LIMIT = 10**6

BLOWUP_LIMIT_ENV = "FWSIMP_BLOWUP_LIMIT"


def blowup_limit_from_env(flag_value=None) -> int:
    """Resolve the normalization cap: CLI flag, else env var, else default."""
    if flag_value is not None:
        return int(flag_value)
    env = os.environ.get(BLOWUP_LIMIT_ENV)
    if env is not None:
        return int(env)
    return DEFAULT_BLOWUP_LIMIT


def is_nnf(m: MatchExpr) -> bool:
    """True iff every negation in ``m`` applies directly to a primitive."""
    if isinstance(m, (TrueExpr, Prim)):
        return True
    if isinstance(m, Not):
        return isinstance(m.inner, Prim)
    if isinstance(m, And):
        return is_nnf(m.left) and is_nnf(m.right)
    raise TypeError(f"not a match expression: {m!r}")


def nnf_normalize(m: MatchExpr, limit: int = DEFAULT_BLOWUP_LIMIT) -> list[MatchExpr]:
    """Rewrite ``m`` into a list of NNF expressions.

        n true          = [true]
        n (m1 & m2)     = [x & y for x in n m1 for y in n m2]
        n !(m1 & m2)    = n !m1 ++ n !m2
        n !!m           = n m
        n !true         = []
        n x             = [x]
        n !x            = [!x]

    The conjunction case is the distributive law (left operand in the
    outer loop), the negated conjunction is De Morgan split into a rule
    run, and ``!true`` vanishes because the rule can never match.  Read
    as the disjunction of its elements, the result is equivalent to
    ``m``.  Every recursive call strictly shrinks the node count of its
    argument, so the rewrite terminates on any input.  Raises
    BlowupLimitExceededError when the output would grow past ``limit``
    entries.
    """
    if isinstance(m, TrueExpr):
        return [m]
    if isinstance(m, And):
        left = nnf_normalize(m.left, limit)
        right = nnf_normalize(m.right, limit)
        if len(left) * len(right) > limit:
            raise BlowupLimitExceededError(
                f"normalization would produce {len(left) * len(right)} expressions"
            )
        return [And(x, y) for x in left for y in right]
    if isinstance(m, Prim):
        return [m]
    if isinstance(m, Not):
        inner = m.inner
        if isinstance(inner, And):
            left = nnf_normalize(Not(inner.left), limit)
            right = nnf_normalize(Not(inner.right), limit)
            if len(left) + len(right) > limit:
                raise BlowupLimitExceededError(
                    f"normalization would produce {len(left) + len(right)} expressions"
                )
            return left + right
        if isinstance(inner, Not):
            return nnf_normalize(inner.inner, limit)
        if isinstance(inner, TrueExpr):
            return []
        if isinstance(inner, Prim):
            return [m]
        raise TypeError(f"not a match expression: {inner!r}")
    raise TypeError(f"not a match expression: {m!r}")


def normalize_rules(rules: list[Rule], limit: int = DEFAULT_BLOWUP_LIMIT) -> list[Rule]:
    """Replace each rule by its NNF rule run, in place in the list order."""
    out: list[Rule] = []
    for index, rule in enumerate(rules):
        try:
            expansion = nnf_normalize(rule.match, limit)
        except BlowupLimitExceededError as exc:
            raise BlowupLimitExceededError(str(exc), rule_index=index) from None
        out.extend(Rule(m, rule.action) for m in expansion)
        if len(out) > limit:
            raise BlowupLimitExceededError(
                f"normalized ruleset exceeds {limit} rules", rule_index=index
            )
    return out
