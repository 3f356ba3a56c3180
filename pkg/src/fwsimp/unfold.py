"""Chain unfolding: from the complex chain model to a flat rule list.

Return elimination conjoins the negated Return match onto every later
rule of the chain; call elimination splices the (Return-free) callee in
place of the Call rule, conjoining the Call's own match.  Iterating
call elimination once per call-graph level flattens any loop-free
ruleset while preserving its filtering behavior, for arbitrary
primitive matchers.
"""

from __future__ import annotations

from .errors import NotConvergedError, UndefinedChainError
from .model import (
    And,
    Call,
    Drop,
    DstCidr,
    Empty,
    Log,
    MatchExpr,
    Not,
    NOT_TRUE,
    Prim,
    Reject,
    Return,
    Rule,
    Ruleset,
    SrcCidr,
    TRUE,
    TrueExpr,
    conjuncts,
)
from .semantics import check_no_loops


def add_match(extra: MatchExpr, rules: list[Rule]) -> list[Rule]:
    """Conjoin ``extra`` onto every rule's match, keeping actions."""
    return [Rule(And(rule.match, extra), rule.action) for rule in rules]


def process_return(rules: list[Rule]) -> list[Rule]:
    """Eliminate Return rules from one chain.

    Each Return rule disappears and its negated match is conjoined onto
    all rules after it (nesting when several Returns occur, with the
    nearest Return innermost).
    """
    out: list[Rule] = []
    negated: list[MatchExpr] = []
    for rule in rules:
        if isinstance(rule.action, Return):
            negated.append(Not(rule.match))
            continue
        match = rule.match
        for neg in reversed(negated):
            match = And(match, neg)
        out.append(Rule(match, rule.action))
    return out


def process_call(ruleset: Ruleset, rules: list[Rule]) -> list[Rule]:
    """Unfold one level of Call rules.

    A Call to chain ``c`` is replaced by the Return-eliminated body of
    ``c`` with the Call's match conjoined onto every spliced rule; all
    other rules pass through unchanged.
    """
    out: list[Rule] = []
    for rule in rules:
        if isinstance(rule.action, Call):
            target = ruleset.chains.get(rule.action.chain)
            if target is None:
                raise UndefinedChainError(f"call to undefined chain {rule.action.chain!r}")
            out.extend(add_match(rule.match, process_return(target)))
        else:
            out.append(rule)
    return out


def unfold_completely(ruleset: Ruleset, start_chain: str) -> list[Rule]:
    """Flatten ``start_chain`` into a single Call/Return-free rule list.

    Starts from the analysis wrapper [(True, Call start), (True,
    default-policy)], so the result always ends in the unconditional
    policy rule and a Return inside the start chain correctly falls
    through to that policy.  Requires a loop-free ruleset; call
    elimination runs once per call-graph level.
    """
    loops = check_no_loops(ruleset, start_chain)
    if not loops.ok:
        raise NotConvergedError(f"call loop: {' -> '.join(loops.cycle)}")
    policy = ruleset.policy(start_chain)
    rules = [Rule(TRUE, Call(start_chain)), Rule(TRUE, policy)]
    for _ in range(loops.depth + 1):
        if not any(isinstance(r.action, Call) for r in rules):
            break
        rules = process_call(ruleset, rules)
    leftover = [r for r in rules if isinstance(r.action, (Call, Return))]
    if leftover:
        raise NotConvergedError(f"unfolding left {len(leftover)} Call/Return rules")
    return rules


# --------------------------------------------------------------------------
# Post-unfolding cleanup

def simplify_match(m: MatchExpr) -> MatchExpr:
    """Collapse True conjuncts, double negation, and 0.0.0.0/0 prefixes.

    ``!true`` is deliberately left alone: it marks a never-matching
    rule, which :func:`optimize` deletes at the rule level.
    """
    if isinstance(m, Prim):
        if isinstance(m.prim, (SrcCidr, DstCidr)) and m.prim.cidr.prefix_len == 0:
            return TRUE
        return m
    if isinstance(m, Not):
        inner = simplify_match(m.inner)
        if isinstance(inner, Not):
            return inner.inner
        return Not(inner)
    if isinstance(m, And):
        left = simplify_match(m.left)
        right = simplify_match(m.right)
        if isinstance(left, TrueExpr):
            return right
        if isinstance(right, TrueExpr):
            return left
        return And(left, right)
    return m


def optimize(rules: list[Rule]) -> list[Rule]:
    """Semantics-preserving cleanup of an unfolded rule list.

    Rewrites Reject to Drop, deletes Log and Empty rules, simplifies
    every match, and deletes rules carrying a top-level ``!true``
    conjunct (they can never match).  The output contains only Accept
    and Drop actions, is never longer than the input, and the pass is
    idempotent.
    """
    out: list[Rule] = []
    for rule in rules:
        action = rule.action
        if isinstance(action, Reject):
            action = Drop()
        if isinstance(action, (Log, Empty)):
            continue
        match = simplify_match(rule.match)
        if any(part == NOT_TRUE for part in conjuncts(match)):
            continue
        out.append(Rule(match, action))
    return out
