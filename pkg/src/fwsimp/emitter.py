"""Emission of rulesets back to iptables-save text and to JSON.

Save emission reproduces opaque option runs byte-for-byte and writes
one ``-A`` line per rule in conjunct order, so parse -> emit -> parse
is a fixpoint for everything the parser recognizes.  A positive
``-p all`` conjunct is emitted as nothing (absence and ``all`` filter
identically; see README).  Matches that a single iptables rule cannot
express (several positive primitives of one type, negation on anything
but a primitive) raise NotEmittableError naming the rule.
"""

from __future__ import annotations

import json
from typing import Optional, Union

from .errors import NotEmittableError
from .fmt import format_rule
from .model import (
    Accept,
    Action,
    And,
    Call,
    Drop,
    DstCidr,
    Empty,
    Extra,
    Log,
    MatchExpr,
    Not,
    Prim,
    Protocol,
    Reject,
    Return,
    Rule,
    Ruleset,
    SrcCidr,
    TrueExpr,
    conjuncts,
)

_ACTION_TARGETS = {
    Accept: "ACCEPT",
    Drop: "DROP",
    Reject: "REJECT",
    Log: "LOG",
    Return: "RETURN",
}


def _prim_flags(prim, negated: bool) -> Optional[str]:
    bang = "! " if negated else ""
    if isinstance(prim, SrcCidr):
        if prim.cidr.width != 32:
            raise NotEmittableError(f"cannot emit non-32-bit prefix {prim.cidr}")
        return f"{bang}-s {prim.cidr}"
    if isinstance(prim, DstCidr):
        if prim.cidr.width != 32:
            raise NotEmittableError(f"cannot emit non-32-bit prefix {prim.cidr}")
        return f"{bang}-d {prim.cidr}"
    if isinstance(prim, Protocol):
        if prim.name == "all" and not negated:
            return None
        return f"{bang}-p {prim.name}"
    if isinstance(prim, Extra):
        if negated:
            raise NotEmittableError("cannot negate an opaque option run")
        if prim.module:
            return f"-m {prim.module} {prim.options}" if prim.options else f"-m {prim.module}"
        return prim.options
    raise TypeError(f"not a primitive: {prim!r}")


def emit_rule_line(chain: str, rule: Rule) -> str:
    """Render one rule as an ``-A`` line."""
    flags: list[str] = []
    seen = {SrcCidr: 0, DstCidr: 0, Protocol: 0}
    for part in conjuncts(rule.match):
        if isinstance(part, TrueExpr):
            continue
        negated = False
        if isinstance(part, Not):
            if not isinstance(part.inner, Prim):
                raise NotEmittableError(f"match is not in NNF: {format_rule(rule)}")
            part = part.inner
            negated = True
        if not isinstance(part, Prim):
            raise TypeError(f"not a match conjunct: {part!r}")
        if not negated and type(part.prim) in seen:
            seen[type(part.prim)] += 1
            if seen[type(part.prim)] > 1:
                raise NotEmittableError(
                    f"more than one positive {type(part.prim).__name__} in: {format_rule(rule)}"
                )
        rendered = _prim_flags(part.prim, negated)
        if rendered is not None:
            flags.append(rendered)

    action = rule.action
    if isinstance(action, Empty):
        jump = ""
    elif isinstance(action, Call):
        jump = f"-j {action.chain}"
    else:
        jump = f"-j {_ACTION_TARGETS[type(action)]}"

    line = f"-A {chain}"
    if flags:
        line += " " + " ".join(flags)
    if jump:
        line += " " + jump
    return line


def _policy_text(action: Optional[Action]) -> str:
    if action is None:
        return "-"
    if isinstance(action, Accept):
        return "ACCEPT"
    if isinstance(action, Drop):
        return "DROP"
    raise NotEmittableError(f"policy must be Accept or Drop, got {action!r}")


def emit_save(
    rules: Union[Ruleset, list[Rule]],
    chain_name: str = "INPUT",
    policy: Optional[Action] = None,
) -> str:
    """Render a whole ruleset, or a flat rule list as one chain.

    For a flat list, ``chain_name`` and ``policy`` describe the single
    emitted chain (policy ``None`` declares a user chain).
    """
    lines = ["*filter"]
    if isinstance(rules, Ruleset):
        for name in rules.chains:
            lines.append(f":{name} {_policy_text(rules.builtin_policies.get(name))} [0:0]")
        for name, chain in rules.chains.items():
            for rule in chain:
                lines.append(emit_rule_line(name, rule))
    else:
        lines.append(f":{chain_name} {_policy_text(policy)} [0:0]")
        for rule in rules:
            lines.append(emit_rule_line(chain_name, rule))
    lines.append("COMMIT")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# JSON dump (schema version 1)

def _match_obj(m: MatchExpr) -> dict:
    if isinstance(m, TrueExpr):
        return {"kind": "true"}
    if isinstance(m, Prim):
        prim = m.prim
        if isinstance(prim, SrcCidr):
            return {"kind": "prim", "prim": {"type": "src", "cidr": str(prim.cidr)}}
        if isinstance(prim, DstCidr):
            return {"kind": "prim", "prim": {"type": "dst", "cidr": str(prim.cidr)}}
        if isinstance(prim, Protocol):
            return {"kind": "prim", "prim": {"type": "protocol", "name": prim.name}}
        if isinstance(prim, Extra):
            return {
                "kind": "prim",
                "prim": {"type": "extra", "module": prim.module, "options": prim.options},
            }
        raise TypeError(f"not a primitive: {prim!r}")
    if isinstance(m, Not):
        return {"kind": "not", "child": _match_obj(m.inner)}
    if isinstance(m, And):
        return {"kind": "and", "left": _match_obj(m.left), "right": _match_obj(m.right)}
    raise TypeError(f"not a match expression: {m!r}")


def _action_obj(action: Action) -> dict:
    if isinstance(action, Call):
        return {"kind": "call", "chain": action.chain}
    if isinstance(action, Empty):
        return {"kind": "empty"}
    return {"kind": _ACTION_TARGETS[type(action)].lower()}


def emit_json(rules: list[Rule]) -> str:
    """Deterministic JSON dump of a rule list (schema field version 1)."""
    payload = {
        "schema": 1,
        "rules": [
            {"match": _match_obj(rule.match), "action": _action_obj(rule.action)}
            for rule in rules
        ],
    }
    return json.dumps(payload, sort_keys=True)
