"""Compact text form for match expressions and rules.

Used for debug output, traces, and golden tests.  The format is
parseable: ``format_match`` and ``parse_match`` round-trip every
expression structurally.

    true
    !true
    src 192.168.0.0/16
    dst 8/5@8                (toy-width prefix)
    proto tcp
    extra("limit", "--limit 1/sec")
    (proto tcp & !src 192.168.0.0/16)
"""

from __future__ import annotations

import json
import re

from .ipspace import Cidr, parse_ipv4
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
    SrcCidr,
    TrueExpr,
)

_ACTION_NAMES = {
    Accept: "accept",
    Drop: "drop",
    Reject: "reject",
    Log: "log",
    Empty: "empty",
    Return: "return",
}


def format_match(m: MatchExpr) -> str:
    if isinstance(m, TrueExpr):
        return "true"
    if isinstance(m, Prim):
        prim = m.prim
        if isinstance(prim, SrcCidr):
            return f"src {prim.cidr}"
        if isinstance(prim, DstCidr):
            return f"dst {prim.cidr}"
        if isinstance(prim, Protocol):
            return f"proto {prim.name}"
        if isinstance(prim, Extra):
            return f"extra({json.dumps(prim.module)}, {json.dumps(prim.options)})"
        raise TypeError(f"not a primitive: {prim!r}")
    if isinstance(m, Not):
        return f"!{format_match(m.inner)}"
    if isinstance(m, And):
        return f"({format_match(m.left)} & {format_match(m.right)})"
    raise TypeError(f"not a match expression: {m!r}")


def format_action(a: Action) -> str:
    if isinstance(a, Call):
        return f"call {a.chain}"
    return _ACTION_NAMES[type(a)]


def format_rule(r: Rule) -> str:
    return f"{format_match(r.match)} -> {format_action(r.action)}"


_CIDR_RE = re.compile(r"(?:(\d+\.\d+\.\d+\.\d+)|(\d+))/(\d+)(?:@(\d+))?")
_STRING_RE = re.compile(r'"(?:[^"\\]|\\.)*"')


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str):
        raise ValueError(f"{message} at position {self.pos} in {self.text!r}")

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def literal(self, token: str) -> bool:
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def expect(self, token: str):
        if not self.literal(token):
            self.error(f"expected {token!r}")

    def parse_expr(self) -> MatchExpr:
        self.skip_ws()
        if self.literal("!"):
            return Not(self.parse_expr())
        if self.literal("("):
            left = self.parse_expr()
            self.skip_ws()
            self.expect("&")
            right = self.parse_expr()
            self.skip_ws()
            self.expect(")")
            return And(left, right)
        if self.literal("true"):
            return TrueExpr()
        if self.literal("src "):
            return Prim(SrcCidr(self.parse_cidr()))
        if self.literal("dst "):
            return Prim(DstCidr(self.parse_cidr()))
        if self.literal("proto "):
            return Prim(Protocol(self.parse_word()))
        if self.literal("extra("):
            module = self.parse_string()
            self.skip_ws()
            self.expect(",")
            self.skip_ws()
            options = self.parse_string()
            self.expect(")")
            return Prim(Extra(module, options))
        self.error("expected match expression")

    def parse_cidr(self) -> Cidr:
        m = _CIDR_RE.match(self.text, self.pos)
        if not m:
            self.error("expected CIDR")
        self.pos = m.end()
        dotted, plain, plen, width = m.groups()
        if dotted is not None:
            return Cidr(parse_ipv4(dotted), int(plen), 32)
        return Cidr(int(plain), int(plen), int(width) if width else 32)

    def parse_word(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        if self.pos == start:
            self.error("expected word")
        return self.text[start:self.pos]

    def parse_string(self) -> str:
        m = _STRING_RE.match(self.text, self.pos)
        if not m:
            self.error("expected quoted string")
        self.pos = m.end()
        return json.loads(m.group(0))


def parse_match(text: str) -> MatchExpr:
    """Inverse of :func:`format_match`."""
    parser = _Parser(text)
    expr = parser.parse_expr()
    parser.skip_ws()
    if parser.pos != len(text):
        parser.error("trailing input")
    return expr
