"""CIDR prefix arithmetic and per-rule primitive compression.

Addresses are unsigned integers.  The address width is a parameter
(default 32) so tests can exhaustively enumerate toy spaces at width
4-8; all operations require both operands to share a width.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import NotNnfError
from .model import DstCidr, Prim, Protocol, Rule, SrcCidr, and_fold, conjuncts


@dataclass(frozen=True, order=True)
class Cidr:
    """A canonical address prefix: ``base`` with the top ``prefix_len`` bits fixed.

    Host bits of ``base`` must be zero; use :meth:`make` to mask them off.
    """

    base: int
    prefix_len: int
    width: int = 32

    def __post_init__(self):
        if not 0 <= self.prefix_len <= self.width:
            raise ValueError(f"prefix length {self.prefix_len} out of range 0..{self.width}")
        if not 0 <= self.base < (1 << self.width):
            raise ValueError(f"base address {self.base} out of range for width {self.width}")
        if self.base & self.host_mask:
            raise ValueError(f"host bits set in {self.base}/{self.prefix_len}")

    @property
    def host_mask(self) -> int:
        return (1 << (self.width - self.prefix_len)) - 1

    @classmethod
    def make(cls, base: int, prefix_len: int, width: int = 32) -> "Cidr":
        """Construct a Cidr, zeroing any host bits of ``base``."""
        mask = ((1 << width) - 1) ^ ((1 << (width - prefix_len)) - 1)
        return cls(base & mask, prefix_len, width)

    @classmethod
    def parse(cls, text: str) -> "Cidr":
        """Parse dotted-quad notation, optionally with ``/len`` (width 32)."""
        ip_text, slash, len_text = text.partition("/")
        prefix_len = 32
        if slash:
            if not len_text.isdigit():
                raise ValueError(f"bad prefix length in {text!r}")
            prefix_len = int(len_text)
            if prefix_len > 32:
                raise ValueError(f"bad prefix length in {text!r}")
        return cls.make(parse_ipv4(ip_text), prefix_len)

    def __str__(self):
        if self.width == 32:
            return f"{format_ipv4(self.base)}/{self.prefix_len}"
        return f"{self.base}/{self.prefix_len}@{self.width}"


def parse_ipv4(text: str) -> int:
    parts = text.split(".")
    if len(parts) != 4 or not all(p.isdigit() for p in parts):
        raise ValueError(f"bad IPv4 address: {text!r}")
    octets = [int(p) for p in parts]
    if any(o > 255 for o in octets):
        raise ValueError(f"bad IPv4 address: {text!r}")
    return (octets[0] << 24) | (octets[1] << 16) | (octets[2] << 8) | octets[3]


def format_ipv4(value: int) -> str:
    return ".".join(str((value >> shift) & 0xFF) for shift in (24, 16, 8, 0))


def cidr_contains(c: Cidr, ip: int) -> bool:
    """True iff the top ``prefix_len`` bits of ``ip`` equal the prefix."""
    shift = c.width - c.prefix_len
    return (ip >> shift) == (c.base >> shift)


def cidr_intersect(a: Cidr, b: Cidr) -> Optional[Cidr]:
    """Intersection of two prefixes: at most one prefix, or None when disjoint.

    Two prefixes either nest or are disjoint, so the intersection is
    always the more specific of the two (or empty).
    """
    if a.width != b.width:
        raise ValueError("cannot intersect prefixes of different widths")
    if a.prefix_len <= b.prefix_len:
        return b if cidr_contains(a, b.base) else None
    return a if cidr_contains(b, a.base) else None


# --------------------------------------------------------------------------
# Rule compression: fold repeated positive src/dst/protocol conjuncts so a
# rule carries at most one primitive of each type (what iptables accepts).

def compress_rule(rule: Rule) -> Optional[Rule]:
    """Fold positive src/dst/protocol conjuncts; None when unmatchable.

    Requires an NNF match.  All positive SrcCidr conjuncts collapse to
    their intersection (likewise DstCidr); protocol conjuncts collapse
    to the single concrete protocol, with ``all`` acting as identity.
    An empty intersection or two different concrete protocols make the
    rule unmatchable and it is removed.  Negated conjuncts pass through
    untouched.
    """
    from .normalize import is_nnf

    if not is_nnf(rule.match):
        raise NotNnfError(f"match is not in NNF: {rule.match!r}")

    src: Optional[Cidr] = None
    dst: Optional[Cidr] = None
    proto: Optional[str] = None

    for part in conjuncts(rule.match):
        if isinstance(part, Prim) and isinstance(part.prim, SrcCidr):
            src = part.prim.cidr if src is None else cidr_intersect(src, part.prim.cidr)
            if src is None:
                return None
        elif isinstance(part, Prim) and isinstance(part.prim, DstCidr):
            dst = part.prim.cidr if dst is None else cidr_intersect(dst, part.prim.cidr)
            if dst is None:
                return None
        elif isinstance(part, Prim) and isinstance(part.prim, Protocol):
            name = part.prim.name
            if proto is None or proto == "all":
                proto = name
            elif name != "all" and name != proto:
                return None

    rebuilt: list = []
    emitted_src = emitted_dst = emitted_proto = False
    for part in conjuncts(rule.match):
        if isinstance(part, Prim) and isinstance(part.prim, SrcCidr):
            if not emitted_src:
                rebuilt.append(Prim(SrcCidr(src)))
                emitted_src = True
        elif isinstance(part, Prim) and isinstance(part.prim, DstCidr):
            if not emitted_dst:
                rebuilt.append(Prim(DstCidr(dst)))
                emitted_dst = True
        elif isinstance(part, Prim) and isinstance(part.prim, Protocol):
            if not emitted_proto:
                rebuilt.append(Prim(Protocol(proto)))
                emitted_proto = True
        else:
            rebuilt.append(part)

    return Rule(and_fold(rebuilt), rule.action)
