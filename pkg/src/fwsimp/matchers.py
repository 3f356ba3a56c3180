"""Default primitive matchers for the concrete packet model.

The Boolean matcher is the oracle that understands everything it can
decide from the packet alone; opaque Extra primitives need an explicit
assumption.  The ternary matcher models a downstream tool that only
understands source/destination addresses and the TCP and UDP protocols;
everything else is Unknown.
"""

from __future__ import annotations

from .errors import UnknownPrimitiveError
from .ipspace import cidr_contains
from .model import (
    BoolMatcher,
    DstCidr,
    Extra,
    Packet,
    Primitive,
    Protocol,
    SrcCidr,
    Ternary,
    TernaryMatcher,
)

ASSUME_CHOICES = ("match", "nomatch", "error")


def default_bool_matcher(assume_unknown: str = "nomatch") -> BoolMatcher:
    """Boolean matcher over src/dst/protocol; Extra resolved per assumption.

    ``assume_unknown`` is one of ``match``, ``nomatch``, or ``error``;
    the last raises UnknownPrimitiveError when an Extra primitive is
    actually evaluated.
    """
    if assume_unknown not in ASSUME_CHOICES:
        raise ValueError(f"assume_unknown must be one of {ASSUME_CHOICES}")

    def gamma(prim: Primitive, packet: Packet) -> bool:
        if isinstance(prim, SrcCidr):
            return cidr_contains(prim.cidr, packet.src)
        if isinstance(prim, DstCidr):
            return cidr_contains(prim.cidr, packet.dst)
        if isinstance(prim, Protocol):
            return prim.name == "all" or packet.protocol == prim.name
        if isinstance(prim, Extra):
            if assume_unknown == "error":
                raise UnknownPrimitiveError(prim)
            return assume_unknown == "match"
        raise TypeError(f"not a primitive: {prim!r}")

    return gamma


def default_ternary_matcher() -> TernaryMatcher:
    """Ternary matcher that knows addresses plus the tcp/udp protocols.

    Protocol icmp and every Extra primitive are Unknown; the
    classification depends only on the primitive, never on the packet.
    """

    def gamma(prim: Primitive, packet: Packet) -> Ternary:
        if isinstance(prim, SrcCidr):
            return Ternary.TRUE if cidr_contains(prim.cidr, packet.src) else Ternary.FALSE
        if isinstance(prim, DstCidr):
            return Ternary.TRUE if cidr_contains(prim.cidr, packet.dst) else Ternary.FALSE
        if isinstance(prim, Protocol):
            if prim.name == "all":
                return Ternary.TRUE
            if prim.name == "icmp":
                return Ternary.UNKNOWN
            return Ternary.TRUE if packet.protocol == prim.name else Ternary.FALSE
        if isinstance(prim, Extra):
            return Ternary.UNKNOWN
        raise TypeError(f"not a primitive: {prim!r}")

    return gamma
