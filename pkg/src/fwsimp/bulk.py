"""Whole-universe evaluation with bitmasks.

A packet universe is a fixed list of packets; any set of packets is an
integer whose bit ``i`` stands for ``packets[i]``.  Evaluating a chain
then walks the rules once, splitting one undecided mask instead of
looping over packets, which makes exhaustive toy-universe comparisons
(original vs. unfolded, exact vs. closures) cheap enough for thousands
of randomized cases.

These evaluators mirror the scalar semantics bit for bit; the test
suite pins their agreement with ``eval_firewall`` and ``eval_approx``.
"""

from __future__ import annotations

import itertools
import random

from .errors import TopLevelReturnError, UndefinedChainError
from .ipspace import Cidr
from .model import (
    Accept,
    And,
    BoolMatcher,
    Call,
    Drop,
    DstCidr,
    Empty,
    FilterDecision,
    Log,
    MatchExpr,
    Not,
    Packet,
    Prim,
    Reject,
    Return,
    Rule,
    Ruleset,
    SrcCidr,
    Tactic,
    Ternary,
    TernaryMatcher,
    TRUE,
    TrueExpr,
    PACKET_PROTOCOLS,
)
from .ternary import _tactic_forces_match


def toy_universe(width: int) -> list[Packet]:
    """Every packet at the given address width, all four protocols."""
    addresses = range(1 << width)
    return [
        Packet(src, dst, proto)
        for src, dst, proto in itertools.product(addresses, addresses, PACKET_PROTOCOLS)
    ]


def random_packets(count: int, seed: int, width: int = 32) -> list[Packet]:
    rng = random.Random(seed)
    top = (1 << width) - 1
    return [
        Packet(rng.randint(0, top), rng.randint(0, top), rng.choice(PACKET_PROTOCOLS))
        for _ in range(count)
    ]


def boundary_packets(cidrs: list[Cidr], fill: int, seed: int) -> list[Packet]:
    """CIDR-aware probe set: prefix edges as src and dst, plus random fill.

    Uniform sampling of the 32-bit space essentially never lands inside
    a specific prefix, so differential comparisons probe each prefix
    mentioned by either ruleset explicitly.
    """
    rng = random.Random(seed)
    addresses: list[int] = []
    for c in cidrs:
        first = c.base
        last = c.base | c.host_mask
        mid = c.base | (c.host_mask >> 1)
        top = (1 << c.width) - 1
        addresses.extend({first, mid, last, (first - 1) & top, (last + 1) & top})
    packets: list[Packet] = []
    for addr in addresses:
        other = rng.getrandbits(32)
        for proto in PACKET_PROTOCOLS:
            packets.append(Packet(addr, other, proto))
            packets.append(Packet(other, addr, proto))
    remaining = max(0, fill - len(packets))
    packets.extend(random_packets(remaining, rng.randrange(2**30)))
    return packets


# --------------------------------------------------------------------------
# Boolean masks

class BoolMaskCache:
    """Per-primitive match masks over one packet list, for one matcher."""

    def __init__(self, packets: list[Packet], gamma: BoolMatcher):
        self.packets = packets
        self.gamma = gamma
        self.full = (1 << len(packets)) - 1
        self._prim: dict = {}

    def prim_mask(self, prim) -> int:
        mask = self._prim.get(prim)
        if mask is None:
            mask = 0
            gamma = self.gamma
            for i, p in enumerate(self.packets):
                if gamma(prim, p):
                    mask |= 1 << i
            self._prim[prim] = mask
        return mask

    def set_prim_mask(self, prim, mask: int) -> None:
        """Install a precomputed mask for matchers that already hold one."""
        self._prim[prim] = mask

    def match_mask(self, m: MatchExpr) -> int:
        if isinstance(m, TrueExpr):
            return self.full
        if isinstance(m, Prim):
            return self.prim_mask(m.prim)
        if isinstance(m, Not):
            return self.full & ~self.match_mask(m.inner)
        if isinstance(m, And):
            return self.match_mask(m.left) & self.match_mask(m.right)
        raise TypeError(f"not a match expression: {m!r}")


def chain_masks(
    ruleset: Ruleset,
    cache: BoolMaskCache,
    chain: list[Rule],
    undecided: int,
    called: bool = False,
    depth: int | None = None,
) -> tuple[int, int, int]:
    """Evaluate ``chain`` for every packet in ``undecided`` at once.

    Returns (allowed, denied, still-undecided); the last covers both
    fall-through and early returns, which continue identically in the
    caller.
    """
    if depth is None:
        depth = len(ruleset.chains) + 1
    allow = deny = returned = 0
    for index, rule in enumerate(chain):
        if undecided == 0:
            break
        matched = cache.match_mask(rule.match) & undecided
        if matched == 0:
            continue
        action = rule.action
        if isinstance(action, Accept):
            allow |= matched
            undecided &= ~matched
        elif isinstance(action, (Drop, Reject)):
            deny |= matched
            undecided &= ~matched
        elif isinstance(action, (Log, Empty)):
            pass
        elif isinstance(action, Return):
            if not called:
                raise TopLevelReturnError(f"Return matched at top level (rule {index})")
            returned |= matched
            undecided &= ~matched
        elif isinstance(action, Call):
            target = ruleset.chains.get(action.chain)
            if target is None:
                raise UndefinedChainError(f"call to undefined chain {action.chain!r}")
            sub_allow, sub_deny, sub_rest = chain_masks(
                ruleset, cache, target, matched, called=True, depth=depth - 1
            )
            allow |= sub_allow
            deny |= sub_deny
            undecided = (undecided & ~matched) | sub_rest
        else:
            raise TypeError(f"not an action: {action!r}")
    return allow, deny, undecided | returned


def firewall_allow_mask(ruleset: Ruleset, cache: BoolMaskCache, start_chain: str) -> int:
    """Allowed-packet mask under the start chain plus its default policy."""
    policy = ruleset.policy(start_chain)
    wrapper = [Rule(TRUE, Call(start_chain)), Rule(TRUE, policy)]
    allow, deny, rest = chain_masks(ruleset, cache, wrapper, cache.full)
    assert rest == 0, "policy rule always decides"
    return allow


def flat_allow_mask(
    rules: list[Rule], cache: BoolMaskCache, default: FilterDecision = FilterDecision.DENY
) -> int:
    """Allowed-packet mask of a flat rule list with a default decision."""
    empty = Ruleset(chains={}, builtin_policies={})
    allow, deny, rest = chain_masks(empty, cache, rules, cache.full)
    if default == FilterDecision.ALLOW:
        allow |= rest
    return allow


# --------------------------------------------------------------------------
# Ternary masks

class TernaryMaskCache:
    """Per-primitive (true-mask, false-mask) pairs; unknown is the rest."""

    def __init__(self, packets: list[Packet], gamma: TernaryMatcher):
        self.packets = packets
        self.gamma = gamma
        self.full = (1 << len(packets)) - 1
        self._prim: dict = {}

    def prim_masks(self, prim) -> tuple[int, int]:
        masks = self._prim.get(prim)
        if masks is None:
            t = f = 0
            gamma = self.gamma
            for i, p in enumerate(self.packets):
                value = gamma(prim, p)
                if value == Ternary.TRUE:
                    t |= 1 << i
                elif value == Ternary.FALSE:
                    f |= 1 << i
            masks = (t, f)
            self._prim[prim] = masks
        return masks

    def match_masks(self, m: MatchExpr) -> tuple[int, int]:
        if isinstance(m, TrueExpr):
            return self.full, 0
        if isinstance(m, Prim):
            return self.prim_masks(m.prim)
        if isinstance(m, Not):
            t, f = self.match_masks(m.inner)
            return f, t
        if isinstance(m, And):
            lt, lf = self.match_masks(m.left)
            rt, rf = self.match_masks(m.right)
            return lt & rt, lf | rf
        raise TypeError(f"not a match expression: {m!r}")


def approx_allow_mask(
    rules: list[Rule],
    cache: TernaryMaskCache,
    tactic: Tactic,
    default: FilterDecision = FilterDecision.DENY,
) -> int:
    """Allowed-packet mask under the embedded ternary semantics."""
    undecided = cache.full
    allow = 0
    for rule in rules:
        if undecided == 0:
            break
        t, f = cache.match_masks(rule.match)
        matched = t
        if _tactic_forces_match(tactic, rule.action):
            matched |= cache.full & ~t & ~f
        matched &= undecided
        if isinstance(rule.action, Accept):
            allow |= matched
        undecided &= ~matched
    if default == FilterDecision.ALLOW:
        allow |= undecided
    return allow
