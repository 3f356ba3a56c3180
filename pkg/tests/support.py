"""Shared test helpers: deterministic generators and scalar oracles."""

from __future__ import annotations

import random
from pathlib import Path

from fwsimp.ipspace import Cidr
from fwsimp.matchers import default_bool_matcher
from fwsimp.model import (
    ACCEPT,
    DROP,
    EMPTY,
    LOG,
    REJECT,
    RETURN,
    And,
    Call,
    DstCidr,
    Extra,
    FilterDecision,
    Not,
    Packet,
    Prim,
    Protocol,
    Rule,
    Ruleset,
    SrcCidr,
    Ternary,
    TRUE,
    match_eval_bool,
)

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"

EXTRA_POOL = [Extra(f"mod{i}", f"--opt {i}") for i in range(6)]


def nas_text() -> str:
    return (FIXTURES / "nas.save").read_text()


# --------------------------------------------------------------------------
# Random model generators (all driven by an explicit random.Random)

def gen_cidr(rng: random.Random, width: int) -> Cidr:
    prefix_len = rng.randint(0, width)
    return Cidr.make(rng.getrandbits(width), prefix_len, width)


def gen_primitive(rng: random.Random, width: int, extra_weight: float = 0.3):
    roll = rng.random()
    if roll < extra_weight:
        return rng.choice(EXTRA_POOL)
    if roll < extra_weight + 0.3:
        return SrcCidr(gen_cidr(rng, width))
    if roll < extra_weight + 0.6:
        return DstCidr(gen_cidr(rng, width))
    return Protocol(rng.choice(("tcp", "udp", "icmp", "all")))


def gen_mexpr(rng: random.Random, width: int, depth: int, extra_weight: float = 0.3):
    if depth <= 0:
        return Prim(gen_primitive(rng, width, extra_weight)) if rng.random() < 0.9 else TRUE
    roll = rng.random()
    if roll < 0.10:
        return TRUE
    if roll < 0.50:
        return Prim(gen_primitive(rng, width, extra_weight))
    if roll < 0.72:
        return Not(gen_mexpr(rng, width, depth - 1, extra_weight))
    return And(
        gen_mexpr(rng, width, depth - 1, extra_weight),
        gen_mexpr(rng, width, depth - 1, extra_weight),
    )


def gen_flat_rules(rng: random.Random, max_rules: int, width: int, depth: int = 3,
                   extra_weight: float = 0.3) -> list[Rule]:
    """Random unfolded Accept/Drop rule list."""
    return [
        Rule(gen_mexpr(rng, width, rng.randint(0, depth), extra_weight),
             ACCEPT if rng.random() < 0.5 else DROP)
        for _ in range(rng.randint(0, max_rules))
    ]


def gen_ruleset(
    rng: random.Random,
    width: int = 4,
    max_user_chains: int = 3,
    max_rules: int = 8,
    allow_top_return: bool = True,
) -> Ruleset:
    """Random well-formed, loop-free ruleset rooted at INPUT.

    User chains are ordered and may only call later ones, so the call
    graph is acyclic with depth at most the number of user chains.
    """
    n_user = rng.randint(0, max_user_chains)
    names = ["INPUT"] + [f"C{i}" for i in range(n_user)]
    chains: dict[str, list[Rule]] = {}
    for pos, name in enumerate(names):
        callees = names[pos + 1:]
        rules = []
        for _ in range(rng.randint(0, max_rules)):
            match = gen_mexpr(rng, width, rng.randint(0, 3))
            roll = rng.random()
            if roll < 0.22:
                action = ACCEPT
            elif roll < 0.44:
                action = DROP
            elif roll < 0.52:
                action = REJECT
            elif roll < 0.58:
                action = LOG
            elif roll < 0.64:
                action = EMPTY
            elif roll < 0.82 and callees:
                action = Call(rng.choice(callees))
            elif roll < 0.97 and (name != "INPUT" or allow_top_return):
                action = RETURN
            else:
                action = ACCEPT
            rules.append(Rule(match, action))
        chains[name] = rules
    policy = ACCEPT if rng.random() < 0.5 else DROP
    return Ruleset(chains=chains, builtin_policies={"INPUT": policy})


# --------------------------------------------------------------------------
# Random matchers (arbitrary oracles, deterministic across runs)

def _stable_rng(*parts) -> random.Random:
    return random.Random("|".join(str(p) for p in parts))


class RandomOracle:
    """An arbitrary Boolean matcher: every primitive gets a random packet set.

    This models the semantics' fully abstract matcher; nothing about a
    primitive's structure is honored, which is the strongest way to
    exercise matcher-independent guarantees.
    """

    def __init__(self, seed, packets: list[Packet]):
        self.seed = seed
        self.packets = packets
        self.index = {p: i for i, p in enumerate(packets)}
        self.masks: dict = {}

    def mask(self, prim) -> int:
        mask = self.masks.get(prim)
        if mask is None:
            mask = _stable_rng(self.seed, repr(prim)).getrandbits(len(self.packets))
            self.masks[prim] = mask
        return mask

    def __call__(self, prim, packet: Packet) -> bool:
        return bool(self.mask(prim) >> self.index[packet] & 1)


class SemiRandomOracle:
    """Random on opaque primitives, concrete on src/dst/protocol.

    Matcher-specific optimizations (rewriting ``src 0.0.0.0/0`` to
    true) are only sound when CIDR and protocol primitives mean what
    the packet model says; this oracle honors that while leaving every
    opaque primitive an arbitrary packet set.
    """

    def __init__(self, seed, packets: list[Packet]):
        self._random = RandomOracle(seed, packets)
        self._default = default_bool_matcher()

    def __call__(self, prim, packet: Packet) -> bool:
        if isinstance(prim, Extra):
            return self._random(prim, packet)
        return self._default(prim, packet)


class RandomAgreeingTernary:
    """Ternary matcher agreeing with a RandomOracle.

    Each primitive is independently classified unknown with probability
    ``p_unknown`` (statically, like the production matcher); known
    primitives answer exactly like the Boolean oracle.
    """

    def __init__(self, oracle: RandomOracle, p_unknown: float = 0.4, salt: str = "unknown"):
        self.oracle = oracle
        self.p_unknown = p_unknown
        self.salt = salt
        self._unknown: dict = {}

    def is_unknown(self, prim) -> bool:
        value = self._unknown.get(prim)
        if value is None:
            value = _stable_rng(self.oracle.seed, self.salt, repr(prim)).random() < self.p_unknown
            self._unknown[prim] = value
        return value

    def __call__(self, prim, packet: Packet) -> Ternary:
        if self.is_unknown(prim):
            return Ternary.UNKNOWN
        return Ternary.TRUE if self.oracle(prim, packet) else Ternary.FALSE


# --------------------------------------------------------------------------
# Scalar oracles

def explicit_ternary(unknown_prims, gamma_bool):
    """Ternary matcher with a fixed unknown set over a Boolean matcher."""
    unknown = set(unknown_prims)

    def gamma(prim, packet):
        if prim in unknown:
            return Ternary.UNKNOWN
        return Ternary.TRUE if gamma_bool(prim, packet) else Ternary.FALSE

    return gamma


def flat_decision(rules: list[Rule], gamma, packet: Packet,
                  default: FilterDecision = FilterDecision.DENY) -> FilterDecision:
    """First-match Boolean evaluation of a flat Accept/Drop list."""
    from fwsimp.model import Accept, Drop, Reject

    for rule in rules:
        if match_eval_bool(gamma, rule.match, packet):
            if isinstance(rule.action, Accept):
                return FilterDecision.ALLOW
            if isinstance(rule.action, (Drop, Reject)):
                return FilterDecision.DENY
            raise AssertionError(f"not a flat rule action: {rule.action!r}")
    return default


def cidr_member_set(cidr: Cidr) -> frozenset[int]:
    """Brute-force membership set of a prefix (independent of cidr_contains)."""
    lo = cidr.base
    hi = cidr.base | ((1 << (cidr.width - cidr.prefix_len)) - 1)
    return frozenset(range(lo, hi + 1))
