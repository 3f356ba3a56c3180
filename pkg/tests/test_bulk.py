"""Pins the whole-universe bitmask evaluators to the scalar interpreters."""

import random

from fwsimp.bulk import (
    BoolMaskCache,
    TernaryMaskCache,
    approx_allow_mask,
    boundary_packets,
    firewall_allow_mask,
    flat_allow_mask,
    random_packets,
    toy_universe,
)
from fwsimp.model import FilterDecision, Packet, Tactic
from fwsimp.semantics import eval_firewall
from fwsimp.ternary import eval_approx

import support


def test_toy_universe_shape():
    universe = toy_universe(4)
    assert len(universe) == 16 * 16 * 4
    assert len(set(universe)) == len(universe)


def test_random_packets_deterministic():
    assert random_packets(50, 9) == random_packets(50, 9)
    assert random_packets(50, 9) != random_packets(50, 10)


def test_boundary_packets_cover_prefix_edges():
    from fwsimp.ipspace import Cidr

    cidr = Cidr.parse("192.168.0.0/16")
    packets = boundary_packets([cidr], 100, 3)
    srcs = {p.src for p in packets}
    assert cidr.base in srcs
    assert (cidr.base | cidr.host_mask) in srcs
    assert boundary_packets([cidr], 100, 3) == boundary_packets([cidr], 100, 3)


def test_firewall_mask_agrees_with_scalar_interpreter():
    universe = toy_universe(3)
    rng = random.Random(123)
    for case in range(40):
        ruleset = support.gen_ruleset(rng, width=3)
        oracle = support.RandomOracle(("bulkfw", case), universe)
        cache = BoolMaskCache(universe, oracle)
        mask = firewall_allow_mask(ruleset, cache, "INPUT")
        for i, packet in enumerate(universe):
            scalar = eval_firewall(ruleset, oracle, packet, "INPUT")
            assert (mask >> i & 1) == (scalar == FilterDecision.ALLOW), (case, packet)


def test_flat_mask_agrees_with_scalar_first_match():
    universe = toy_universe(3)
    rng = random.Random(321)
    for case in range(40):
        rules = support.gen_flat_rules(rng, 8, 3)
        oracle = support.RandomOracle(("bulkflat", case), universe)
        cache = BoolMaskCache(universe, oracle)
        for default in (FilterDecision.DENY, FilterDecision.ALLOW):
            mask = flat_allow_mask(rules, cache, default)
            for i, packet in enumerate(universe):
                scalar = support.flat_decision(rules, oracle, packet, default)
                assert (mask >> i & 1) == (scalar == FilterDecision.ALLOW)


def test_approx_mask_agrees_with_scalar_eval_approx():
    universe = toy_universe(3)
    rng = random.Random(555)
    for case in range(40):
        rules = support.gen_flat_rules(rng, 8, 3)
        oracle = support.RandomOracle(("bulk3", case), universe)
        ternary = support.RandomAgreeingTernary(oracle, p_unknown=0.4)
        cache = TernaryMaskCache(universe, ternary)
        for tactic in (Tactic.IN_DOUBT_ALLOW, Tactic.IN_DOUBT_DENY):
            mask = approx_allow_mask(rules, cache, tactic)
            for i, packet in enumerate(universe):
                scalar = eval_approx(rules, ternary, tactic, packet)
                assert (mask >> i & 1) == (scalar == FilterDecision.ALLOW)
