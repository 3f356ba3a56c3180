import random

import pytest

from fwsimp.bulk import BoolMaskCache, TernaryMaskCache, approx_allow_mask, flat_allow_mask, toy_universe
from fwsimp.errors import BlowupLimitExceededError
from fwsimp.model import (
    ACCEPT,
    And,
    DROP,
    Extra,
    Not,
    Prim,
    Protocol,
    Rule,
    SrcCidr,
    Tactic,
    TRUE,
)
from fwsimp.ipspace import Cidr
from fwsimp.normalize import is_nnf, nnf_normalize, normalize_rules

import support

SRC = Prim(SrcCidr(Cidr.parse("192.168.0.0/16")))
TCP = Prim(Protocol("tcp"))


def test_equation_true():
    assert nnf_normalize(TRUE) == [TRUE]


def test_equation_de_morgan():
    assert nnf_normalize(Not(And(SRC, TCP))) == [Not(SRC), Not(TCP)]


def test_equation_not_true_vanishes():
    assert nnf_normalize(Not(TRUE)) == []


def test_equation_literals():
    assert nnf_normalize(SRC) == [SRC]
    assert nnf_normalize(Not(SRC)) == [Not(SRC)]
    assert nnf_normalize(Not(Not(SRC))) == [SRC]


def test_distributive_order_left_outer():
    m = And(Not(And(SRC, TCP)), Not(And(TCP, SRC)))
    assert nnf_normalize(m) == [
        And(Not(SRC), Not(TCP)),
        And(Not(SRC), Not(SRC)),
        And(Not(TCP), Not(TCP)),
        And(Not(TCP), Not(SRC)),
    ]


def test_is_nnf():
    assert is_nnf(And(Not(SRC), TCP))
    assert not is_nnf(Not(And(SRC, TCP)))
    assert is_nnf(TRUE)
    assert not is_nnf(Not(TRUE))
    assert not is_nnf(Not(Not(SRC)))


def test_normalize_rules_examples():
    assert normalize_rules([Rule(Not(TRUE), ACCEPT)]) == []
    single = [Rule(And(Not(SRC), TCP), DROP)]
    assert normalize_rules(single) == single


def test_blowup_cap():
    # 2^n expansion from nested negated conjunctions
    m = Not(And(SRC, TCP))
    for _ in range(12):
        m = And(m, Not(And(SRC, TCP)))
    with pytest.raises(BlowupLimitExceededError):
        nnf_normalize(m, limit=1000)
    try:
        normalize_rules([Rule(TRUE, ACCEPT), Rule(m, DROP)], limit=1000)
    except BlowupLimitExceededError as exc:
        assert exc.rule_index == 1
    else:
        pytest.fail("expected BlowupLimitExceededError")


def test_cardinality_laws_randomized():
    rng = random.Random(17)
    for _ in range(200):
        m1 = support.gen_mexpr(rng, 4, rng.randint(0, 4))
        m2 = support.gen_mexpr(rng, 4, rng.randint(0, 4))
        n1 = len(nnf_normalize(m1))
        n2 = len(nnf_normalize(m2))
        assert len(nnf_normalize(And(m1, m2))) == n1 * n2
        neg1 = len(nnf_normalize(Not(m1)))
        neg2 = len(nnf_normalize(Not(m2)))
        assert len(nnf_normalize(Not(And(m1, m2)))) == neg1 + neg2


def test_every_output_is_nnf_randomized():
    rng = random.Random(23)
    for _ in range(300):
        m = support.gen_mexpr(rng, 4, rng.randint(0, 6))
        assert all(is_nnf(out) for out in nnf_normalize(m))


def test_normalize_preserves_exact_and_approx_semantics():
    universe = toy_universe(4)
    rng = random.Random(31)
    for case in range(60):
        rules = support.gen_flat_rules(rng, 6, 4, depth=4)
        oracle = support.RandomOracle(("nnf", case), universe)
        ternary = support.RandomAgreeingTernary(oracle, p_unknown=0.3)
        normalized = normalize_rules(rules)
        assert all(is_nnf(r.match) for r in normalized)
        bool_cache = BoolMaskCache(universe, oracle)
        assert flat_allow_mask(rules, bool_cache) == flat_allow_mask(normalized, bool_cache)
        t_cache = TernaryMaskCache(universe, ternary)
        for tactic in (Tactic.IN_DOUBT_ALLOW, Tactic.IN_DOUBT_DENY):
            assert approx_allow_mask(rules, t_cache, tactic) == approx_allow_mask(
                normalized, t_cache, tactic
            ), (case, tactic)


def test_termination_on_deep_trees():
    rng = random.Random(41)
    for _ in range(50):
        m = support.gen_mexpr(rng, 4, 8)
        nnf_normalize(m)  # must terminate without the cap intervening
