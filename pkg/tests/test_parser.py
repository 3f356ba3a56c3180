import json

import pytest

from fwsimp.emitter import emit_json, emit_rule_line, emit_save
from fwsimp.errors import NotEmittableError, ParseError, WellFormednessError
from fwsimp.ipspace import Cidr
from fwsimp.model import (
    ACCEPT,
    And,
    Call,
    DROP,
    DstCidr,
    EMPTY,
    Extra,
    LOG,
    Not,
    Prim,
    Protocol,
    RETURN,
    Rule,
    SrcCidr,
    TRUE,
)
from fwsimp.parser import parse_save

import support


def test_nas_parses_expected_structure():
    ruleset, warnings = parse_save(support.nas_text())
    assert warnings == []
    assert len(ruleset.chains["INPUT"]) == 7
    assert len(ruleset.chains["DOS_PROTECT"]) == 6
    assert ruleset.builtin_policies["INPUT"] == ACCEPT
    assert ruleset.chains["INPUT"][0] == Rule(TRUE, Call("DOS_PROTECT"))
    # one opaque primitive per unrecognized option run
    dos_first = ruleset.chains["DOS_PROTECT"][0]
    assert dos_first == Rule(
        And(
            Prim(Protocol("icmp")),
            Prim(Extra("icmp", "--icmp-type 8 -m limit --limit 1/sec --limit-burst 5")),
        ),
        RETURN,
    )


def test_bare_jump_is_true_match():
    ruleset, _ = parse_save("*filter\n:INPUT ACCEPT [0:0]\n-A INPUT -j ACCEPT\nCOMMIT\n")
    assert ruleset.chains["INPUT"] == [Rule(TRUE, ACCEPT)]


def test_single_module_run():
    ruleset, _ = parse_save(
        "*filter\n:INPUT ACCEPT [0:0]\n-A INPUT -m limit --limit 1/sec -j DROP\nCOMMIT\n"
    )
    assert ruleset.chains["INPUT"] == [Rule(Prim(Extra("limit", "--limit 1/sec")), DROP)]


def test_negated_and_structured_specs():
    text = (
        "*filter\n:INPUT ACCEPT [0:0]\n"
        "-A INPUT ! -s 10.0.0.0/8 -d 172.16.0.0/12 ! -p icmp -j DROP\nCOMMIT\n"
    )
    ruleset, _ = parse_save(text)
    rule = ruleset.chains["INPUT"][0]
    assert rule == Rule(
        And(
            Not(Prim(SrcCidr(Cidr.parse("10.0.0.0/8")))),
            And(
                Prim(DstCidr(Cidr.parse("172.16.0.0/12"))),
                Not(Prim(Protocol("icmp"))),
            ),
        ),
        DROP,
    )


def test_unknown_protocol_folds_into_run():
    ruleset, _ = parse_save("*filter\n:INPUT ACCEPT [0:0]\n-A INPUT -p gre -j DROP\nCOMMIT\n")
    assert ruleset.chains["INPUT"] == [Rule(Prim(Extra("", "-p gre")), DROP)]


def test_rule_without_target_is_empty_action():
    ruleset, _ = parse_save("*filter\n:INPUT ACCEPT [0:0]\n-A INPUT -p tcp\nCOMMIT\n")
    assert ruleset.chains["INPUT"] == [Rule(Prim(Protocol("tcp")), EMPTY)]


def test_protocol_all_parses_but_emits_nothing():
    ruleset, _ = parse_save("*filter\n:INPUT ACCEPT [0:0]\n-A INPUT -p all -j ACCEPT\nCOMMIT\n")
    assert ruleset.chains["INPUT"] == [Rule(Prim(Protocol("all")), ACCEPT)]
    # documented caveat: a positive -p all is absent from emitted text
    from fwsimp.emitter import emit_rule_line

    assert emit_rule_line("INPUT", ruleset.chains["INPUT"][0]) == "-A INPUT -j ACCEPT"


def test_counters_parsed_and_discarded():
    text = "*filter\n:INPUT ACCEPT [12:3456]\n[7:89] -A INPUT -j DROP\nCOMMIT\n"
    ruleset, _ = parse_save(text)
    assert ruleset.chains["INPUT"] == [Rule(TRUE, DROP)]


def test_non_filter_tables_skipped_with_warning():
    ruleset, warnings = parse_save(support.FIXTURES.joinpath("small.save").read_text())
    assert any("nat" in w for w in warnings)
    assert "PREROUTING" not in ruleset.chains
    assert len(ruleset.chains["INPUT"]) == 4


def test_target_options_warn_and_drop():
    text = '*filter\n:INPUT ACCEPT [0:0]\n-A INPUT -j LOG --log-prefix "x y"\nCOMMIT\n'
    ruleset, warnings = parse_save(text)
    assert ruleset.chains["INPUT"] == [Rule(TRUE, LOG)]
    assert any("--log-prefix" in w for w in warnings)


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as err:
        parse_save("*filter\n:INPUT ACCEPT [0:0]\n-A INPUT -s notanip -j DROP\nCOMMIT\n")
    assert err.value.line == 3
    with pytest.raises(ParseError):
        parse_save("-A INPUT -j ACCEPT\n")  # outside any table
    with pytest.raises(ParseError):
        parse_save("*filter\n:INPUT ACCEPT [0:0]\n-A GHOST -j ACCEPT\nCOMMIT\n")
    with pytest.raises(ParseError):
        parse_save("*filter\n:INPUT ACCEPT [0:0]\n-A INPUT -g FOO\nCOMMIT\n")


def test_undeclared_call_target_is_wellformedness_error():
    with pytest.raises(WellFormednessError) as err:
        parse_save("*filter\n:INPUT ACCEPT [0:0]\n-A INPUT -j GHOST\nCOMMIT\n")
    assert "GHOST" in str(err.value)


# --------------------------------------------------------------------------
# Emission

def test_emit_single_drop():
    text = emit_save([Rule(TRUE, DROP)], "INPUT", ACCEPT)
    lines = text.splitlines()
    assert lines == ["*filter", ":INPUT ACCEPT [0:0]", "-A INPUT -j DROP", "COMMIT"]


def test_emit_simplified_closure_lines():
    rules = [
        Rule(Prim(SrcCidr(Cidr.parse("192.168.0.0/16"))), ACCEPT),
        Rule(TRUE, DROP),
    ]
    text = emit_save(rules, "INPUT", ACCEPT)
    assert "-A INPUT -s 192.168.0.0/16 -j ACCEPT" in text
    assert "-A INPUT -j DROP" in text


def test_emit_round_trip_on_fixtures():
    for name in ("nas.save", "small.save", "cyclic.save"):
        original, _ = parse_save((support.FIXTURES / name).read_text())
        emitted = emit_save(original)
        reparsed, _ = parse_save(emitted)
        assert reparsed.chains == original.chains, name
        assert reparsed.builtin_policies == original.builtin_policies, name
        # and emission is a fixpoint from there on
        assert emit_save(reparsed) == emitted, name


def test_extra_text_verbatim_in_output():
    ruleset, _ = parse_save(support.nas_text())
    emitted = emit_save(ruleset)
    assert "--icmp-type 8 -m limit --limit 1/sec --limit-burst 5" in emitted
    assert "--dports 21,873,5005,5006,80,548,111,2049,892" in emitted


def test_emit_rejects_multiple_positive_sources():
    rule = Rule(
        And(
            Prim(SrcCidr(Cidr.parse("10.0.0.0/8"))),
            Prim(SrcCidr(Cidr.parse("192.168.0.0/16"))),
        ),
        ACCEPT,
    )
    with pytest.raises(NotEmittableError):
        emit_rule_line("INPUT", rule)


def test_emit_rejects_non_nnf_and_negated_extras():
    with pytest.raises(NotEmittableError):
        emit_rule_line("INPUT", Rule(Not(And(TRUE, TRUE)), ACCEPT))
    with pytest.raises(NotEmittableError):
        emit_rule_line("INPUT", Rule(Not(Prim(Extra("limit", "--limit 1/s"))), ACCEPT))


def test_emit_negated_cidr_syntax():
    rule = Rule(Not(Prim(SrcCidr(Cidr.parse("10.0.0.0/8")))), DROP)
    assert emit_rule_line("INPUT", rule) == "-A INPUT ! -s 10.0.0.0/8 -j DROP"


def test_emit_json_schema():
    assert json.loads(emit_json([])) == {"schema": 1, "rules": []}
    payload = json.loads(emit_json([Rule(TRUE, ACCEPT)]))
    assert payload["rules"] == [{"match": {"kind": "true"}, "action": {"kind": "accept"}}]


def test_emit_json_deterministic_and_injective():
    corpus = []
    for name in ("nas.save", "small.save", "cyclic.save"):
        ruleset, _ = parse_save((support.FIXTURES / name).read_text())
        corpus.extend(ruleset.chains.values())
    for rules in corpus:
        assert emit_json(rules) == emit_json(rules)  # deterministic
    for i, a in enumerate(corpus):
        for b in corpus[i + 1:]:
            if a != b:
                assert emit_json(a) != emit_json(b)  # distinct structure -> distinct JSON
            else:
                assert emit_json(a) == emit_json(b)
