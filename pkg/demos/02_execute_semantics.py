#!/usr/bin/env python3
# Run packets through the reference interpreter and cross-examine its
# verdicts with the derivation checker (the rule-relation search).
from pathlib import Path

from fwsimp import (
    FilterDecision,
    Packet,
    check_derivation,
    default_bool_matcher,
    eval_firewall,
    parse_save,
)
from fwsimp.fmt import format_rule
from fwsimp.ipspace import parse_ipv4

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
ruleset, _ = parse_save((FIXTURES / "nas.save").read_text())

# The Boolean matcher needs a stance on opaque primitives; "nomatch"
# models the connection-setup analysis (no established state, no limit
# counters tripped, no blocked ports hit).
gamma = default_bool_matcher("nomatch")

for src, proto in (("192.168.1.5", "tcp"), ("10.0.0.1", "tcp"), ("8.8.8.8", "udp")):
    packet = Packet(parse_ipv4(src), parse_ipv4("203.0.113.9"), proto)
    trace = []
    decision = eval_firewall(ruleset, gamma, packet, "INPUT", trace=trace)
    print(f"{src:>13} {proto}: {decision.name}")
    for chain, index, rule in trace:
        print(f"    {chain}[{index}] {format_rule(rule)}")

# The same semantics, encoded as a search over the big-step rules: for
# each packet exactly one final state is derivable from "undecided",
# and it agrees with the interpreter (determinism).
packet = Packet(parse_ipv4("192.168.1.5"), 0, "tcp")
chain = ruleset.chains["INPUT"]
derivable = [
    t for t in FilterDecision
    if check_derivation(ruleset, gamma, packet, chain, FilterDecision.UNDECIDED, t)
]
print("\nderivable final states for 192.168.1.5/tcp on INPUT:",
      [t.name for t in derivable])
