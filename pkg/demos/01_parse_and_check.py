#!/usr/bin/env python3
# Parse an iptables-save dump and look around: chains, policies, the
# match-expression structure of each rule, and call-graph diagnostics.
from pathlib import Path

from fwsimp import parse_save, well_formed, check_no_loops
from fwsimp.fmt import format_rule

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

text = (FIXTURES / "nas.save").read_text()
ruleset, warnings = parse_save(text)

print("chains:", ", ".join(ruleset.chains))
print("policies:", {name: type(a).__name__ for name, a in ruleset.builtin_policies.items()})
for warning in warnings:
    print("warning:", warning)

# Each rule is a (match, action) pair.  Structured options (-s/-d/-p)
# became typed primitives; everything else is one opaque primitive per
# option run, kept verbatim.
print("\nINPUT chain:")
for i, rule in enumerate(ruleset.chains["INPUT"]):
    print(f"  [{i}] {format_rule(rule)}")

# Well-formedness: every jump target exists and is not a builtin chain.
print("\nwell-formedness violations:", well_formed(ruleset) or "none")

# The call graph must be loop-free (the kernel enforces the same); its
# depth bounds interpreter recursion and the unfolding iteration count.
loops = check_no_loops(ruleset, "INPUT")
print(f"INPUT call graph: {'ok' if loops.ok else loops.cycle}, depth {loops.depth}")
