#!/usr/bin/env python3
# Negation normal form and re-emission: unfolding produces negated
# conjunctions that no single iptables rule can express; normalization
# splits them into runs of plain rules, compression folds repeated
# address primitives, and the result feeds straight back to iptables.
import json
from pathlib import Path

from fwsimp import (
    ACCEPT,
    Rule,
    Ruleset,
    Tactic,
    compress_rule,
    default_ternary_matcher,
    emit_json,
    emit_save,
    nnf_normalize,
    normalize_rules,
    parse_save,
    simplify_ruleset,
    strip_established_prefix,
    unfold_completely,
    optimize,
)
from fwsimp.fmt import format_match, format_rule, parse_match

# A negated conjunction becomes a run of rules sharing the action:
m = parse_match('!(src 192.168.0.0/16 & proto tcp)')
print(f"n({format_match(m)}) =")
for part in nnf_normalize(m):
    print("   ", format_match(part))

# Repeated primitives of one type collapse to their intersection:
rule = Rule(parse_match("(src 192.168.0.0/16 & (src 192.168.1.0/24 & proto tcp))"), ACCEPT)
print("\ncompressed:", format_rule(compress_rule(rule)))

# End to end on the NAS ruleset: the 9 unfolded rules normalize to 20
# NNF rules, and the upper closure shrinks to two emittable lines.
FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
ruleset, _ = parse_save((FIXTURES / "nas.save").read_text())
stripped = strip_established_prefix(ruleset.chains["INPUT"])
ruleset = Ruleset(
    chains={**ruleset.chains, "INPUT": stripped},
    builtin_policies=ruleset.builtin_policies,
)
flat = optimize(unfold_completely(ruleset, "INPUT"))
normalized = normalize_rules(flat)
print(f"\n{len(flat)} unfolded rules -> {len(normalized)} NNF rules")

upper = simplify_ruleset(normalized, default_ternary_matcher(), Tactic.IN_DOUBT_ALLOW)
upper = [r for r in (compress_rule(rule) for rule in upper) if r is not None]

print("\niptables-save form of the upper closure:")
print(emit_save(upper, "INPUT", ruleset.builtin_policies["INPUT"]))
print("JSON dump:")
print(json.dumps(json.loads(emit_json(upper)), indent=2, sort_keys=True))
