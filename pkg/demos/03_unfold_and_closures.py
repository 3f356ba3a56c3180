#!/usr/bin/env python3
# From the complex chain model to closures: strip the ESTABLISHED rule,
# flatten all calls/returns, then resolve every opaque primitive with
# the two in-doubt tactics to get the upper and lower closure rulesets.
from pathlib import Path

from fwsimp import (
    Ruleset,
    Tactic,
    default_ternary_matcher,
    parse_save,
    simplify_ruleset,
    strip_established_prefix,
    unfold_completely,
    optimize,
)
from fwsimp.fmt import format_rule

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
ruleset, _ = parse_save((FIXTURES / "nas.save").read_text())

# Connection-setup analysis: drop the leading accept-established rule.
stripped = strip_established_prefix(ruleset.chains["INPUT"])
ruleset = Ruleset(
    chains={**ruleset.chains, "INPUT": stripped},
    builtin_policies=ruleset.builtin_policies,
)

# Flatten.  The output embeds the default policy as its last rule, so it
# is a total filter on its own.
flat = optimize(unfold_completely(ruleset, "INPUT"))
print(f"unfolded to {len(flat)} rules:")
for rule in flat:
    print("  ", format_rule(rule))

# The bundled ternary matcher understands addresses and tcp/udp; icmp
# and every opaque option run are Unknown.  in-doubt-allow keeps every
# packet the real firewall could accept (upper closure); in-doubt-deny
# keeps only packets it accepts for certain (lower closure).
gamma = default_ternary_matcher()
upper = simplify_ruleset(flat, gamma, Tactic.IN_DOUBT_ALLOW)
lower = simplify_ruleset(flat, gamma, Tactic.IN_DOUBT_DENY)

print("\nupper closure (overapproximation):")
for rule in upper:
    print("  ", format_rule(rule))
print("lower closure (underapproximation):")
for rule in lower:
    print("  ", format_rule(rule))
# The rate limiting could hit any packet, so nothing is certainly
# accepted: the lower closure drops everything.
