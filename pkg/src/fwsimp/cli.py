"""Command line front end.

Four batch subcommands over iptables-save files:

    fwsimp check RULESET
    fwsimp simplify RULESET --chain INPUT --tactic allow [...]
    fwsimp eval RULESET --src IP --dst IP --proto P [...]
    fwsimp diff A B --universe width4|sample [...]

stdout carries only the artifact (ruleset text, decision, report);
stage telemetry goes to stderr so output can be piped.  Exit codes are
stable: 0 ok, 1 findings (violations, differences), 2 unreadable or
unparsable input, 3 call loop, 4 normalization blowup or universe cap,
5 opaque primitive hit under --assume-unknown error.
"""

from __future__ import annotations

import argparse
import sys

from .bulk import BoolMaskCache, boundary_packets, firewall_allow_mask, flat_allow_mask, toy_universe
from .emitter import emit_json, emit_save
from .errors import (
    BlowupLimitExceededError,
    FwsimpError,
    NotConvergedError,
    ParseError,
    UnknownPrimitiveError,
    WellFormednessError,
)
from .fmt import format_rule
from .ipspace import Cidr, compress_rule, format_ipv4, parse_ipv4
from .matchers import default_bool_matcher, default_ternary_matcher
from .model import (
    BUILTIN_CHAINS,
    DstCidr,
    Packet,
    Ruleset,
    SrcCidr,
    Tactic,
    match_primitives,
)
from .normalize import blowup_limit_from_env, is_nnf, normalize_rules
from .parser import parse_save
from .semantics import check_no_loops, eval_firewall
from .ternary import simplify_ruleset, strip_established_prefix
from .unfold import optimize, unfold_completely

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_PARSE = 2
EXIT_LOOP = 3
EXIT_LIMIT = 4
EXIT_UNKNOWN = 5

UNIVERSE_CELL_CAP = 1_000_000


def _read_ruleset(path: str) -> tuple[Ruleset, list[str]]:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    return parse_save(text)


def _stage(name: str, count: int) -> None:
    print(f"{name}: {count}", file=sys.stderr)


def cmd_check(args) -> int:
    try:
        ruleset, warnings = _read_ruleset(args.ruleset)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except WellFormednessError as exc:
        print(f"not well-formed: {exc}")
        return EXIT_FINDINGS

    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)

    print(f"well-formed: {len(ruleset.chains)} chains")
    status = EXIT_OK
    for name in ruleset.chains:
        if name not in BUILTIN_CHAINS and not args.all_chains:
            continue
        loops = check_no_loops(ruleset, name)
        if loops.ok:
            print(f"{name}: call depth {loops.depth}")
        else:
            print(f"{name}: call loop {' -> '.join(loops.cycle)}")
            status = EXIT_FINDINGS
    return status


def cmd_simplify(args) -> int:
    try:
        ruleset, warnings = _read_ruleset(args.ruleset)
    except (OSError, ParseError, WellFormednessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)

    chain = args.chain
    if chain not in ruleset.chains or chain not in ruleset.builtin_policies:
        print(f"error: no builtin chain {chain!r} with a policy", file=sys.stderr)
        return EXIT_PARSE

    loops = check_no_loops(ruleset, chain)
    if not loops.ok:
        print(f"error: call loop {' -> '.join(loops.cycle)}", file=sys.stderr)
        return EXIT_LOOP

    rules = ruleset.chains[chain]
    _stage("parsed", len(rules))
    if args.strip_established:
        rules = strip_established_prefix(rules)
        _stage("stripped", len(rules))
        ruleset = Ruleset(
            chains={**ruleset.chains, chain: rules},
            builtin_policies=ruleset.builtin_policies,
        )

    working = optimize(unfold_completely(ruleset, chain))
    _stage("unfolded", len(working))

    if not args.no_normalize:
        try:
            working = normalize_rules(working, blowup_limit_from_env(args.blowup_limit))
        except BlowupLimitExceededError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_LIMIT
        _stage("normalized", len(working))

    tactic = Tactic.IN_DOUBT_ALLOW if args.tactic == "allow" else Tactic.IN_DOUBT_DENY
    working = simplify_ruleset(working, default_ternary_matcher(), tactic)
    _stage("simplified", len(working))

    if all(is_nnf(rule.match) for rule in working):
        compressed = []
        for rule in working:
            packed = compress_rule(rule)
            if packed is not None:
                compressed.append(packed)
        working = compressed
        _stage("compressed", len(working))
    else:
        print("compression skipped: matches not in NNF", file=sys.stderr)

    if args.format == "json":
        output = emit_json(working) + "\n"
    else:
        output = emit_save(working, chain, ruleset.builtin_policies[chain])

    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(output)
    else:
        sys.stdout.write(output)
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        ruleset, _ = _read_ruleset(args.ruleset)
    except (OSError, ParseError, WellFormednessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.chain not in ruleset.builtin_policies:
        print(f"error: no builtin chain {args.chain!r} with a policy", file=sys.stderr)
        return EXIT_PARSE

    try:
        packet = Packet(parse_ipv4(args.src), parse_ipv4(args.dst), args.proto)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    gamma = default_bool_matcher(args.assume_unknown)
    trace = []
    try:
        decision = eval_firewall(ruleset, gamma, packet, args.chain, trace=trace)
    except UnknownPrimitiveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN

    print(decision.name)
    for chain_name, index, rule in trace:
        print(f"  {chain_name}[{index}] {format_rule(rule)}")
    return EXIT_OK


def _collect_cidrs(rulesets: list[Ruleset]) -> list[Cidr]:
    cidrs = []
    for ruleset in rulesets:
        for rules in ruleset.chains.values():
            for rule in rules:
                for prim in match_primitives(rule.match):
                    if isinstance(prim, (SrcCidr, DstCidr)):
                        cidrs.append(prim.cidr)
    return cidrs


def _format_packet(p: Packet, width: int) -> str:
    if width == 32:
        return f"src {format_ipv4(p.src)} dst {format_ipv4(p.dst)} proto {p.protocol}"
    return f"src {p.src} dst {p.dst} proto {p.protocol}"


def cmd_diff(args) -> int:
    try:
        ruleset_a, _ = _read_ruleset(args.ruleset_a)
        ruleset_b, _ = _read_ruleset(args.ruleset_b)
    except (OSError, ParseError, WellFormednessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    if args.universe == "sample":
        packets = boundary_packets(
            _collect_cidrs([ruleset_a, ruleset_b]), args.samples, args.seed
        )
        width = 32
        print(f"universe: sample n={len(packets)} seed={args.seed}")
    else:
        width = int(args.universe.removeprefix("width"))
        cells = (1 << width) ** 2 * 4
        if cells > UNIVERSE_CELL_CAP:
            print(
                f"error: width-{width} universe has {cells} packets, cap is {UNIVERSE_CELL_CAP}",
                file=sys.stderr,
            )
            return EXIT_LIMIT
        packets = toy_universe(width)
        print(f"universe: width{width} ({len(packets)} packets)")
    print(f"assume-unknown: {args.assume_unknown}")

    gamma = default_bool_matcher(args.assume_unknown)

    def allow_mask(ruleset: Ruleset, side: str) -> int:
        cache = BoolMaskCache(packets, gamma)
        if args.unfold in (side, "both"):
            flat = optimize(unfold_completely(ruleset, args.chain))
            return flat_allow_mask(flat, cache)
        return firewall_allow_mask(ruleset, cache, args.chain)

    try:
        mask_a = allow_mask(ruleset_a, "a")
        mask_b = allow_mask(ruleset_b, "b")
    except (NotConvergedError, FwsimpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    differing = mask_a ^ mask_b
    count = bin(differing).count("1")
    print(f"differing packets: {count}")
    shown = 0
    for i, packet in enumerate(packets):
        if differing >> i & 1:
            a = "ALLOW" if mask_a >> i & 1 else "DENY"
            b = "ALLOW" if mask_b >> i & 1 else "DENY"
            print(f"  {_format_packet(packet, width)}: a={a} b={b}")
            shown += 1
            if shown >= args.show:
                break
    if count > shown:
        print(f"  ... and {count - shown} more")
    return EXIT_OK if count == 0 else EXIT_FINDINGS


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fwsimp",
        description="Parse, execute, and verifiably simplify iptables filter rulesets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="well-formedness and call-loop diagnostics")
    p_check.add_argument("ruleset")
    p_check.add_argument(
        "--all-chains", action="store_true", help="report call depth for user chains too"
    )
    p_check.set_defaults(func=cmd_check)

    p_simplify = sub.add_parser(
        "simplify", help="unfold, close over unknowns, normalize, compress, emit"
    )
    p_simplify.add_argument("ruleset")
    p_simplify.add_argument("--chain", default="INPUT")
    p_simplify.add_argument("--tactic", choices=("allow", "deny"), default="allow")
    p_simplify.add_argument("--strip-established", action="store_true")
    p_simplify.add_argument("--no-normalize", action="store_true")
    p_simplify.add_argument("--blowup-limit", type=int, default=None)
    p_simplify.add_argument("--format", choices=("save", "json"), default="save")
    p_simplify.add_argument("--out", default=None)
    p_simplify.set_defaults(func=cmd_simplify)

    p_eval = sub.add_parser("eval", help="filter one packet and show the matched rules")
    p_eval.add_argument("ruleset")
    p_eval.add_argument("--chain", default="INPUT")
    p_eval.add_argument("--src", required=True)
    p_eval.add_argument("--dst", required=True)
    p_eval.add_argument("--proto", choices=("tcp", "udp", "icmp", "other"), default="tcp")
    p_eval.add_argument(
        "--assume-unknown", choices=("match", "nomatch", "error"), default="nomatch"
    )
    p_eval.set_defaults(func=cmd_eval)

    p_diff = sub.add_parser("diff", help="compare two rulesets over a packet universe")
    p_diff.add_argument("ruleset_a")
    p_diff.add_argument("ruleset_b")
    p_diff.add_argument("--chain", default="INPUT")
    p_diff.add_argument(
        "--universe",
        default="sample",
        help="'widthN' enumerates an N-bit toy space exhaustively; 'sample' probes prefix edges plus seeded random packets",
    )
    p_diff.add_argument("--samples", type=int, default=10_000)
    p_diff.add_argument("--seed", type=int, default=0)
    p_diff.add_argument("--show", type=int, default=20, help="max differing packets to list")
    p_diff.add_argument("--assume-unknown", choices=("match", "nomatch"), default="nomatch")
    p_diff.add_argument(
        "--unfold",
        choices=("none", "a", "b", "both"),
        default="none",
        help="flatten the given side in memory before comparing",
    )
    p_diff.set_defaults(func=cmd_diff)
    return parser


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    if args.command == "diff" and args.universe != "sample":
        if not args.universe.startswith("width") or not args.universe[5:].isdigit():
            print(f"error: bad --universe {args.universe!r}", file=sys.stderr)
            return EXIT_PARSE
    return args.func(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
