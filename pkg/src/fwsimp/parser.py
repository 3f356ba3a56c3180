"""iptables-save ingestion for the filter table.

Recognized rule options are ``[!] -s CIDR``, ``[!] -d CIDR`` and
``[!] -p {tcp,udp,icmp,all}``, which become structured primitives.
Everything else is captured: a maximal run of unrecognized options
becomes one opaque primitive carrying the run's text byte-for-byte
(so ``-m icmp --icmp-type 8 -m limit --limit 1/sec`` is a single
primitive, exactly the granularity a listing shows per rule).  The
conjunction of a rule's primitives is built in scanning order,
right-associated.

Targets ACCEPT/DROP/REJECT/LOG/RETURN map to the corresponding
actions, any other target is a call to a user chain, and a rule
without ``-j`` has the Empty action.  Counters are parsed and
discarded; they never influence filtering.
"""

from __future__ import annotations

import re

from .errors import ParseError, WellFormednessError
from .ipspace import Cidr
from .model import (
    ACCEPT,
    Action,
    Call,
    DROP,
    DstCidr,
    EMPTY,
    Extra,
    LOG,
    MatchExpr,
    Not,
    Prim,
    Protocol,
    PROTOCOL_NAMES,
    REJECT,
    RETURN,
    Rule,
    Ruleset,
    SrcCidr,
    and_fold,
    well_formed,
)

_TARGET_ACTIONS: dict[str, Action] = {
    "ACCEPT": ACCEPT,
    "DROP": DROP,
    "REJECT": REJECT,
    "LOG": LOG,
    "RETURN": RETURN,
}

_CHAIN_DECL_RE = re.compile(
    r"^:(?P<name>\S+)\s+(?P<policy>ACCEPT|DROP|-)(?:\s+\[\d+:\d+\])?\s*$"
)
_COUNTER_RE = re.compile(r"^\[\d+:\d+\]$")

_Token = tuple[str, int, int]  # value (quotes resolved), start, end


def _tokenize(line: str, line_no: int) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(line)
    while i < n:
        if line[i].isspace():
            i += 1
            continue
        start = i
        if line[i] == '"':
            i += 1
            buf = []
            while i < n and line[i] != '"':
                if line[i] == "\\" and i + 1 < n:
                    buf.append(line[i + 1])
                    i += 2
                else:
                    buf.append(line[i])
                    i += 1
            if i >= n:
                raise ParseError("unterminated quote", line_no, start + 1)
            i += 1
            tokens.append(("".join(buf), start, i))
        else:
            while i < n and not line[i].isspace():
                i += 1
            tokens.append((line[start:i], start, i))
    return tokens


def _parse_cidr(value: str, line_no: int, column: int) -> Cidr:
    try:
        return Cidr.parse(value)
    except ValueError as exc:
        raise ParseError(str(exc), line_no, column) from None


def _parse_rule_spec(
    line: str, tokens: list[_Token], line_no: int, warnings: list[str]
) -> Rule:
    parts: list[MatchExpr] = []
    action: Action = EMPTY
    run_start: int | None = None  # index into tokens
    i = 0

    def flush_run(end: int) -> None:
        nonlocal run_start
        if run_start is None:
            return
        first = tokens[run_start]
        last = tokens[end - 1]
        module = ""
        raw = line[first[1]:last[2]]
        if first[0] == "-m" and end - run_start >= 2:
            module = tokens[run_start + 1][0]
            if end - run_start >= 3:
                raw = line[tokens[run_start + 2][1]:last[2]]
            else:
                raw = ""
        parts.append(Prim(Extra(module, raw)))
        run_start = None

    while i < len(tokens):
        value, start, _ = tokens[i]
        negated = False
        if value == "!" and i + 1 < len(tokens) and tokens[i + 1][0] in ("-s", "-d", "-p"):
            negated = True
            i += 1
            value, start, _ = tokens[i]

        if value in ("-s", "-d"):
            flush_run(i)
            if i + 1 >= len(tokens):
                raise ParseError(f"{value} needs an address argument", line_no, start + 1)
            cidr = _parse_cidr(tokens[i + 1][0], line_no, tokens[i + 1][1] + 1)
            prim = SrcCidr(cidr) if value == "-s" else DstCidr(cidr)
            expr: MatchExpr = Prim(prim)
            parts.append(Not(expr) if negated else expr)
            i += 2
        elif value == "-p" and i + 1 < len(tokens) and tokens[i + 1][0] in PROTOCOL_NAMES:
            flush_run(i)
            expr = Prim(Protocol(tokens[i + 1][0]))
            parts.append(Not(expr) if negated else expr)
            i += 2
        elif value == "-p":
            # unrecognized protocol name: keep the whole option opaque
            if negated:
                i -= 1  # re-include the '!' in the opaque run
            if run_start is None:
                run_start = i
            i += 2 if i + 1 < len(tokens) else 1
        elif value == "-j":
            flush_run(i)
            if i + 1 >= len(tokens):
                raise ParseError("-j needs a target", line_no, start + 1)
            target = tokens[i + 1][0]
            action = _TARGET_ACTIONS.get(target, Call(target))
            if i + 2 < len(tokens):
                dropped = line[tokens[i + 2][1]:tokens[-1][2]]
                warnings.append(
                    f"line {line_no}: dropped target options {dropped!r} "
                    "(they do not affect filtering)"
                )
            i = len(tokens)
        elif value == "-g":
            raise ParseError("goto (-g) is not supported", line_no, start + 1)
        else:
            if run_start is None:
                run_start = i
            i += 1

    flush_run(len(tokens))
    return Rule(and_fold(parts), action)


def parse_save(text: str) -> tuple[Ruleset, list[str]]:
    """Parse iptables-save text into a Ruleset plus non-fatal warnings.

    Only the filter table is read; other tables are skipped with a
    warning.  Raises ParseError for malformed lines (with position) and
    WellFormednessError when a jump targets an undeclared or builtin
    chain.
    """
    chains: dict[str, list[Rule]] = {}
    policies: dict[str, Action] = {}
    warnings: list[str] = []
    table: str | None = None

    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("*"):
            table = stripped[1:].strip()
            if table != "filter":
                warnings.append(f"line {line_no}: skipping table {table!r}")
            continue
        if stripped == "COMMIT":
            table = None
            continue
        if table is None:
            raise ParseError("directive outside a table section", line_no, 1)
        if table != "filter":
            continue

        if stripped.startswith(":"):
            decl = _CHAIN_DECL_RE.match(stripped)
            if not decl:
                raise ParseError("malformed chain declaration", line_no, 1)
            name = decl.group("name")
            if name in chains:
                raise ParseError(f"duplicate chain {name!r}", line_no, 1)
            chains[name] = []
            if decl.group("policy") != "-":
                policies[name] = ACCEPT if decl.group("policy") == "ACCEPT" else DROP
            continue

        tokens = _tokenize(line, line_no)
        if tokens and _COUNTER_RE.match(tokens[0][0]):
            tokens = tokens[1:]  # counters are irrelevant to filtering
        if not tokens or tokens[0][0] != "-A":
            raise ParseError(f"unsupported directive {stripped.split()[0]!r}", line_no, 1)
        if len(tokens) < 2:
            raise ParseError("-A needs a chain name", line_no, 1)
        chain_name = tokens[1][0]
        if chain_name not in chains:
            raise ParseError(f"rule for undeclared chain {chain_name!r}", line_no, 1)
        chains[chain_name].append(_parse_rule_spec(line, tokens[2:], line_no, warnings))

    ruleset = Ruleset(chains=chains, builtin_policies=policies)
    violations = well_formed(ruleset)
    if violations:
        raise WellFormednessError("; ".join(violations))
    return ruleset, warnings
