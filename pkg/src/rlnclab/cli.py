"""``rlnc-lab`` command line.

Every command builds a report (parameters, column names, rows of strings) and
renders it as an aligned table, CSV or JSON.  Exact rationals are printed as
reduced ``a/b`` strings next to their decimal renderings.

Exit codes: 0 success, 2 parse or configuration error, 3 enumeration budget
exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from decimal import ROUND_HALF_EVEN, Context, Decimal
from fractions import Fraction

from . import closed_form
from .field import FieldError, parse_field, parse_field_order, prime_power
from .network import NetworkError, load_network, validate
from .probability import (
    DEFAULT_BUDGET,
    ErasureModel,
    SearchSpaceTooLarge,
    enumerate_exact,
    erasure_polynomial,
    monte_carlo,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_PARSE, EXIT_BUDGET = 0, 2, 3
TARGETS = ("sink", "network", "average")


class ParseError(ValueError):
    pass


# -- rendering -------------------------------------------------------------------


def exact(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def decimal(x, precision: int) -> str:
    """Round-half-even rendering to ``precision`` significant digits."""
    x = Fraction(x)
    ctx = Context(prec=precision, rounding=ROUND_HALF_EVEN)
    value = ctx.divide(Decimal(x.numerator), Decimal(x.denominator))
    if value == 0:
        return "0"
    # pad so every value shows the same number of significant digits
    value = value.quantize(Decimal(1).scaleb(value.adjusted() - precision + 1), context=ctx)
    return format(value, "f")


class Report:
    def __init__(self, command: str, parameters: dict, columns: list[str]):
        self.command = command
        self.parameters = parameters
        self.columns = columns
        self.rows: list[dict[str, str]] = []
        self.notes: list[str] = []
        self.exit_code = EXIT_OK

    def add(self, **row) -> None:
        self.rows.append({c: str(row.get(c, "")) for c in self.columns})

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "parameters": self.parameters,
            "columns": self.columns,
            "rows": self.rows,
            "notes": self.notes,
        }

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.to_dict(), indent=2) + "\n"
        if fmt == "csv":
            buf = io.StringIO()
            writer = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows)
            return buf.getvalue()
        widths = {c: max([len(c)] + [len(r[c]) for r in self.rows]) for c in self.columns}
        lines = ["  ".join(c.ljust(widths[c]) for c in self.columns).rstrip()]
        lines.append("  ".join("-" * widths[c] for c in self.columns))
        for r in self.rows:
            lines.append("  ".join(r[c].ljust(widths[c]) for c in self.columns).rstrip())
        header = f"# {self.command}: " + ", ".join(f"{k}={v}" for k, v in self.parameters.items())
        return "\n".join([header, *lines, *(f"# {n}" for n in self.notes)]) + "\n"


# -- argument parsing ------------------------------------------------------------


def parse_rational(text: str, name: str = "value") -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError, AttributeError):
        raise ParseError(f"cannot parse {name} {text!r}; expected a/b or a decimal") from None


def parse_erasure(text: str | None) -> Fraction:
    if text is None:
        return Fraction(0)
    p = parse_rational(text, "erasure probability")
    if not 0 <= p <= 1:
        raise ParseError(f"erasure probability {text!r} must lie in [0, 1]")
    return p


def parse_order(text: str) -> int:
    try:
        q = parse_field_order(text)
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    if q < 2:
        raise ParseError(f"field order must be >= 2 in {text!r}")
    return q


_RANGE = re.compile(r"^(\d+)\.\.(\d+)$")


def parse_q_list(text: str) -> list[int]:
    """``2..8``, ``2,3,4`` or a mix such as ``2..4,8,16``; empty ranges are allowed."""
    out: list[int] = []
    for part in filter(None, (s.strip() for s in text.split(","))):
        m = _RANGE.match(part)
        if m:
            out.extend(range(int(m.group(1)), int(m.group(2)) + 1))
        else:
            out.append(parse_order(part))
    for q in out:
        if q < 2:
            raise ParseError(f"field order must be >= 2, got {q}")
    return out


def _realizable(q: int, max_order=None):
    try:
        return parse_field(f"gf({q})")
    except FieldError as exc:
        raise ParseError(str(exc)) from None


def _network(ref: str, check: bool = True):
    try:
        return load_network(ref, check)
    except NetworkError as exc:
        raise ParseError(str(exc)) from None


# -- commands --------------------------------------------------------------------


def cmd_formula(args) -> Report:
    q = parse_order(args.field)
    p = parse_erasure(args.erasure)
    rep = Report(
        "formula",
        {"field": f"gf({q})", "erasure": exact(p), "realizable": prime_power(q) is not None},
        ["target", "failure", "failure_decimal", "success", "success_decimal"],
    )
    for target in TARGETS:
        fail = closed_form.butterfly_failure(q, p, target)
        rep.add(
            target=target,
            failure=exact(fail),
            failure_decimal=decimal(fail, args.precision),
            success=exact(1 - fail),
            success_decimal=decimal(1 - fail, args.precision),
        )
    return rep


def _exact_rows(rep: Report, result, precision: int) -> None:
    tally = result.tally
    items = [(f"sink:{t}", v) for t, v in result.per_sink.items()]
    items += [("network", result.network), ("average", result.average)]
    for target, fail in items:
        row = dict(
            target=target,
            failure=exact(fail),
            failure_decimal=decimal(fail, precision),
            success=exact(1 - fail),
            success_decimal=decimal(1 - fail, precision),
        )
        if tally is not None:
            if target.startswith("sink:"):
                row["successes"] = tally.per_sink_success[target[5:]]
            elif target == "network":
                row["successes"] = tally.network_success
            row["total"] = tally.total
        rep.add(**row)


def cmd_enumerate(args) -> Report:
    spec = _network(args.network)
    field = _realizable(parse_order(args.field))
    p = parse_erasure(args.erasure)
    result = enumerate_exact(spec, field, ErasureModel(p) if args.erasure is not None else None, budget=args.budget)
    rep = Report(
        "enumerate",
        {"network": args.network, "field": str(field), "erasure": exact(p)},
        ["target", "failure", "failure_decimal", "success", "success_decimal", "successes", "total"],
    )
    _exact_rows(rep, result, args.precision)
    return rep


def cmd_simulate(args) -> Report:
    spec = _network(args.network)
    field = _realizable(parse_order(args.field))
    p = parse_erasure(args.erasure)
    if args.trials < 1:
        raise ParseError("--trials must be >= 1")
    result = monte_carlo(spec, field, ErasureModel(p) if p else None, args.trials, args.seed)
    rep = Report(
        "simulate",
        {"network": args.network, "field": str(field), "erasure": exact(p), "trials": args.trials, "seed": args.seed},
        ["target", "failure", "success", "std_error", "ci_low", "ci_high", "successes"],
    )
    tally = result.tally
    items = [(f"sink:{t}", v) for t, v in result.per_sink.items()]
    items += [("network", result.network), ("average", result.average)]
    for target, est in items:
        lo, hi = est.interval()
        succ = ""
        if target.startswith("sink:"):
            succ = tally.per_sink_success[target[5:]]
        elif target == "network":
            succ = tally.network_success
        rep.add(
            target=target,
            failure=decimal(est.mean, args.precision),
            success=decimal(1 - est.mean, args.precision),
            std_error=decimal(est.std_error, args.precision),
            ci_low=decimal(lo, args.precision),
            ci_high=decimal(hi, args.precision),
            successes=succ,
        )
    return rep


def cmd_polynomial(args) -> Report:
    spec = _network(args.network)
    field = _realizable(parse_order(args.field))
    polys = erasure_polynomial(spec, field, budget=args.budget)
    n = len(spec.real_channels)
    rep = Report(
        "polynomial",
        {"network": args.network, "field": str(field), "variable": "p"},
        ["target", "kind", "degree"] + [f"c{k}" for k in range(n + 1)],
    )
    items = [(f"sink:{t}", v) for t, v in polys.per_sink.items()]
    items += [("network", polys.network), ("average", polys.average)]
    for target, fail in items:
        for kind, poly in (("failure", fail), ("success", 1 - fail)):
            coeffs = {f"c{k}": exact(c) for k, c in enumerate(poly.coeffs)}
            rep.add(target=target, kind=kind, degree=poly.degree, **coeffs)
    return rep


def cmd_threshold(args) -> Report:
    target = parse_rational(args.success, "success target")
    if not 0 < target < 1:
        raise ParseError(f"success target {args.success!r} must lie strictly between 0 and 1")
    res = closed_form.threshold_search(target)
    rep = Report(
        "threshold",
        {"success": exact(target)},
        ["quantity", "q", "network_success", "network_success_decimal", "meets_target"],
    )
    q = res.minimal_integer_q
    for name, qq in (
        ("minimal_integer_q", q),
        ("predecessor", q - 1),
        ("minimal_prime_power_q", res.minimal_prime_power_q),
    ):
        if qq < 2:
            continue
        s = closed_form.butterfly_success(qq)
        rep.add(
            quantity=name,
            q=qq,
            network_success=exact(s),
            network_success_decimal=decimal(s, args.precision),
            meets_target=str(s >= target).lower(),
        )
    return rep


SWEEP_COLUMNS = ("formula", "enumerate", "simulate", "rate")


def cmd_sweep(args) -> Report:
    qs = parse_q_list(args.fields)
    grid = [parse_erasure(x) for x in args.erasure_grid.split(",")] if args.erasure_grid else [parse_erasure(args.erasure)]
    wanted = [c.strip() for c in args.columns.split(",") if c.strip()]
    for c in wanted:
        if c not in SWEEP_COLUMNS:
            raise ParseError(f"unknown sweep column group {c!r}; choose from {', '.join(SWEEP_COLUMNS)}")
    cols = ["q", "p", "realizable"]
    if "formula" in wanted:
        cols += ["formula_sink_failure", "formula_network_failure", "formula_average_failure",
                 "formula_network_success", "formula_network_success_decimal"]
    if "enumerate" in wanted:
        cols += ["enumerate_sink_failure", "enumerate_network_failure", "enumerate_average_failure",
                 "enumerate_network_success"]
    if "simulate" in wanted:
        cols += ["simulate_sink_failure", "simulate_network_failure", "simulate_network_success",
                 "simulate_network_std_error"]
    if "rate" in wanted:
        cols += ["rate_sink", "rate_network"]
    rep = Report(
        "sweep",
        {"network": args.network, "fields": args.fields, "columns": ",".join(wanted), "trials": args.trials,
         "seed": args.seed},
        cols,
    )
    spec = _network(args.network) if {"enumerate", "simulate"} & set(wanted) else None
    if "formula" in wanted or "rate" in wanted:
        rep.notes.append("formula and rate columns are the butterfly closed forms")
    prec = args.precision
    for q in qs:
        realizable = prime_power(q) is not None
        for p in grid:
            row = {"q": q, "p": exact(p), "realizable": str(realizable).lower()}
            if "formula" in wanted:
                row.update(
                    formula_sink_failure=exact(closed_form.butterfly_failure(q, p, "sink")),
                    formula_network_failure=exact(closed_form.butterfly_failure(q, p, "network")),
                    formula_average_failure=exact(closed_form.butterfly_failure(q, p, "average")),
                    formula_network_success=exact(closed_form.butterfly_success(q, p, "network")),
                    formula_network_success_decimal=decimal(closed_form.butterfly_success(q, p), prec),
                )
            if "enumerate" in wanted and realizable:
                try:
                    res = enumerate_exact(spec, _realizable(q), ErasureModel(p), budget=args.budget)
                except SearchSpaceTooLarge:
                    row["enumerate_network_failure"] = "over-budget"
                else:
                    row.update(
                        enumerate_sink_failure=exact(max(res.per_sink.values())),
                        enumerate_network_failure=exact(res.network),
                        enumerate_average_failure=exact(res.average),
                        enumerate_network_success=exact(1 - res.network),
                    )
            if "simulate" in wanted and realizable:
                res = monte_carlo(spec, _realizable(q), ErasureModel(p), args.trials, args.seed)
                worst = max(res.per_sink.values(), key=lambda e: e.mean)
                row.update(
                    simulate_sink_failure=decimal(worst.mean, prec),
                    simulate_network_failure=decimal(res.network.mean, prec),
                    simulate_network_success=decimal(1 - res.network.mean, prec),
                    simulate_network_std_error=decimal(res.network.std_error, prec),
                )
            if "rate" in wanted:
                row.update(
                    rate_sink=decimal(q * closed_form.butterfly_failure(q, p, "sink"), prec),
                    rate_network=decimal(q * closed_form.butterfly_failure(q, p, "network"), prec),
                )
            rep.add(**row)
    return rep


def cmd_limits(args) -> Report:
    p = parse_erasure(args.erasure)
    qs = parse_q_list(args.fields)
    rep = Report(
        "limits",
        {"erasure": exact(p), "fields": args.fields},
        ["q", "sink_failure", "network_failure", "q_times_sink_failure", "q_times_network_failure"],
    )
    prec = args.precision
    for q in qs:
        fs = closed_form.butterfly_failure(q, p, "sink")
        fn = closed_form.butterfly_failure(q, p, "network")
        rep.add(
            q=q,
            sink_failure=decimal(fs, prec),
            network_failure=decimal(fn, prec),
            q_times_sink_failure=decimal(q * fs, prec),
            q_times_network_failure=decimal(q * fn, prec),
        )
    ls, ln = closed_form.limit_failure(p, "sink"), closed_form.limit_failure(p, "network")
    rep.add(q="inf", sink_failure=decimal(ls, prec), network_failure=decimal(ln, prec))
    rep.notes.append(f"limit sink/average failure = {exact(ls)}, limit network failure = {exact(ln)}")
    if p == 0:
        rep.notes.append("q * failure tends to 5 for sinks and to 9 for the network")
    return rep


def cmd_validate(args) -> Report:
    spec = _network(args.network, check=False)
    rep = Report("validate", {"network": args.network}, ["level", "kind", "message"])
    report = validate(spec)
    for v in report.violations:
        rep.add(level="error", kind=v.kind, message=v.message)
    for v in report.warnings:
        rep.add(level="warning", kind=v.kind, message=v.message)
    rep.notes.append("ok" if report.ok else "invalid")
    if not report.ok:
        rep.exit_code = EXIT_PARSE
    return rep


COMMANDS = {
    "formula": cmd_formula,
    "enumerate": cmd_enumerate,
    "simulate": cmd_simulate,
    "polynomial": cmd_polynomial,
    "threshold": cmd_threshold,
    "sweep": cmd_sweep,
    "limits": cmd_limits,
    "validate": cmd_validate,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", dest="output_format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--precision", type=int, default=6, help="significant digits for decimals")

    net = _Parser(add_help=False)
    net.add_argument("--network", default="builtin:butterfly", help="builtin:butterfly or a JSON network file")
    net.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="max code evaluations for enumeration")

    parser = _Parser(prog="rlnc-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("formula", parents=[common], help="closed-form butterfly failure probabilities")
    p.add_argument("--field", required=True, help="gf(q); any integer q >= 2")
    p.add_argument("--erasure", help="channel failure probability, a/b or decimal")

    p = sub.add_parser("enumerate", parents=[common, net], help="exact failure probabilities by enumeration")
    p.add_argument("--field", required=True)
    p.add_argument("--erasure")

    p = sub.add_parser("simulate", parents=[common, net], help="Monte Carlo estimates")
    p.add_argument("--field", required=True)
    p.add_argument("--erasure")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("polynomial", parents=[common, net], help="failure probabilities as polynomials in p")
    p.add_argument("--field", required=True)

    p = sub.add_parser("threshold", parents=[common], help="smallest field reaching a network success target")
    p.add_argument("--success", required=True)

    p = sub.add_parser("sweep", parents=[common, net], help="table over field orders and erasure probabilities")
    p.add_argument("--fields", required=True, help="e.g. 2..16 or 2,3,4")
    p.add_argument("--erasure")
    p.add_argument("--erasure-grid", help="comma-separated erasure probabilities")
    p.add_argument("--columns", default="formula,rate")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("limits", parents=[common], help="large-field limits and q * failure rates")
    p.add_argument("--erasure")
    p.add_argument("--fields", default="10,100,1000,10000,100000,1000000")

    p = sub.add_parser("validate", parents=[common], help="check a network description")
    p.add_argument("--network", default="builtin:butterfly")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.precision < 1:
            raise ParseError("--precision must be >= 1")
        report = COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"rlnc-lab: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SearchSpaceTooLarge as exc:
        print(f"rlnc-lab: error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    sys.stdout.write(report.render(args.output_format))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
