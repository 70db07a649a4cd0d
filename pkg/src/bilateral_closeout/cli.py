"""
Command-line front end.

Commands: price, grid, scenario, collateral, validate, reproduce-paper.
Bare commands use the baseline example: r = 3%, T = 5y, notional 1e9,
zero recoveries, lender intensity 4%, borrower intensity 20%.

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from bilateral_closeout.closeout_pricing import (
    CloseoutConvention,
    MixedSignScheduleError,
    price,
    price_surface,
)
from bilateral_closeout.collateral import CSV_COLUMNS, closeout_match, simulate_collateral
from bilateral_closeout.credit_model import (
    Dependence,
    InconsistentContextError,
    Party,
    PartyCredit,
    SimultaneousDefaultError,
    TwoNameModel,
    ValuationContext,
)
from bilateral_closeout.instruments import CashflowSchedule, RateCurve
from bilateral_closeout.monte_carlo import McConfig, validation_sweep
from bilateral_closeout.reference_checks import format_table, run_checks
from bilateral_closeout.scenario_contagion import ImpossibleOrderingError, revalue_around_default

OUTPUT_DIR_ENV = "BILATERAL_CLOSEOUT_OUTPUT_DIR"

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

MODEL_KEYS = (
    "r", "T", "notional", "lambda_borrower", "lambda_lender",
    "recovery_borrower", "recovery_lender", "dependence",
)


class UsageError(Exception):
    pass


def _nonneg(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a decimal, got {text!r}") from None
    if not np.isfinite(value) or value < 0:
        raise argparse.ArgumentTypeError(f"expected a finite non-negative decimal, got {text!r}")
    return value


def _positive(text: str) -> float:
    value = _nonneg(text)
    if value == 0:
        raise argparse.ArgumentTypeError(f"expected a positive decimal, got {text!r}")
    return value


def _fraction(text: str) -> float:
    """Positive decimal or ratio such as 1/365."""
    try:
        value = float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a positive number or ratio, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number or ratio, got {text!r}")
    return value


def _unit(text: str) -> float:
    value = _nonneg(text)
    if value > 1:
        raise argparse.ArgumentTypeError(f"expected a fraction in [0, 1], got {text!r}")
    return value


def _count(text: str) -> int:
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:step``, inclusive of ``stop``; ``0:0:1`` is the single point 0."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must look like start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like start:stop:step, got {text!r}") from None
    if start < 0 or stop < start or step <= 0 or not all(np.isfinite([start, stop, step])):
        raise argparse.ArgumentTypeError(f"grid needs 0 <= start <= stop and step > 0, got {text!r}")
    n = int(np.floor((stop - start) / step + 1e-9))
    return np.round(start + step * np.arange(n + 1), 12)


def _model_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = p.add_argument_group("model")
    g.add_argument("--r", type=_nonneg, default=0.03, help="flat short rate (default 0.03)")
    g.add_argument("--T", type=_positive, default=5.0, help="maturity in years (default 5)")
    g.add_argument("--notional", type=_positive, default=1e9, help="notional (default 1e9)")
    g.add_argument("--lambda-borrower", type=_nonneg, default=0.2, help="borrower intensity (default 0.2)")
    g.add_argument("--lambda-lender", type=_nonneg, default=0.04, help="lender intensity (default 0.04)")
    g.add_argument("--recovery-borrower", type=_unit, default=0.0, help="borrower recovery (default 0)")
    g.add_argument("--recovery-lender", type=_unit, default=0.0, help="lender recovery (default 0)")
    g.add_argument("--dependence", choices=[d.value for d in Dependence], default="independent")
    return p


def _io_parent(default_format: str = "table") -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = p.add_argument_group("output")
    g.add_argument("--format", choices=("json", "csv", "table"), default=default_format)
    g.add_argument(
        "--output",
        help=f"write to this file instead of stdout; relative paths resolve under ${OUTPUT_DIR_ENV} when set",
    )
    g.add_argument("--config", help="JSON file of flag defaults, keyed by flag name with underscores")
    return p


def build_parser() -> argparse.ArgumentParser:
    conventions = [c.value for c in CloseoutConvention]
    parser = argparse.ArgumentParser(
        prog="bilateral-closeout",
        description="Bilateral counterparty-risk valuation under risk-free and substitution closeout.",
        allow_abbrev=False,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("price", parents=[_model_parent(), _io_parent()], allow_abbrev=False, help="price one claim")
    p.add_argument("--convention", choices=conventions, default="risk-free-closeout")
    p.add_argument("--t", type=_nonneg, default=0.0, help="valuation time; t > 0 needs --context")
    p.add_argument("--context", choices=("both-alive", "survived-until", "defaulted"))
    p.add_argument("--context-party", choices=[x.value for x in Party])
    p.add_argument("--default-time", type=_nonneg, help="default time s <= t for --context defaulted")
    p.add_argument("--perspective", choices=[x.value for x in Party], default="lender")
    p.add_argument("--schedule", help='JSON cashflow schedule {"notional":..,"cashflows":[{"t":..,"amount":..}]}')

    g = sub.add_parser(
        "grid", parents=[_model_parent(), _io_parent()], allow_abbrev=False, help="price surface over both intensities",
        description="Emit a price surface, per unit notional. CSV layout: header row "
                    "'lambda_lender,<borrower intensities...>', then one row per lender intensity.",
    )
    g.add_argument("--grid", type=parse_grid, default=parse_grid("0:1:0.02"), help="start:stop:step for both axes")
    g.add_argument("--lender-grid", type=parse_grid, help="override the lender axis")
    g.add_argument("--borrower-grid", type=parse_grid, help="override the borrower axis")
    g.add_argument("--convention", choices=conventions, default="risk-free-closeout")
    g.add_argument("--diff", action="store_true", help="risk-free closeout minus substitution closeout")
    g.add_argument("--workers", type=_count, default=1)

    s = sub.add_parser("scenario", parents=[_model_parent(), _io_parent()], allow_abbrev=False, help="values around a default")
    s.add_argument("--convention", choices=conventions, default="risk-free-closeout")
    s.add_argument("--default-party", choices=[x.value for x in Party], default="lender")
    s.add_argument("--default-time", type=_positive, default=2.5)
    s.add_argument("--perspective", choices=[x.value for x in Party], default="borrower")

    c = sub.add_parser(
        "collateral", parents=[_model_parent(), _io_parent()], allow_abbrev=False, help="collateral path and closeout match",
        description="Simulate the collateral balance and compare it with the closeout at a default. "
                    f"CSV columns: {', '.join(CSV_COLUMNS)}.",
    )
    c.add_argument("--convention", choices=("risk-free-closeout", "substitution-closeout"), default="substitution-closeout")
    c.add_argument("--dt", type=_fraction, default=1 / 365, help="Euler step, decimal or ratio (default 1/365)")
    c.add_argument("--default-party", choices=[x.value for x in Party], default="lender")
    c.add_argument("--default-time", type=_nonneg, default=2.5)
    c.add_argument("--path-csv", help="also write the balance path as CSV to this file")

    v = sub.add_parser("validate", parents=[_io_parent("json")], allow_abbrev=False, help="Monte Carlo vs closed-form sweep (JSON)")
    v.add_argument("--paths", type=_count, default=10**6)
    v.add_argument("--seed", type=_seed, default=42)
    v.add_argument("--sets", type=_count, default=20, help="randomized parameter sets")
    v.add_argument("--antithetic", action="store_true")
    v.add_argument("--workers", type=_count, default=1, help="threads; results do not depend on it")

    r = sub.add_parser("reproduce-paper", parents=[_io_parent()], allow_abbrev=False, help="run every reference check")
    r.add_argument("--paths", type=_count, default=10**6, help="Monte Carlo paths per validation case")
    r.add_argument("--seed", type=_seed, default=42)
    r.add_argument("--skip-monte-carlo", action="store_true")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> None:
    """Load ``--config`` and install its entries as subcommand defaults."""
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        doc = json.loads(Path(known.config).read_text())
    except (OSError, ValueError) as exc:
        parser.error(f"argument --config: cannot read {known.config!r}: {exc}")
    if not isinstance(doc, dict):
        parser.error("argument --config: expected a JSON object")
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    command = next((a for a in argv if a in subparsers.choices), None)
    if command is None:
        return
    sp = subparsers.choices[command]
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in doc.items():
        key = key.replace("-", "_")
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            sp.error(f"argument --config: unknown key {key!r}")
        if action.type is not None and not isinstance(value, bool):
            try:
                value = action.type(str(value))
            except argparse.ArgumentTypeError as exc:
                sp.error(f"argument --config: key {key!r}: {exc}")
        if action.choices is not None and value not in action.choices:
            sp.error(f"argument --config: key {key!r}: invalid choice {value!r}")
        defaults[key] = value
    sp.set_defaults(**defaults)


def _model(args) -> TwoNameModel:
    try:
        return TwoNameModel(
            PartyCredit(args.lambda_borrower, args.recovery_borrower),
            PartyCredit(args.lambda_lender, args.recovery_lender),
            Dependence(args.dependence),
        )
    except SimultaneousDefaultError as exc:
        raise UsageError(f"arguments --lambda-borrower/--lambda-lender/--dependence: {exc}") from None


def _echo(args, keys) -> dict:
    out = {}
    for key in keys:
        value = getattr(args, key, None)
        if isinstance(value, np.ndarray):
            value = value.tolist()
        out[key] = value
    return out


def _context(args):
    if args.context is None:
        if args.t > 0:
            raise UsageError("argument --t: valuation at t > 0 needs an explicit --context")
        return None
    if args.context == "both-alive":
        return ValuationContext.both_alive(args.t)
    if args.context_party is None:
        raise UsageError(f"argument --context-party: required for --context {args.context}")
    if args.context == "survived-until":
        return ValuationContext.survived_until(Party(args.context_party), args.t)
    if args.default_time is None:
        raise UsageError("argument --default-time: required for --context defaulted")
    if args.default_time > args.t:
        raise UsageError("argument --default-time: must not exceed --t")
    return ValuationContext.defaulted(Party(args.context_party), args.default_time, args.t)


def _flat_table(rows, unit_keys=()) -> str:
    width = max(len(k) for k, _ in rows)
    lines = []
    for key, value in rows:
        if isinstance(value, float) and key in unit_keys:
            lines.append(f"{key:<{width}}  {value / 1e6:14.4f} mn")
        else:
            lines.append(f"{key:<{width}}  {value}")
    return "\n".join(lines)


def _csv_rows(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("key", "value"))
    for key, value in rows:
        w.writerow((key, repr(value) if isinstance(value, float) else value))
    return buf.getvalue()


def _flatten(prefix: str, doc: dict):
    for key, value in doc.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(name + ".", value)
        else:
            yield name, value


def cmd_price(args):
    model = _model(args)
    ctx = _context(args)
    schedule = CashflowSchedule.load(args.schedule) if args.schedule else CashflowSchedule.bond(args.T, args.notional)
    result = price(
        schedule, RateCurve(args.r), model, CloseoutConvention(args.convention),
        ctx=ctx, perspective=Party(args.perspective),
    )
    params = _echo(args, MODEL_KEYS + ("convention", "t", "context", "context_party", "default_time", "perspective", "schedule"))
    doc = {"command": "price", "parameters": params, "result": result.to_dict()}
    rows = list(_flatten("", {"parameters": params, "result": result.to_dict()}))
    money = {"result.value", "result.risk_free_value", "result.notional"} | {
        f"result.decomposition.{k}" for k in ("survival_leg", "recovery_leg", "cva", "dva")
    }
    return doc, _flat_table(rows, money), _csv_rows(rows), EXIT_OK


def _surface_csv(lender, borrower, values) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda_lender"] + [repr(float(x)) for x in borrower])
    for lam, row in zip(lender, values):
        w.writerow([repr(float(lam))] + [repr(float(x)) for x in row])
    return buf.getvalue()


def cmd_grid(args):
    lender = args.lender_grid if args.lender_grid is not None else args.grid
    borrower = args.borrower_grid if args.borrower_grid is not None else args.grid
    curve = RateCurve(args.r)

    def surface(convention):
        return price_surface(
            curve, args.T, args.recovery_borrower, Dependence(args.dependence), lender, borrower,
            CloseoutConvention(convention), recovery_lender=args.recovery_lender, workers=args.workers,
        )

    if args.diff:
        values = surface("risk-free-closeout") - surface("substitution-closeout")
        label = "risk-free-closeout minus substitution-closeout"
    else:
        values = surface(args.convention)
        label = args.convention
    params = _echo(args, MODEL_KEYS + ("convention", "diff"))
    params["lender_grid"] = lender.tolist()
    params["borrower_grid"] = borrower.tolist()
    doc = {
        "command": "grid",
        "parameters": params,
        "surface": label,
        "unit": "per unit notional",
        "values": [[None if np.isnan(x) else float(x) for x in row] for row in values],
    }
    text = _surface_csv(lender, borrower, values)
    with np.printoptions(precision=6, linewidth=160):
        table = f"{label} (rows: lender intensity, columns: borrower intensity)\n{values}"
    return doc, table, text, EXIT_OK


def cmd_scenario(args):
    model = _model(args)
    schedule = CashflowSchedule.bond(args.T, args.notional)
    try:
        report = revalue_around_default(
            schedule, RateCurve(args.r), model, CloseoutConvention(args.convention),
            Party(args.default_party), args.default_time, Party(args.perspective),
        )
    except ImpossibleOrderingError as exc:
        raise UsageError(f"argument --default-party: {exc}") from None
    except ValueError as exc:
        raise UsageError(f"argument --default-time: {exc}") from None
    params = _echo(args, MODEL_KEYS + ("convention", "default_party", "default_time", "perspective"))
    doc = {"command": "scenario", "parameters": params, "report": report.to_dict()}
    rows = list(_flatten("", doc["report"]))
    return doc, report.to_table(), _csv_rows(rows), EXIT_OK


def cmd_collateral(args):
    model = _model(args)
    curve = RateCurve(args.r)
    if args.default_time >= args.T:
        raise UsageError("argument --default-time: must be before maturity --T")
    path = simulate_collateral(curve, args.T, args.notional, args.dt)
    try:
        match = closeout_match(path, curve, model, args.convention, Party(args.default_party), args.default_time)
    except ValueError as exc:
        raise UsageError(f"argument --default-party: {exc}") from None
    if args.path_csv:
        path.to_csv(_resolve_output(args.path_csv))
    params = _echo(args, MODEL_KEYS + ("convention", "dt", "default_party", "default_time"))
    summary = {
        "steps": len(path.times) - 1,
        "balance_at_default": match.collateral_value_discrete,
        "max_deviation": path.max_deviation(),
        "error_bound": path.error_bound(),
        "max_abs_net_flow": float(np.max(np.abs(path.net_flow))),
    }
    doc = {"command": "collateral", "parameters": params, "path": summary, "match": match.to_dict()}
    rows = list(_flatten("", {"path": summary, "match": match.to_dict()}))
    money = {f"match.{k}" for k in match.to_dict()} | {"path.balance_at_default", "path.max_deviation", "path.error_bound"}
    return doc, _flat_table(rows, money), path.to_csv(), EXIT_OK


def cmd_validate(args):
    config = McConfig(args.paths, args.seed, args.antithetic, args.workers)
    report = validation_sweep(config, n_sets=args.sets)
    code = EXIT_OK if report["all_pass"] else EXIT_FAILED
    doc = dict(report, command="validate")
    lines = [
        f"{c['param_set']:>3} {c['dependence']:<12} {c['convention']:<22} "
        f"closed {c['closed_form']:16.2f}  mc {c['mc_mean']:16.2f}  se {c['mc_se']:12.2f}  "
        f"z {c['z_score']:+6.2f}  {'ok' if c['pass'] else 'FAIL'}"
        for c in report["cases"]
    ]
    lines.append(f"{len(report['cases']) - report['failures']}/{len(report['cases'])} cases within 3 SE")
    keys = ("param_set", "dependence", "convention", "closed_form", "mc_mean", "mc_se", "z_score", "pass")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for c in report["cases"]:
        w.writerow([repr(c[k]) if isinstance(c[k], float) else c[k] for k in keys])
    return doc, "\n".join(lines), buf.getvalue(), code


def cmd_reproduce(args):
    checks = run_checks(paths=args.paths, seed=args.seed, monte_carlo=not args.skip_monte_carlo)
    ok = all(c.passed for c in checks)
    doc = {
        "command": "reproduce-paper",
        "parameters": {"paths": args.paths, "seed": args.seed, "skip_monte_carlo": args.skip_monte_carlo},
        "checks": [c.__dict__ for c in checks],
        "all_pass": ok,
    }
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("number", "name", "passed", "detail"))
    for c in checks:
        w.writerow((c.number, c.name, c.passed, c.detail))
    return doc, format_table(checks), buf.getvalue(), EXIT_OK if ok else EXIT_FAILED


COMMANDS = {
    "price": cmd_price,
    "grid": cmd_grid,
    "scenario": cmd_scenario,
    "collateral": cmd_collateral,
    "validate": cmd_validate,
    "reproduce-paper": cmd_reproduce,
}


def _resolve_output(target: str) -> Path:
    path = Path(target)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _render(doc, table, text, fmt) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if fmt == "csv":
        return text
    return table + "\n"


def main(argv=None, stdout=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        doc, table, text, code = COMMANDS[args.command](args)
    except (UsageError, MixedSignScheduleError, InconsistentContextError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, KeyError, ValueError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = _render(doc, table, text, args.format)
    if args.output:
        _resolve_output(args.output).write_text(out)
    else:
        stdout.write(out)
    return code


def run() -> None:
    sys.exit(main())
