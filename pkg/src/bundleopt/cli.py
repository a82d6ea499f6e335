"""``bundleopt`` command line.

Exit status: 0 on success, 1 on input errors, 2 when ``--strict`` is set and
an assumption check fails. ``BUNDLEOPT_THREADS`` caps the oracle's worker
threads.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .assumptions import DEFAULT_GRID, DEFAULT_TOL, check_assumptions
from .characterize import DEFAULT_TOL as DECIDE_TOL
from .characterize import decide_pure_bundling, sweep
from .core import all_bundles
from .errors import BundleoptError
from .figures import export_figure_data, export_quality_curves
from .modelio import load_model, load_quantity_model
from .oracle import PRICE_STEPS, TYPE_STEPS, brute_force_best
from .tariff import brute_force_tariff, construct_optimal_tariff, tariff_profit
from .volumes import optimal_cutoff

SWEEP_SCHEMA = "bundleopt.sweep/1"
SEGMENTS_SCHEMA = "bundleopt.segments/1"


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s!r}")
    return v


def _positive_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s!r}") from None
    if not (math.isfinite(v) and v > 0):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s!r}")
    return v


def _finite_float(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {s!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {s!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write the result here instead of stdout")
    common.add_argument("--strict", action="store_true", help="exit 2 when an assumption check fails")
    common.add_argument("--seed", type=int, default=0, help="seed for any randomized step (default 0)")

    p = _Parser(prog="bundleopt", description="Optimal bundling and nonlinear pricing tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model_cmd(name, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("model", help="model JSON file")
        sp.add_argument("--grid", type=_positive_int, default=DEFAULT_GRID, help="type grid size")
        return sp

    sp = model_cmd("check", "check the monotonicity and quasi-concavity assumptions")
    sp.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)

    model_cmd("volumes", "optimal cutoff, volume and price of every bundle sold alone")

    sp = model_cmd("decide", "is pure bundling optimal?")
    sp.add_argument("--tol", type=_positive_float, default=DECIDE_TOL)

    sp = model_cmd("oracle", "brute-force the best menu and prices (n <= 3)")
    sp.add_argument("--price-steps", type=_positive_int, default=PRICE_STEPS)
    sp.add_argument("--type-steps", type=_positive_int, default=TYPE_STEPS)
    sp.add_argument("--segments-csv", help="also write buyer segments (t_lo, t_hi, union_mask) here")

    sp = model_cmd("sweep", "re-run the verdict while one model parameter varies")
    sp.add_argument("--param", required=True, help="parameter name, e.g. k2")
    sp.add_argument("--from", dest="start", type=_finite_float, required=True)
    sp.add_argument("--to", dest="stop", type=_finite_float, required=True)
    sp.add_argument("--steps", type=_positive_int, required=True)
    sp.add_argument("--tol", type=_positive_float, default=DECIDE_TOL)

    sp = sub.add_parser("tariff", parents=[common], help="recursive optimal tariff for a quantity model")
    sp.add_argument("model", help="quantity model JSON file")
    sp.add_argument("--grid", type=_positive_int, default=DEFAULT_GRID)
    sp.add_argument("--oracle", action="store_true", help="append the brute-force schedule search")

    sp = sub.add_parser("export-curves", parents=[common], help="CSV of the figure curves")
    sp.add_argument("--family", choices=("addon", "qualityroot"), default="addon")
    sp.add_argument("--k1", type=_finite_float, default=0.2)
    sp.add_argument("--k2", type=_positive_float, default=0.4)
    sp.add_argument("--grid", type=_positive_int, default=1001)
    return p


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _write(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _require_grid(grid: int, minimum: int = 3) -> None:
    if grid < minimum:
        raise InputError(f"--grid must be >= {minimum}, got {grid}")


def run(args: argparse.Namespace) -> int:
    np.random.seed(args.seed)
    cmd = args.command
    status = 0

    if cmd == "check":
        _require_grid(args.grid)
        report = check_assumptions(load_model(args.model), args.grid, args.tol)
        _write(_json({**report.to_dict(), "passed": report.passed}), args.output)
        return 2 if args.strict and not report.passed else 0

    if cmd == "volumes":
        _require_grid(args.grid)
        inst = load_model(args.model)
        rows = []
        for b in all_bundles(inst.n):
            rows.append(optimal_cutoff(inst, b, grid_size=args.grid).to_dict())
            comp = b.complement()
            if not comp.is_empty:
                rows.append(optimal_cutoff(inst, b, comp, grid_size=args.grid).to_dict())
        _write(_json({"volumes": rows}), args.output)
        return 0

    if cmd == "decide":
        _require_grid(args.grid)
        verdict = decide_pure_bundling(load_model(args.model), args.tol, args.grid)
        _write(_json(verdict.to_dict()), args.output)
        return 2 if args.strict and not verdict.assumption_report.passed else 0

    if cmd == "oracle":
        _require_grid(args.price_steps, 2)
        _require_grid(args.type_steps, 2)
        inst = load_model(args.model)
        result = brute_force_best(inst, price_steps=args.price_steps, type_steps=args.type_steps)
        _write(_json(result.to_dict()), args.output)
        if args.segments_csv:
            buf = io.StringIO()
            buf.write(f"# schema: {SEGMENTS_SCHEMA}\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["t_lo", "t_hi", "union_mask"])
            for s in result.buyer_segments:
                w.writerow([repr(s.t_lo), repr(s.t_hi), s.union.bitstring()])
            Path(args.segments_csv).write_text(buf.getvalue(), encoding="utf-8")
        if args.strict and not check_assumptions(inst).passed:
            status = 2
        return status

    if cmd == "sweep":
        _require_grid(args.grid)
        inst = load_model(args.model)
        values = np.linspace(args.start, args.stop, args.steps)
        rows = sweep(inst, args.param, values, args.tol, args.grid)
        buf = io.StringIO()
        buf.write(f"# schema: {SWEEP_SCHEMA} param={args.param}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([args.param, "d_grand", "d_best_other", "decision", "assumptions_passed"])
        for r in rows:
            w.writerow([repr(r.value), repr(r.d_grand), repr(r.d_best_other), r.decision.value,
                        str(r.assumptions_passed).lower()])
        _write(buf.getvalue(), args.output)
        return 2 if args.strict and not all(r.assumptions_passed for r in rows) else 0

    if cmd == "tariff":
        _require_grid(args.grid)
        qi = load_quantity_model(args.model)
        schedule = construct_optimal_tariff(qi, args.grid)
        out = schedule.to_dict(qi)
        out["profit"] = tariff_profit(qi, schedule)
        if args.oracle:
            out["oracle"] = brute_force_tariff(qi).to_dict()
        _write(_json(out), args.output)
        return 0

    if cmd == "export-curves":
        _require_grid(args.grid, 2)
        if args.family == "qualityroot":
            text = export_quality_curves(grid=args.grid)
        else:
            text = export_figure_data(args.k1, args.k2, args.grid)
        _write(text, args.output)
        return 0

    raise InputError(f"unknown command {cmd!r}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (BundleoptError, InputError, OSError) as exc:
        print(f"bundleopt: error: {exc}", file=sys.stderr)
        return 1
