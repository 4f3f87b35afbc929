"""Command-line interface: ``isomest <command> ...``.

Exit codes: 0 success, 2 unreadable or malformed input file, 3 degenerate
scale or too little data, 4 invalid flags or flag values.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

from . import montecarlo
from .asymptotics import ChernoffConfig, avar, parse_error_model, simulate_chernoff
from .errors import DegenerateSample, InsufficientData, IsomestError
from .psi import parse_family
from .robustness import ContaminationSpec, breakdown_lower_bound, contamination_probe, influence
from .scale import parse_scale
from .solver import DesignSample, IsotonicFit, fit, fit_csv

EXIT_PARSE = 2
EXIT_DEGENERATE = 3
EXIT_FLAGS = 4


class InputError(Exception):
    """Malformed input file."""


class BadFlag(Exception):
    """Flag value rejected after argparse accepted it."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FLAGS, f"{self.prog}: error: {message}\n")


def read_series(path: str) -> DesignSample:
    """Read a two-column ``t,x`` CSV file.

    Lines starting with ``#`` and blank lines are skipped; a first data line
    that is not numeric is taken as a header.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    t, x = [], []
    seen_data = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 2:
            raise InputError(f"{path}:{lineno}: expected 2 columns, found {len(fields)}")
        try:
            tv, xv = float(fields[0]), float(fields[1])
        except ValueError:
            if not seen_data and not t:
                seen_data = True  # header
                continue
            raise InputError(f"{path}:{lineno}: non-numeric value in {line!r}") from None
        if not (math.isfinite(tv) and math.isfinite(xv)):
            raise InputError(f"{path}:{lineno}: NaN or infinite value in {line!r}")
        seen_data = True
        t.append(tv)
        x.append(xv)
    if not t:
        raise InputError(f"{path}: no data rows")
    return DesignSample(t, x)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _family(text):
    try:
        return parse_family(text)
    except ValueError as exc:
        raise BadFlag(f"--family: {exc}") from None


def _scale(args):
    try:
        return parse_scale(args.scale, args.scale_c, args.scale_b)
    except ValueError as exc:
        raise BadFlag(f"--scale: {exc}") from None


def _error_model(text):
    try:
        return parse_error_model(text)
    except ValueError as exc:
        raise BadFlag(f"--error: {exc}") from None


def _default_seed() -> int:
    value = os.environ.get("ISOMEST_SEED", "0")
    try:
        return int(value)
    except ValueError:
        raise BadFlag(f"ISOMEST_SEED must be an integer, got {value!r}") from None


def plot_data(result: IsotonicFit, sample: DesignSample) -> str:
    """CSV ``series,t,value``: raw points, then the step function's vertices."""
    rows = ["series,t,value"]
    rows += [f"point,{t!r},{x!r}" for t, x in zip(sample.t.tolist(), sample.x.tolist())]
    blocks = result.blocks
    for i, b in enumerate(blocks):
        left = float(sample.t[b.start])
        right = float(sample.t[blocks[i + 1].start]) if i + 1 < len(blocks) else float(sample.t[-1])
        rows.append(f"step,{left!r},{b.level!r}")
        rows.append(f"step,{right!r},{b.level!r}")
    return "\n".join(rows) + "\n"


def _negated(result: IsotonicFit) -> IsotonicFit:
    blocks = tuple(dataclasses.replace(b, level=-b.level) for b in result.blocks)
    return dataclasses.replace(result, blocks=blocks, fitted=-result.fitted,
                               residuals=-result.residuals)


def cmd_fit(args) -> int:
    family = _family(args.family)
    method = _scale(args)
    sample = read_series(args.input)
    if args.direction == "decreasing":
        result = _negated(fit(sample.with_x(-sample.x), family, method))
    else:
        result = fit(sample, family, method)
    _write(args.json, result.to_json())
    if args.csv:
        _write(args.csv, fit_csv(result, sample))
    if args.plot:
        _write(args.plot, plot_data(result, sample))
    return 0


def cmd_table1(args) -> int:
    table = montecarlo.table1(args.seed, reps=args.reps, workers=args.workers)
    if args.out and args.out.endswith(".csv"):
        _write(args.out, table.to_csv())
    else:
        _write(args.out, _dump(table.to_dict()))
    if args.dump_estimates:
        _write(args.dump_estimates, _dump({
            f"{name}|{err}|{n}": values.tolist()
            for (name, err, n), values in table.estimates.items()
        }))
    return 0


def cmd_chernoff(args) -> int:
    try:
        config = ChernoffConfig(args.half_width, args.step, args.reps, args.seed)
    except IsomestError as exc:
        raise BadFlag(str(exc)) from None
    sample = simulate_chernoff(config, workers=args.workers)
    summary = sample.summary()
    if args.samples:
        _write(args.samples, "\n".join(repr(v) for v in sample.slopes.tolist()) + "\n")
    _write(None, _dump(summary))
    return 0


def cmd_avar(args) -> int:
    report = avar(_family(args.family), _error_model(args.error), args.mu_prime, args.h,
                  sigma0=args.sigma0, var_chernoff=args.var_chernoff)
    _write(None, _dump(report.to_dict()))
    return 0


def cmd_influence(args) -> int:
    t0 = args.t_star if args.t0 is None else args.t0
    value = influence(_family(args.family), args.t_star, args.x_star, t0, args.mu_t0,
                      args.mu_prime, args.h, args.sigma0, _error_model(args.error))
    _write(None, _dump({"influence": value}))
    return 0


def cmd_breakdown(args) -> int:
    value = breakdown_lower_bound(args.H, args.scale_breakdown)
    _write(None, _dump({"H": args.H, "scale_breakdown": args.scale_breakdown,
                        "lower_bound": value}))
    return 0


def cmd_probe(args) -> int:
    family = _family(args.family)
    method = _scale(args)
    sample = read_series(args.csv)
    t0 = args.at if args.t0 is None else args.t0
    try:
        spec = ContaminationSpec(args.at, args.value, outlier_count=args.outliers)
    except ValueError as exc:
        raise BadFlag(str(exc)) from None
    if args.outliers >= len(sample):
        raise BadFlag("--outliers must be smaller than the number of rows")
    result = contamination_probe(sample, family, method, spec, t0)
    _write(None, _dump(result.to_dict()))
    return 0


def _add_fit_flags(p):
    p.add_argument("--family", default="huber:k=0.98",
                   help="l2 | l1 | huber:k=K | sl1:m=M | shuber:k=K,m=M (default huber:k=0.98)")
    p.add_argument("--scale", default="diffm", help="fixed:S | diffm | madl1 (default diffm)")
    p.add_argument("--scale-c", type=float, default=None, help="diffm tuning constant c")
    p.add_argument("--scale-b", type=float, default=None, help="diffm tuning constant b")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isomest", description="Robust isotonic M-estimation toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    seed = dict(type=int, default=None, help="master seed (default $ISOMEST_SEED or 0)")

    p = sub.add_parser("fit", help="fit an isotonic M-estimator to a t,x CSV file")
    p.add_argument("input")
    _add_fit_flags(p)
    p.add_argument("--direction", choices=("increasing", "decreasing"), default="increasing")
    p.add_argument("--json", default=None, help="fit JSON path (default stdout)")
    p.add_argument("--csv", default=None, help="write t,x,fitted,residual CSV here")
    p.add_argument("--plot", default=None, help="write plot data (points + step vertices) here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("table1", help="Monte Carlo MSE table with asymptotic variances")
    p.add_argument("--seed", **seed)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="table.json or table.csv (default JSON on stdout)")
    p.add_argument("--dump-estimates", default=None, help="write per-cell raw estimates as JSON")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("chernoff", help="simulate the slope at zero of GCM(W(v) + v^2)")
    p.add_argument("--half-width", type=float, default=3.0)
    p.add_argument("--step", type=float, default=0.005)
    p.add_argument("--reps", type=int, default=50_000)
    p.add_argument("--seed", **seed)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--samples", default=None, help="write the slope draws here, one per line")
    p.set_defaults(func=cmd_chernoff)

    p = sub.add_parser("avar", help="asymptotic variance at an interior point")
    p.add_argument("--family", required=True)
    p.add_argument("--error", default="normal", help="normal[:sigma=S] | t:df=D | t3 (default normal)")
    p.add_argument("--mu-prime", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--var-chernoff", type=float, default=1.04)
    p.set_defaults(func=cmd_avar)

    p = sub.add_parser("influence", help="squared-bias influence function")
    p.add_argument("--family", required=True)
    p.add_argument("--error", default="normal")
    p.add_argument("--t-star", type=float, required=True)
    p.add_argument("--x-star", type=float, required=True)
    p.add_argument("--t0", type=float, default=None, help="default: --t-star")
    p.add_argument("--mu-t0", type=float, required=True)
    p.add_argument("--mu-prime", type=float, required=True)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--sigma0", type=float, default=1.0)
    p.set_defaults(func=cmd_influence)

    p = sub.add_parser("breakdown", help="breakdown-point lower bound")
    p.add_argument("--H", type=float, required=True, help="design distribution function at t0")
    p.add_argument("--scale-breakdown", type=float, default=None)
    p.set_defaults(func=cmd_breakdown)

    p = sub.add_parser("probe", help="finite-sample contamination probe")
    p.add_argument("--csv", required=True, help="t,x input file")
    p.add_argument("--outliers", type=int, required=True)
    p.add_argument("--at", type=float, required=True, help="place outliers nearest this t")
    p.add_argument("--value", type=float, required=True, help="outlier response")
    p.add_argument("--t0", type=float, default=None, help="evaluation point (default --at)")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return args.func(args)
    except InputError as exc:
        print(f"isomest: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DegenerateSample, InsufficientData) as exc:
        print(f"isomest: degenerate scale: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (BadFlag, IsomestError, ValueError) as exc:
        print(f"isomest: {exc}", file=sys.stderr)
        return EXIT_FLAGS


if __name__ == "__main__":
    sys.exit(main())
