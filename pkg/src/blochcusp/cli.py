"""Command-line front end.

Exit codes: 0 success, 1 configuration or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, runs
from .errors import ConfigError, NumericalError
from .ideal import sinc_sum_identity, sinc_tail_bound
from .io import column, read_series_csv
from .lattice import IdealModelParams, TimeSeries

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would collide with the numerical-failure code
    def error(self, message):
        raise ConfigError(message)


def _add_run_options(p, methods_default):
    p.add_argument("--config", help="JSON file with run settings; flags override it")
    p.add_argument("--n", type=int, help="number of sites N")
    p.add_argument("--k", type=int, help="initial Bloch index k_i")
    p.add_argument("--u", type=float, help="defect potential U")
    p.add_argument("--j", type=int, help="defect site (default 0)")
    dur = p.add_mutually_exclusive_group()
    dur.add_argument("--periods", type=float, help="duration in Heisenberg periods T (default 5)")
    dur.add_argument("--t-max", type=float, dest="t_max", help="duration in absolute time units")
    p.add_argument("--samples-per-period", type=int, dest="samples_per_period",
                   help="grid points per period (default 100)")
    p.add_argument("--m", type=int, help="truncation M for the truncated method")
    p.add_argument("--out", help="output CSV; with several methods, <stem>_<method>.csv")
    p.add_argument("--serial", action="store_const", const=True, help="run methods one after another")
    p.add_argument("--cusps", action="store_const", const=True, help="also print detected cusps")
    if methods_default is None:
        p.add_argument("--methods", help="comma-separated subset of exact,truncated,ideal")
    else:
        p.set_defaults(fixed_methods=methods_default)
        p.add_argument("--g-over-delta", type=float, dest="g_over_delta",
                       help="reduced-units scenario instead of a ring (delta = 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blochcusp", description="Quench dynamics of a tight-binding ring with one defect site.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _add_run_options(sub.add_parser("quench", help="run one or more methods on a scenario"), None)
    _add_run_options(sub.add_parser("truncated", help="finite-M truncated model"), ("truncated",))
    _add_run_options(sub.add_parser("ideal", help="closed-form ideal model"), ("ideal",))

    p = sub.add_parser("compare", help="max/rms difference of two CSV files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--cols", help="comma-separated columns (default: all shared real columns)")

    p = sub.add_parser("cusps", help="detect cusps in a CSV column")
    p.add_argument("--in", dest="path", required=True)
    p.add_argument("--col", required=True)
    p.add_argument("--kappa", type=float, default=analysis.DEFAULT_KAPPA)
    p.add_argument("--scale", type=float, default=analysis.DEFAULT_SCALE,
                   help="smoothing/stencil reach in units of T")
    p.add_argument("--separation", type=float, default=analysis.DEFAULT_SEPARATION,
                   help="minimum cusp separation in units of T")
    p.add_argument("--period", type=float, help="Heisenberg period T (default: from the file header)")
    p.add_argument("--sign", type=int, choices=(1, -1), help="envelope (1 + sign cos wt)/2 for tip residuals")
    p.add_argument("--refine", action="store_true", help="refine cusp times by line intersection")

    p = sub.add_parser("identity-check", help="partial sum of sin^2(n a)/(n a)^2 against pi/a")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--nmax", type=int, default=1_000_000)

    p = sub.add_parser("figures", help="reproduce the data behind a figure")
    p.add_argument("--which", choices=sorted(runs.FIGURES) + ["all"], default="all")
    p.add_argument("--out-dir", default="figures")
    p.add_argument("--serial", action="store_true")
    return parser


def resolve_run_config(args) -> runs.RunConfig:
    data: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - runs.RunConfig.keys()
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in runs.RunConfig.keys():
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if getattr(args, "fixed_methods", None):
        if data.get("methods") not in (None, list(args.fixed_methods), args.fixed_methods):
            raise ConfigError(f"the {args.command} command always uses methods={args.fixed_methods[0]}")
        data["methods"] = args.fixed_methods
    if "periods" in data and "t_max" in data and args.config:
        # a duration flag replaces whichever duration the file gave
        if args.periods is not None:
            data.pop("t_max")
        elif args.t_max is not None:
            data.pop("periods")
    data.setdefault("out", f"{args.command}.csv")
    return runs.RunConfig.from_mapping(data)


def cmd_run(args) -> int:
    config = resolve_run_config(args)
    results = runs.execute(config)
    params = config.params()
    print(f"T = {params.heisenberg_time:.10g}  theta = {params.theta:.10g}  g/delta = {params.g_over_delta:.6g}")
    for method, (path, cols) in results.items():
        print(f"{method}: wrote {path} ({cols['t'].size} rows)")
        if config.cusps:
            for summary in runs.cusp_summaries(cols, params):
                print("\n".join("  " + s for s in summary.lines()))
    return EXIT_OK


def _load(path):
    try:
        return read_series_csv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def cmd_compare(args) -> int:
    meta_a, a = _load(args.a)
    _, b = _load(args.b)
    if a["t"].size != b["t"].size or not np.array_equal(a["t"], b["t"]):
        raise ConfigError("files do not share the same time grid")
    if args.cols:
        names = [c.strip() for c in args.cols.split(",")]
    else:
        names = [c for c in a if c in b and c not in ("t", "t_over_T")]
    period = (meta_a.get("params") or {}).get("heisenberg_time")
    for name in names:
        rep = analysis.compare_series(TimeSeries(a["t"], column(a, name)),
                                      TimeSeries(b["t"], column(b, name)), period=period)
        print(f"{name}: max {rep.max_abs_error:.6e}  rms {rep.rms_error:.6e}")
    return EXIT_OK


def cmd_cusps(args) -> int:
    meta, cols = _load(args.path)
    stored = meta.get("params") or {}
    period = args.period if args.period is not None else stored.get("heisenberg_time")
    if period is None:
        raise ConfigError("no Heisenberg period in the file header; pass --period")
    if stored and args.period is None:
        params = IdealModelParams(**stored)
    else:
        # only T matters for detection; omega only for the envelope
        theta = stored.get("theta", 0.0)
        params = IdealModelParams(stored.get("g", 0.0), 2 * math.pi / period, period,
                                  theta, theta / period, stored.get("q_init", math.pi / 2))
    series = TimeSeries(cols["t"], column(cols, args.col), label=args.col)
    rep = analysis.detect_cusps(series, params, kappa=args.kappa, scale=args.scale,
                                min_separation=args.separation, refine=args.refine,
                                envelope_sign=args.sign)
    print("\n".join(runs.CuspSummary(args.col, rep, period).lines()))
    if rep.spacings:
        print(f"fundamental spacing / T = {rep.fundamental_spacing / period:.6f}")
    return EXIT_OK


def cmd_identity(args) -> int:
    if args.nmax < 1:
        raise ConfigError("nmax must be >= 1")
    try:
        total = sinc_sum_identity(args.alpha, args.nmax)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    exact = math.pi / args.alpha
    print(f"partial sum  {total:.12f}")
    print(f"pi/alpha     {exact:.12f}")
    print(f"difference   {total - exact:.3e}  (tail bound {sinc_tail_bound(args.alpha, args.nmax):.3e})")
    return EXIT_OK


def cmd_figures(args) -> int:
    out_dir = Path(args.out_dir)
    which = sorted(runs.FIGURES) if args.which == "all" else [args.which]
    for key in which:
        print("\n".join(runs.FIGURES[key](out_dir, serial=args.serial)))
    return EXIT_OK


COMMANDS = {
    "quench": cmd_run, "truncated": cmd_run, "ideal": cmd_run,
    "compare": cmd_compare, "cusps": cmd_cusps,
    "identity-check": cmd_identity, "figures": cmd_figures,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"blochcusp: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"blochcusp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, KeyError) as exc:
        print(f"blochcusp: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
