"""Command line entry points: simulate, sweep, ingest."""

from __future__ import annotations

import argparse
import itertools
import sys

import yaml

from .config import apply_overrides, load_config
from .errors import SimulationError
from .experiment import run_experiment
from .ingest import ingest_dataset, save_profile_cache
from .reporting import emit_report, emit_sweep


def _parse_vary(arg: str) -> tuple[str, list]:
    key, _, values = arg.partition("=")
    if not values:
        raise argparse.ArgumentTypeError(f"--vary expects key=v1,v2,..., got {arg!r}")
    return key, [yaml.safe_load(v) for v in values.split(",")]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vhetsim",
                                     description="Cell-switching simulator with sleeping-cell load estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one experiment and emit reports")
    sim.add_argument("--config", required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", default=None)
    sim.add_argument("--estimator", default=None, help="override estimator method")
    sim.add_argument("--sbs-count", type=int, default=None)

    sweep = sub.add_parser("sweep", help="run a parameter sweep and emit plot-data series")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--vary", action="append", required=True, type=_parse_vary,
                       metavar="KEY=V1,V2,...",
                       help="first --vary is the x-axis; further ones split series")
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--out", default="sweep_out")

    ing = sub.add_parser("ingest", help="pre-aggregate a CDR dataset into a profile cache")
    ing.add_argument("--dataset", required=True)
    ing.add_argument("--cache", required=True)
    ing.add_argument("--grid-side", type=int, default=100)
    ing.add_argument("--cell-size", type=float, default=235.0)
    ing.add_argument("--days", type=int, default=None)
    return parser


def _simulate(args) -> int:
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.estimator is not None:
        overrides["estimator.method"] = args.estimator
    if args.sbs_count is not None:
        overrides["sbs_count"] = args.sbs_count
    if args.out is not None:
        overrides["output"] = args.out
    if overrides:
        config = apply_overrides(config, overrides)
    report = run_experiment(config)
    outdir = config.output or "out"
    paths = emit_report(report, outdir)
    agg = report.summary()["aggregates"]
    print(f"wrote {paths['rows']} ({len(report.rows)} rows); "
          f"mean eps {agg['mean_eps']['mean']:.4f}, "
          f"mean power true/est {agg['power_true_w']['mean']:.2f}/"
          f"{agg['power_est_w']['mean']:.2f} W")
    return 0


def _sweep(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = apply_overrides(config, {"seed": args.seed})
    keys = [key for key, _ in args.vary]
    value_lists = [values for _, values in args.vary]
    results = []
    for combo in itertools.product(*value_lists):
        overrides = dict(zip(keys, combo))
        run_config = apply_overrides(config, overrides)
        report = run_experiment(run_config)
        label = "_".join(f"{k.replace('.', '-')}={v}" for k, v in overrides.items())
        emit_report(report, f"{args.out}/run_{label}")
        results.append((overrides, report))
    paths = emit_sweep(results, keys[0], args.out)
    for path in paths:
        print(f"wrote {path}")
    return 0


def _ingest(args) -> int:
    profiles = ingest_dataset(args.dataset, args.grid_side, args.cell_size,
                              day_count=args.days)
    save_profile_cache(profiles, args.cache)
    print(f"wrote {args.cache} ({len(profiles)} cell profiles)")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _simulate(args)
        if args.command == "sweep":
            return _sweep(args)
        return _ingest(args)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
