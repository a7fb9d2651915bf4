"""Command-line front end.

    mm-access sweep --config <file> [--sweep snr|J|Nr] [--seed N] [--trials N]
                    [--snr DB] [--out results.csv] [--plot results.svg]
                    [--plot-metric pe|ber] [--workers N]
    mm-access complexity --config <file>

The config file is plain ``key = value`` text (see README); command-line
flags override file values. Exit status is 0 iff every requested output was
written. MM_ACCESS_THREADS caps the worker count.
"""

from __future__ import annotations

import argparse
import sys

from . import harness
from .metrics import COMPLEXITY_ALGORITHMS, complexity_eval


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mm-access", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a Monte Carlo sweep and write CSV/SVG results")
    sweep.add_argument("--config", required=True, help="key = value config file")
    sweep.add_argument("--sweep", help="sweep variable: snr, J or Nr")
    sweep.add_argument("--seed", type=int, help="master seed override")
    sweep.add_argument("--trials", type=int, help="trials per sweep point")
    sweep.add_argument("--snr", type=float, help="base snr_db override")
    sweep.add_argument("--out", help="CSV output path (default: CSV to stdout)")
    sweep.add_argument("--plot", help="SVG line-chart output path")
    sweep.add_argument("--plot-metric", choices=("pe", "ber"), default="ber")
    sweep.add_argument("--workers", type=int, help="parallel trial workers")

    comp = sub.add_parser("complexity", help="print closed-form multiplication counts")
    comp.add_argument("--config", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg_text = harness.load_config(args.config)
    except OSError as exc:
        print(f"mm-access: cannot read config: {exc}", file=sys.stderr)
        return 1
    except harness.ConfigError as exc:
        print(f"mm-access: {exc}", file=sys.stderr)
        return 1

    if args.command == "complexity":
        try:
            spec = harness.spec_from_config(cfg_text)
        except harness.ConfigError as exc:
            print(f"mm-access: {exc}", file=sys.stderr)
            return 1
        cfg = spec.base
        print(f"complex multiplications at k={cfg.k} k_a={cfg.k_a} n_t={cfg.n_t} n_r={cfg.n_r} j={cfg.j}")
        for name in COMPLEXITY_ALGORITHMS:
            count = complexity_eval(cfg, name)
            label = "ls/benchmark1" if name == "ls" else name
            print(f"{label:13s} {count:14.0f}  ({count / 1e6:.4f}e6)")
        return 0

    try:
        spec = harness.spec_from_config(
            cfg_text, sweep=args.sweep, seed=args.seed, trials=args.trials, snr_db=args.snr
        )
    except harness.ConfigError as exc:
        print(f"mm-access: {exc}", file=sys.stderr)
        return 1

    rows = harness.run_sweep(spec, workers=args.workers)
    try:
        if args.out:
            harness.emit_csv(rows, args.out, spec)
        else:
            print(harness.describe_spec(spec))
            print(harness.CSV_HEADER)
            for r in rows:
                print(
                    f"{r.sweep_var},{r.value:.6g},{r.detector},{r.pe_mean:.6g},{r.pe_ci:.6g},"
                    f"{r.ber_mean:.6g},{r.ber_ci:.6g},{r.trials},{r.wall_ms_mean:.6g},{r.mult_estimate:.6g}"
                )
        if args.plot:
            harness.emit_plot(rows, args.plot, metric=args.plot_metric)
    except (OSError, ValueError) as exc:
        print(f"mm-access: cannot write output: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
