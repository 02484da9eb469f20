"""Command line entry point ``avrank``.

Subcommands::

    avrank simulate --config exp.cfg --out results/ [--reps N] [--seed S] [--workers W]
    avrank monitor  --pre blank.csv --statistic gaussian:effect=1.5 --alpha 0.05 [--checkpoint state.bin]
    avrank table    --results results/ --format md
    avrank utility  --results results/ --delta-grid 0.5:1.0:0.01

Exit codes: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .._errors import ConfigurationError, DataError
from .config import load_config
from .experiment import read_results, run_experiment, write_results
from .monitor import StatisticSpec, monitor, parse_stream, read_pre
from .utility import dominance_threshold, write_utility

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


def parse_delta_grid(text: str) -> np.ndarray:
    """``start:stop:step`` with both ends included, e.g. ``0.5:1.0:0.01``."""
    try:
        start, stop, step = (float(s) for s in text.split(":"))
    except ValueError as exc:
        raise ConfigurationError(f"delta grid must look like start:stop:step, got {text!r}") from exc
    if not (0.0 < start <= stop <= 1.0) or step <= 0.0:
        raise ConfigurationError("delta grid needs 0 < start <= stop <= 1 and a positive step")
    n = int(round((stop - start) / step))
    return np.round(np.linspace(start, start + n * step, n + 1), 12)


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config, replications=args.reps, master_seed=args.seed)
    result = run_experiment(cfg, workers=args.workers)
    write_results(result, args.out)
    print(f"wrote {Path(args.out) / 'results.csv'} ({cfg.replications} replications)")
    return EXIT_OK


def _cmd_monitor(args) -> int:
    pre = read_pre(args.pre)
    spec = StatisticSpec.parse(args.statistic)
    if not 0.0 < args.alpha < 1.0:
        raise ConfigurationError("alpha must lie in (0, 1)")
    if args.stream in (None, "-"):
        lines = sys.stdin
        test = monitor(pre, parse_stream(lines), spec, args.alpha, args.seed, args.checkpoint, sys.stdout)
    else:
        try:
            fh = open(args.stream)
        except OSError as exc:
            raise DataError(f"cannot read stream {args.stream}: {exc}") from exc
        with fh:
            test = monitor(pre, parse_stream(fh), spec, args.alpha, args.seed, args.checkpoint, sys.stdout)
    logging.getLogger(__name__).info("steps %d, anytime p %.6g, rejected %s",
                                     test.history.n_post, test.p_value, test.rejected)
    return EXIT_OK


def _table_rows(result):
    cfg = result.config
    rows = []
    for tag in result.tags():
        steps = result.rejection_steps(tag)
        rate = float(np.mean(steps > 0))
        se = float(np.sqrt(rate * (1.0 - rate) / steps.size))
        hit = steps[steps > 0]
        median = "" if hit.size == 0 else format(cfg.t0 + cfg.block_size * float(np.median(hit)), "g")
        rows.append([tag, str(steps.size), f"{rate:.4f}", f"{se:.4f}", median])
    return rows


def _cmd_table(args) -> int:
    result = read_results(args.results)
    header = ["test", "replications", "rejection_rate", "se", "median_rejection_time"]
    rows = _table_rows(result)
    if args.format == "csv":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    else:
        print("| " + " | ".join(header) + " |")
        print("|" + "|".join("---" for _ in header) + "|")
        for r in rows:
            print("| " + " | ".join(r) + " |")
    return EXIT_OK


def _cmd_utility(args) -> int:
    result = read_results(args.results)
    deltas = parse_delta_grid(args.delta_grid)
    out = Path(args.out) if args.out else Path(args.results) / "utility.csv"
    write_utility(result, out, deltas=deltas)
    print(f"wrote {out}")
    fixed = sorted(int(t.split("@", 1)[1]) for t in result.tags() if t.startswith("fixed_t@"))
    if fixed:
        for tag in result.tags():
            if tag.startswith("av_") or tag.startswith("mix_"):
                th = dominance_threshold(result, tag, fixed, deltas)
                if th is None:
                    print(f"{tag}: some fixed horizon is preferred even at delta = {deltas[-1]:g}")
                else:
                    print(f"{tag}: beats every fixed horizon for delta >= {th:.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="avrank", description="Anytime-valid rank tests for treatment effects.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a Monte Carlo experiment from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--reps", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=_cmd_simulate)

    m = sub.add_parser("monitor", help="stream post-period estimates through a sequential test")
    m.add_argument("--pre", required=True, help="blank-period estimates (t,tau_hat,phase or one column)")
    m.add_argument("--statistic", default="gaussian:effect=1.0",
                   help="kind[:effect=..,draws=..,seed=..,init=..]; kinds: gaussian, gaussian-generic, "
                        "plugin, plugin-generic, mixture, mixture-average, uniform")
    m.add_argument("--alpha", type=float, default=0.05)
    m.add_argument("--checkpoint")
    m.add_argument("--stream", help="file with one estimate per line (default: stdin)")
    m.add_argument("--seed", type=int, default=0, help="seed for tie-breaking keys")
    m.set_defaults(func=_cmd_monitor)

    t = sub.add_parser("table", help="summarise rejection rates of a results directory")
    t.add_argument("--results", required=True)
    t.add_argument("--format", choices=("csv", "md"), default="md")
    t.set_defaults(func=_cmd_table)

    u = sub.add_parser("utility", help="discounted utilities and dominance thresholds")
    u.add_argument("--results", required=True)
    u.add_argument("--delta-grid", default="0.01:1.0:0.01")
    u.add_argument("--out", help="output CSV (default: <results>/utility.csv)")
    u.set_defaults(func=_cmd_utility)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
