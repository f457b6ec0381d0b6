"""Command-line entry point: ``nccompare --experiment fig5 --trials 1000``."""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .experiments import (EXPERIMENTS, ExperimentConfig, emit_report, ensure_writable, parse_n_range,
                          run_experiment)
from .sim import ScheduleExhausted


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nccompare", description="IDNC vs RLNC throughput and delay experiments.")
    p.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    p.add_argument("--kt", type=int, default=15, help="packets per block (default 15)")
    p.add_argument("--n", type=int, default=10, help="receivers, for single-N experiments")
    p.add_argument("--n-range", type=parse_n_range, default=None, metavar="A:B:STEP",
                   help="receiver counts A..B inclusive")
    p.add_argument("--pe", type=float, default=0.2, help="erasure probability")
    p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials per point")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver", choices=("exact", "greedy"), default="exact")
    p.add_argument("--out", default="results", metavar="DIR")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--k", type=int, default=20, help="fig1 packet count")
    p.add_argument("--m0-step", type=int, default=1, help="fig1 spacing of the M0 grid")
    p.add_argument("--sfm", default=None, help="custom: demand matrix file")
    p.add_argument("--schedule", default=None, help="custom: X/O erasure pattern file")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    opts = {k: v for k, v in vars(args).items() if k != "verbose"}
    try:
        cfg = ExperimentConfig(**opts)
        ensure_writable(cfg.out)
        t0 = time.perf_counter()
        report = run_experiment(cfg)
        path = emit_report(report, cfg)
    except (ValueError, OSError, ScheduleExhausted) as exc:
        print(f"nccompare: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path} ({time.perf_counter() - t0:.1f}s)")
    if not report.ok:
        for c in report.failures():
            print(f"nccompare: fixture mismatch in {c['check']}: expected {c['expected']}, got {c['observed']}",
                  file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
