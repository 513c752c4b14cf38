#!/usr/bin/env python3
"""Run the full benchmark suite for one budget profile.

    python3 scripts/run_suite.py --profile desk --out .cache/desk
    python3 scripts/run_suite.py --profile full --out runs/full --include-sweep

Produces, under --out: the frozen wind predictor, one training run per
setup and seed, convergence.csv, inference.csv + aggregate,
scaling.csv + aggregate, optionally sweep.csv, and report.md.
Finished runs are detected and skipped, so the script is safe to re-run
after an interruption.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from windfarm.configio import apply_override, load_yaml, parse_override
from windfarm.experiments import experiment_from_dict, run_suite


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--profile", choices=["desk", "full"], default="desk")
    parser.add_argument("--config", type=Path, default=None, help="yaml config file")
    parser.add_argument("--out", type=Path, required=True)
    parser.add_argument("--include-sweep", action="store_true", help="also run the neighbour-count sweep")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    args = parser.parse_args()

    data = load_yaml(args.config) if args.config else {}
    for expr in args.overrides:
        keys, value = parse_override(expr)
        apply_override(data, keys, value)
    config = experiment_from_dict(data, args.profile)

    start = time.time()
    run_suite(config, args.out, include_sweep=args.include_sweep)
    print(f"suite complete in {time.time() - start:.0f}s -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
