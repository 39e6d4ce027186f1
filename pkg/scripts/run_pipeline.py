#!/usr/bin/env python3
"""Run the full experiment pipeline end to end.

Stages: dataset generation, dynamics-model training, blind-vs-informed
rollout comparison, value-estimator evaluation, NFQ and BSF-NFQ learning
runs, and a final aggregated report.

Usage:
    python scripts/run_pipeline.py --out results [--preset desk|paper]
                                   [--config cfg.ini] [--seed-offset N]
"""

import argparse
import sys

from mbrollout.cli import main as cli_main

STAGES = [
    ["generate"],
    ["train-models"],
    ["rollout-compare"],
    ["evaluate-values"],
    ["learn", "--algorithm", "nfq"],
    ["learn", "--algorithm", "bsf-nfq"],
    ["report"],
]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--preset", choices=["desk", "paper"], default="desk")
    parser.add_argument("--config")
    parser.add_argument("--seed-offset", type=int, default=0)
    args = parser.parse_args()

    common = ["--out", args.out, "--preset", args.preset,
              "--seed-offset", str(args.seed_offset)]
    if args.config:
        common += ["--config", args.config]

    for stage in STAGES:
        print(f"==> {' '.join(stage)}", flush=True)
        rc = cli_main(stage + common)
        if rc != 0:
            print(f"stage failed: {' '.join(stage)} (exit {rc})", file=sys.stderr)
            return rc
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
