#!/usr/bin/env python3
"""Run the three convergence-rate studies and write CSV + SVG reports."""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fmtl.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/rates")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=2)
    parser.add_argument("--study", choices=["bias", "floor", "monotone", "all"], default="all")
    args = parser.parse_args()
    return cli_main(
        [
            "rates",
            "--out", args.out,
            "--seed", str(args.seed),
            "--threads", str(args.threads),
            "--study", args.study,
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
