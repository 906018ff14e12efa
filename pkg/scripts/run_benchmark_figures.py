#!/usr/bin/env python3
"""Reproduce the benchmark boxplot figures from the bundled default grid.

Runs both designs over both frequency regimes (17 cells each: a
no-source baseline plus the 4 x 4 source-size grid) and renders one
grouped boxplot per regime.  Expect hours of compute at the full 50
replications; use --threads and, for a quick look, --replications.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fmtl.cli import main as cli_main
from fmtl.experiment import load_config


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/figures")
    parser.add_argument("--threads", type=int, default=2)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--cells", default=None)
    args = parser.parse_args()

    run_args = ["run", "--config", "paper-figures", "--out", args.out, "--threads", str(args.threads)]
    if args.seed is not None:
        run_args += ["--seed", str(args.seed)]
    if args.cells is not None:
        run_args += ["--cells", args.cells]
    rc = cli_main(run_args)
    if rc != 0:
        return rc
    fig_args = ["figures", "--config", "paper-figures", "--out", args.out]
    if args.seed is not None:
        fig_args += ["--seed", str(args.seed)]
    return cli_main(fig_args)


if __name__ == "__main__":
    sys.exit(main())
