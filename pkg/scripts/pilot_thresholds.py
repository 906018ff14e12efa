#!/usr/bin/env python3
"""Regenerate the pilot record behind the acceptance thresholds.

Runs the checked-in `acceptance` configuration and the three rate
studies, writing CSVs into results/pilot/ and printing the medians and
slopes that tests/test_acceptance.py asserts.  See results/pilot/PILOT.md
for the frozen values and their discussion.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from fmtl.experiment import load_config, run_experiment
from fmtl.rates import study_bias_slope, study_independent_monotone, study_parametric_floor


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/pilot")
    parser.add_argument("--threads", type=int, default=2)
    args = parser.parse_args()

    t0 = time.perf_counter()
    for config in load_config("acceptance", out_dir=args.out):
        summaries = run_experiment(config, threads=args.threads, log=print)
        for key, s in summaries.items():
            print(f"{config.name} {key}: median {s.median:.5f} (q1 {s.q1:.5f}, q3 {s.q3:.5f})")
    print(f"simulation cells: {(time.perf_counter() - t0) / 60:.1f} min")

    bias = study_bias_slope(seed=0, threads=args.threads)
    print(f"bias slope: {bias.slope:.3f}; risks {[f'{v:.3e}' for v in bias.risks]}")
    floor = study_parametric_floor(seed=0, threads=args.threads)
    print(f"parametric floor slope: {floor.slope:.3f}; risks {[f'{v:.3e}' for v in floor.risks]}")
    mono = study_independent_monotone(seed=0, threads=args.threads)
    print(f"independent monotone medians: {[f'{v:.4f}' for v in mono.risks]}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
