"""Command line interface: run experiments, render figures, check rates.

Verbs:

* ``run``       execute every experiment in a config, writing CSV results
* ``figures``   render SVG boxplots from the CSV summaries of a config
* ``rates``     run the convergence-rate studies and write CSV + SVG
* ``validate``  parse the config and validate one generated bundle per cell

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import figures, rates
from .experiment import (
    ConfigError,
    load_config,
    read_rows,
    run_experiment,
    summary_path,
)
from .model import SampleSizes, validate_bundle
from .simgen import NoiseSpec, generate_bundle, benchmark_target
from .experiment import benchmark_source_means


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fmtl",
        description="Transfer-learning mean estimation: simulation experiments and reports.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_common(p: argparse.ArgumentParser, needs_config: bool) -> None:
        if needs_config:
            p.add_argument("--config", required=True, help="config path or packaged name (e.g. paper-figures)")
        p.add_argument("--out", default=None, help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker processes per cell")
        p.add_argument("--cells", default=None, help="only compute cells whose label contains this string")

    add_common(sub.add_parser("run", help="execute a config"), True)
    add_common(sub.add_parser("figures", help="render figures from CSVs"), True)
    r = sub.add_parser("rates", help="run the rate-check studies")
    r.add_argument("--out", default="results", help="output directory")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument(
        "--study",
        choices=["bias", "floor", "monotone", "all"],
        default="all",
    )
    v = sub.add_parser("validate", help="config and bundle checks only")
    v.add_argument("--config", required=True)
    v.add_argument("--seed", type=int, default=None)
    return parser


def _cmd_run(args) -> int:
    configs = load_config(args.config, seed=args.seed, out_dir=args.out)
    for config in configs:
        print(f"experiment {config.name}: {len(config.cells)} cells x {config.replications} replications")
        run_experiment(config, threads=args.threads, cell_filter=args.cells, log=print)
        print(f"experiment {config.name}: results in {config.out_dir}")
    return 0


def _cmd_figures(args) -> int:
    configs = load_config(args.config, seed=args.seed, out_dir=args.out)
    for config in configs:
        path = summary_path(config.out_dir, config.name)
        if not path.exists():
            raise FileNotFoundError(f"summary CSV not found: {path} (run the experiment first)")
        rows = read_rows(path)
        expected = [
            (config.design.value, c.n_t, c.m_t, c.n_s, c.m_s, c.k_sources) for c in config.cells
        ]
        written = figures.emit_figures(rows, config.out_dir, config.name, expected_cells=expected)
        for p in written:
            print(f"wrote {p}")
    return 0


def _write_rate_outputs(result, out_dir: Path) -> None:
    csv_path = out_dir / f"rates_{result.name}.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("size,risk\n")
        for size, risk in result.points:
            fh.write(f"{size:g},{risk!r}\n")
    svg_path = out_dir / f"rates_{result.name}.svg"
    svg_path.write_text(
        figures.rate_plot_svg(f"{result.name} (log-log)", result.points, result.slope),
        encoding="utf-8",
    )
    slope_text = f" slope={result.slope:.3f}" if result.slope is not None else ""
    print(f"{result.name}:{slope_text} -> {csv_path}, {svg_path}")


def _cmd_rates(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    chosen = args.study
    if chosen in ("bias", "all"):
        _write_rate_outputs(rates.study_bias_slope(seed=args.seed, threads=args.threads), out_dir)
    if chosen in ("floor", "all"):
        _write_rate_outputs(rates.study_parametric_floor(seed=args.seed, threads=args.threads), out_dir)
    if chosen in ("monotone", "all"):
        _write_rate_outputs(rates.study_independent_monotone(seed=args.seed, threads=args.threads), out_dir)
    return 0


def _cmd_validate(args) -> int:
    configs = load_config(args.config, seed=args.seed)
    failures = 0
    for config in configs:
        for index, cell in enumerate(config.cells):
            rng = np.random.default_rng(np.random.SeedSequence((config.seed, index)))
            bundle = generate_bundle(
                SampleSizes(2 * cell.n_t, cell.m_t, cell.n_s, cell.m_s, cell.k_sources),
                config.design,
                benchmark_target(),
                benchmark_source_means(cell.k_sources),
                NoiseSpec(config.sigma),
                rng,
            )
            violations = validate_bundle(bundle)
            label = cell.label(config.design)
            if violations:
                failures += 1
                print(f"cell {label}: INVALID")
                for v in violations:
                    print(f"  - {v}")
            else:
                print(f"cell {label}: ok")
    if failures:
        print(f"{failures} invalid cell(s)")
        return 1
    print("all cells valid")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "figures":
            return _cmd_figures(args)
        if args.verb == "rates":
            return _cmd_rates(args)
        return _cmd_validate(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
