"""Experiment configuration and the replication runner behind the CLI.

A configuration file (TOML) declares shared settings plus one or more
experiments; each experiment fixes a sampling design and a set of regimes,
and each regime expands into cells: one baseline cell (no sources) and one
cell per (n_s, m_s) combination.  For every cell and replication the
runner simulates a bundle with ``2 n_t`` target subjects, runs the
design-matched bagged adaptive estimator, and records the integrated
squared error against the target mean.

Seeding is counter based: replication ``r`` of cell ``c`` uses the stream
``SeedSequence((master_seed, c, r))``, so any cell can be reproduced in
isolation and results are independent of execution order.  Result rows
are flushed per replication and completed cells are reused verbatim on
re-runs, making interrupted runs resumable by cell.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .adaptive import bagged, run_alc, run_ali
from .metrics import RiskSummary, imse, summarize
from .model import DesignKind, DesignRegularity, SampleSizes, SmoothnessSpec
from .simgen import MeanSpec, NoiseSpec, generate_bundle, benchmark_source, benchmark_target

__all__ = [
    "CellSpec",
    "RegimeSpec",
    "ExperimentConfig",
    "ConfigError",
    "load_config",
    "packaged_config_path",
    "run_experiment",
    "results_path",
    "summary_path",
    "read_rows",
    "RESULT_COLUMNS",
    "SUMMARY_COLUMNS",
]

RESULT_COLUMNS = ("design", "n_t", "m_t", "n_s", "m_s", "K", "replication", "seed", "imse")
SUMMARY_COLUMNS = (
    "design", "n_t", "m_t", "n_s", "m_s", "K",
    "count", "mean", "min", "q1", "median", "q3", "max",
)


class ConfigError(ValueError):
    """Raised when a configuration file cannot be parsed or validated."""


@dataclass(frozen=True)
class CellSpec:
    """One simulation cell: target sizes plus a source configuration."""

    n_t: int
    m_t: int
    n_s: int = 0
    m_s: int = 0
    k_sources: int = 0

    def __post_init__(self):
        if self.n_t < 1 or self.m_t < 1:
            raise ConfigError("cells need positive n_t and m_t")
        if min(self.n_s, self.m_s, self.k_sources) < 0:
            raise ConfigError("source sizes must be nonnegative")
        has_sources = self.k_sources > 0
        if has_sources != (self.n_s > 0 and self.m_s > 0):
            raise ConfigError("source sizes must be all positive or all zero")

    @property
    def is_baseline(self) -> bool:
        return self.k_sources == 0

    def label(self, design: DesignKind) -> str:
        return (
            f"{design.value}-nt{self.n_t}-mt{self.m_t}"
            f"-ns{self.n_s}-ms{self.m_s}-k{self.k_sources}"
        )


@dataclass(frozen=True)
class RegimeSpec:
    """A target-size regime and the source-size grid explored within it."""

    label: str
    n_t: int
    m_t: int
    n_s_grid: tuple[int, ...]
    m_s_grid: tuple[int, ...]
    include_baseline: bool = True

    def cells(self, k_sources: int) -> list[CellSpec]:
        out: list[CellSpec] = []
        if self.include_baseline:
            out.append(CellSpec(self.n_t, self.m_t))
        for n_s in self.n_s_grid:
            for m_s in self.m_s_grid:
                out.append(CellSpec(self.n_t, self.m_t, n_s, m_s, k_sources))
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment run needs, including its RNG seed."""

    name: str
    design: DesignKind
    regimes: tuple[RegimeSpec, ...]
    replications: int
    r_max: int
    seed: int
    smoothness: SmoothnessSpec
    regularity: DesignRegularity
    sigma: float
    out_dir: str
    k_sources: int = 2

    def __post_init__(self):
        if self.replications < 1 or self.r_max < 1:
            raise ConfigError("replications and r_max must be >= 1")
        if self.sigma < 0:
            raise ConfigError("sigma must be nonnegative")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must fit in 64 bits")

    @property
    def cells(self) -> tuple[CellSpec, ...]:
        out: list[CellSpec] = []
        for regime in self.regimes:
            out.extend(regime.cells(self.k_sources))
        return tuple(out)


def packaged_config_path(name: str) -> Path:
    """Path of a configuration shipped with the repository by bare name."""
    return Path(__file__).resolve().parent / "configs" / f"{name}.toml"


def _regime_from_table(table: dict) -> RegimeSpec:
    try:
        n_s = table.get("n_s", [])
        m_s = table.get("m_s", [])
        return RegimeSpec(
            label=str(table.get("label", f"nt{table['n_t']}-mt{table['m_t']}")),
            n_t=int(table["n_t"]),
            m_t=int(table["m_t"]),
            n_s_grid=tuple(int(v) for v in (n_s if isinstance(n_s, list) else [n_s])),
            m_s_grid=tuple(int(v) for v in (m_s if isinstance(m_s, list) else [m_s])),
            include_baseline=bool(table.get("baseline", True)),
        )
    except KeyError as exc:
        raise ConfigError(f"regime table missing key {exc}") from exc


def load_config(path: str | Path, seed: int | None = None, out_dir: str | None = None) -> list[ExperimentConfig]:
    """Parse a TOML configuration file into one config per experiment.

    ``path`` may also be the bare name of a packaged configuration
    (e.g. ``paper-figures``).  ``seed`` and ``out_dir`` override the
    file's values when given.
    """
    p = Path(path)
    if not p.exists():
        packaged = packaged_config_path(str(path))
        if packaged.exists():
            p = packaged
        else:
            raise ConfigError(f"config file not found: {path}")
    try:
        with open(p, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {p}: {exc}") from exc

    defaults = raw.get("defaults", {})
    try:
        smoothness = SmoothnessSpec(**raw.get("smoothness", {}))
        regularity = DesignRegularity(**raw.get("regularity", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid smoothness/regularity section: {exc}") from exc

    experiments = raw.get("experiment", [])
    if not experiments:
        raise ConfigError("config declares no [[experiment]] table")
    configs: list[ExperimentConfig] = []
    for table in experiments:
        try:
            design = DesignKind(table["design"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"experiment needs design 'common' or 'independent': {exc}") from exc
        regimes = tuple(_regime_from_table(t) for t in table.get("regime", []))
        if not regimes:
            raise ConfigError(f"experiment {table.get('name', design.value)!r} has no regimes")
        try:
            configs.append(
                ExperimentConfig(
                    name=str(table.get("name", design.value)),
                    design=design,
                    regimes=regimes,
                    replications=int(table.get("replications", defaults.get("replications", 50))),
                    r_max=int(table.get("r_max", defaults.get("r_max", 20))),
                    seed=int(seed if seed is not None else defaults.get("seed", 0)),
                    smoothness=smoothness,
                    regularity=regularity,
                    sigma=float(table.get("sigma", defaults.get("sigma", 1.0))),
                    out_dir=str(out_dir if out_dir is not None else defaults.get("out", "results")),
                    k_sources=int(table.get("k_sources", defaults.get("k_sources", 2))),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid experiment table: {exc}") from exc
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError("experiment names must be unique")
    return configs


# ---------------------------------------------------------------------------
# Replication execution
# ---------------------------------------------------------------------------


def benchmark_source_means(k_sources: int) -> list[MeanSpec]:
    """Benchmark source means for ``k`` groups, cycling the two differences."""
    return [benchmark_source(1 + j % 2) for j in range(k_sources)]


def replication_seed(master: int, cell_index: int, replication: int) -> np.random.SeedSequence:
    """The documented counter-based stream of one (cell, replication) pair."""
    return np.random.SeedSequence((master, cell_index, replication))


def seed_fingerprint(master: int, cell_index: int, replication: int) -> int:
    """Stable u64 identifying the replication stream (the CSV ``seed`` column)."""
    return int(replication_seed(master, cell_index, replication).generate_state(1, np.uint64)[0])


def run_replication(
    design: DesignKind,
    cell: CellSpec,
    smoothness: SmoothnessSpec,
    regularity: DesignRegularity,
    sigma: float,
    r_max: int,
    master_seed: int,
    cell_index: int,
    replication: int,
) -> float:
    """Simulate one bundle, run the bagged adaptive estimator, return its IMSE.

    The bundle carries ``2 n_t`` target subjects as the adaptive runners
    expect; the truth for the error integral is the benchmark target mean.
    """
    rng = np.random.default_rng(replication_seed(master_seed, cell_index, replication))
    sizes = SampleSizes(2 * cell.n_t, cell.m_t, cell.n_s, cell.m_s, cell.k_sources)
    bundle = generate_bundle(
        sizes,
        design,
        benchmark_target(),
        benchmark_source_means(cell.k_sources),
        NoiseSpec(sigma),
        rng,
        process_noise=True,
    )
    runner = run_alc if design is DesignKind.COMMON else run_ali
    estimator = bagged(lambda g: runner(bundle, smoothness, regularity, g), r_max, rng)
    return imse(estimator, benchmark_target())


def _replication_job(args) -> tuple[int, float]:
    (design, cell, smoothness, regularity, sigma, r_max, seed, cell_index, rep) = args
    return rep, run_replication(
        design, cell, smoothness, regularity, sigma, r_max, seed, cell_index, rep
    )


def _cell_values(
    config: ExperimentConfig,
    cell_index: int,
    cell: CellSpec,
    threads: int,
    on_row: Callable[[int, float], None],
) -> list[float]:
    jobs = [
        (
            config.design,
            cell,
            config.smoothness,
            config.regularity,
            config.sigma,
            config.r_max,
            config.seed,
            cell_index,
            rep,
        )
        for rep in range(config.replications)
    ]
    values: list[float] = []
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for rep, value in pool.map(_replication_job, jobs):
                values.append(value)
                on_row(rep, value)
    else:
        for job in jobs:
            rep, value = _replication_job(job)
            values.append(value)
            on_row(rep, value)
    return values


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def results_path(out_dir: str | Path, name: str) -> Path:
    return Path(out_dir) / f"results_{name}.csv"


def summary_path(out_dir: str | Path, name: str) -> Path:
    return Path(out_dir) / f"summary_{name}.csv"


def read_rows(path: str | Path) -> list[dict[str, str]]:
    """Rows of a results/summary CSV as dicts keyed by the header."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        return []
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:] if line]


def _cell_key(cell: CellSpec, design: DesignKind) -> tuple:
    return (design.value, cell.n_t, cell.m_t, cell.n_s, cell.m_s, cell.k_sources)


def _existing_cell_lines(path: Path, config: ExperimentConfig) -> dict[tuple, list[str]]:
    """Raw data lines of previously completed cells, keyed by cell."""
    if not path.exists():
        return {}
    lines = path.read_text().splitlines()
    if not lines or lines[0] != ",".join(RESULT_COLUMNS):
        return {}
    by_cell: dict[tuple, list[str]] = {}
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(RESULT_COLUMNS):
            continue
        key = (parts[0], int(parts[1]), int(parts[2]), int(parts[3]), int(parts[4]), int(parts[5]))
        by_cell.setdefault(key, []).append(line)
    return {
        key: cell_lines
        for key, cell_lines in by_cell.items()
        if len(cell_lines) == config.replications
    }


def run_experiment(
    config: ExperimentConfig,
    threads: int = 1,
    cell_filter: str | None = None,
    log: Callable[[str], None] | None = None,
) -> dict[tuple, RiskSummary]:
    """Run every cell of one experiment and write results plus summaries.

    Returns the per-cell summaries keyed by
    ``(design, n_t, m_t, n_s, m_s, K)``.  Cells already complete in the
    results CSV are reused verbatim; ``cell_filter`` restricts computation
    to cells whose label contains the filter string.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = results_path(out_dir, config.name)
    existing = _existing_cell_lines(path, config)
    emit = log if log is not None else (lambda msg: None)

    summaries: dict[tuple, RiskSummary] = {}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        fh.flush()
        for cell_index, cell in enumerate(config.cells):
            key = _cell_key(cell, config.design)
            label = cell.label(config.design)
            if key in existing:
                for line in existing[key]:
                    fh.write(line + "\n")
                fh.flush()
                values = [float(line.split(",")[-1]) for line in existing[key]]
                summaries[key] = summarize(values)
                emit(f"cell {label}: reused {len(values)} replications")
                continue
            if cell_filter is not None and cell_filter not in label:
                emit(f"cell {label}: skipped by filter")
                continue

            prefix = ",".join(str(v) for v in key)

            def on_row(rep: int, value: float, prefix=prefix, cell_index=cell_index) -> None:
                fingerprint = seed_fingerprint(config.seed, cell_index, rep)
                fh.write(f"{prefix},{rep},{fingerprint},{value!r}\n")
                fh.flush()

            values = _cell_values(config, cell_index, cell, threads, on_row)
            summaries[key] = summarize(values)
            emit(f"cell {label}: median imse {summaries[key].median:.4g}")

    with open(summary_path(out_dir, config.name), "w", encoding="utf-8") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for cell in config.cells:
            key = _cell_key(cell, config.design)
            if key not in summaries:
                continue
            s = summaries[key]
            fh.write(
                ",".join(
                    [str(v) for v in key]
                    + [str(s.count), repr(s.mean), repr(s.minimum), repr(s.q1), repr(s.median), repr(s.q3), repr(s.maximum)]
                )
                + "\n"
            )
    return summaries
