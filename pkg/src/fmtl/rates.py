"""Empirical convergence-rate studies on simulated data.

Three studies check the expected risk behaviour of the estimators as one
sample dimension grows:

* ``bias_slope``: noiseless kinked target under a common design; the
  integrated error is pure approximation bias and its log-log slope
  against the sampling frequency should sit near -2.
* ``parametric_floor``: smooth polynomial target with process and
  observation noise at high sampling frequency; the error is variance
  dominated and its slope against the subject count should sit near -1.
* ``independent_monotone``: adaptive grid selection on an independent
  design without sources; the median error must fall as the sampling
  frequency grows.  Replication streams are shared across frequencies
  (common random numbers) so the comparison is paired.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .adaptive import bagged, run_ali
from .localpoly import fit
from .metrics import imse, rate_slope, summarize
from .model import DesignKind, DesignRegularity, SampleSizes, SmoothnessSpec
from .simgen import MeanSpec, NoiseSpec, generate_bundle, benchmark_target
from .transfer import cl_params_common

__all__ = [
    "RateStudyResult",
    "study_bias_slope",
    "study_parametric_floor",
    "study_independent_monotone",
]


@dataclass(frozen=True)
class RateStudyResult:
    """Per-size risk aggregates of one study, plus the fitted log-log slope."""

    name: str
    sizes: tuple[int, ...]
    risks: tuple[float, ...]
    slope: float | None

    @property
    def points(self) -> list[tuple[float, float]]:
        return [(float(s), float(r)) for s, r in zip(self.sizes, self.risks)]


def _kink_mean() -> MeanSpec:
    return MeanSpec.custom(lambda x: np.abs(x - 0.5), "kink")


def _smooth_mean() -> MeanSpec:
    return MeanSpec.custom(lambda x: 1.0 + 0.5 * x - x**2, "quadratic")


def _map_jobs(worker: Callable, jobs: list, threads: int) -> list:
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, jobs))
    return [worker(job) for job in jobs]


def _bias_job(args) -> float:
    seed, rep, m_t, n_t = args
    rng = np.random.default_rng(np.random.SeedSequence((seed, rep)))
    mean = _kink_mean()
    bundle = generate_bundle(
        SampleSizes(n_t, m_t), DesignKind.COMMON, mean, [], NoiseSpec(0.0), rng, process_noise=False
    )
    spec = SmoothnessSpec(alpha_mean=1.0)
    params = cl_params_common(spec, DesignRegularity(), n_t, m_t)
    est = fit(bundle.target, params, DesignKind.COMMON, rng)
    return imse(est, mean)


def study_bias_slope(
    seed: int = 0,
    m_grid: Sequence[int] = (8, 16, 32, 64, 128),
    n_t: int = 200,
    replications: int = 10,
    threads: int = 1,
) -> RateStudyResult:
    """Noiseless common-design bias decay against the sampling frequency.

    The target ``|x - 0.5|`` has smoothness exponent 1, so with the tuned
    piecewise-constant fit the mean integrated error should scale like
    ``m_t**-2``.
    """
    risks = []
    for m_t in m_grid:
        jobs = [(seed, rep, m_t, n_t) for rep in range(replications)]
        risks.append(float(np.mean(_map_jobs(_bias_job, jobs, threads))))
    slope = rate_slope(list(zip(map(float, m_grid), risks)))
    return RateStudyResult("bias_slope", tuple(m_grid), tuple(risks), slope)


def _floor_job(args) -> float:
    seed, rep, m_t, n_t = args
    rng = np.random.default_rng(np.random.SeedSequence((seed, rep, n_t)))
    mean = _smooth_mean()
    bundle = generate_bundle(
        SampleSizes(n_t, m_t), DesignKind.COMMON, mean, [], NoiseSpec(1.0), rng, process_noise=True
    )
    spec = SmoothnessSpec(alpha_mean=2.0)
    params = cl_params_common(spec, DesignRegularity(), n_t, m_t)
    est = fit(bundle.target, params, DesignKind.COMMON, rng)
    return imse(est, mean)


def study_parametric_floor(
    seed: int = 0,
    n_grid: Sequence[int] = (25, 50, 100, 200, 400),
    m_t: int = 200,
    replications: int = 50,
    threads: int = 1,
) -> RateStudyResult:
    """Variance decay against the subject count at high sampling frequency.

    A degree-matched polynomial target removes the bias entirely, so the
    mean integrated error follows the ``1/n_t`` term.
    """
    risks = []
    for n_t in n_grid:
        jobs = [(seed, rep, m_t, n_t) for rep in range(replications)]
        risks.append(float(np.mean(_map_jobs(_floor_job, jobs, threads))))
    slope = rate_slope(list(zip(map(float, n_grid), risks)))
    return RateStudyResult("parametric_floor", tuple(n_grid), tuple(risks), slope)


def _monotone_job(args) -> float:
    seed, rep, m_t, n_t, r_max = args
    # one stream per replication shared by every m_t (common random numbers)
    rng = np.random.default_rng(np.random.SeedSequence((seed, rep)))
    bundle = generate_bundle(
        SampleSizes(2 * n_t, m_t),
        DesignKind.INDEPENDENT,
        benchmark_target(),
        [],
        NoiseSpec(1.0),
        rng,
        process_noise=True,
    )
    spec = SmoothnessSpec(alpha_mean=1.0)
    reg = DesignRegularity()
    est = bagged(lambda g: run_ali(bundle, spec, reg, g), r_max, rng)
    return imse(est, benchmark_target())


def study_independent_monotone(
    seed: int = 0,
    m_grid: Sequence[int] = (5, 10, 20, 40, 80),
    n_t: int = 50,
    replications: int = 50,
    r_max: int = 10,
    threads: int = 1,
) -> RateStudyResult:
    """Median adaptive-fit error against the sampling frequency, no sources."""
    risks = []
    for m_t in m_grid:
        jobs = [(seed, rep, m_t, n_t, r_max) for rep in range(replications)]
        risks.append(summarize(_map_jobs(_monotone_job, jobs, threads)).median)
    return RateStudyResult("independent_monotone", tuple(m_grid), tuple(risks), None)
