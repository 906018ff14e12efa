"""Synthetic curve generation for the simulation study.

Curves are standard Brownian motion paths shifted by a group mean
function; observations add independent Gaussian noise.  The bundled mean
functions are the benchmark target ``x cos(25x) + 4|x - 0.5|`` and two
sources defined through smooth differences ``-x^2`` and ``e^x - 1``.
A test hook (``process_noise=False``) replaces the random curves by their
mean so noiseless exact-recovery checks are possible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import DesignKind, ObservationSet, SampleBundle, SampleSizes

__all__ = [
    "MeanSpec",
    "NoiseSpec",
    "common_design_points",
    "independent_design_points",
    "brownian_at",
    "generate_bundle",
    "benchmark_target",
    "benchmark_source",
]


def _target_mean(x: np.ndarray) -> np.ndarray:
    return x * np.cos(25.0 * x) + 4.0 * np.abs(x - 0.5)


_SOURCE_DIFFERENCES: dict[int, Callable[[np.ndarray], np.ndarray]] = {
    1: lambda x: -(x**2),
    2: lambda x: np.exp(x) - 1.0,
}


@dataclass(frozen=True)
class MeanSpec:
    """Named mean function on [0, 1]."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x) -> np.ndarray:
        return self.fn(np.asarray(x, dtype=np.float64))

    @classmethod
    def custom(cls, fn: Callable[[np.ndarray], np.ndarray], name: str = "custom") -> "MeanSpec":
        return cls(name, fn)


def benchmark_target() -> MeanSpec:
    """Benchmark target mean ``x cos(25x) + 4|x - 0.5|``."""
    return MeanSpec("target", _target_mean)


def benchmark_source(k: int) -> MeanSpec:
    """Benchmark source mean ``k`` (target minus the k-th difference)."""
    if k not in _SOURCE_DIFFERENCES:
        raise ValueError("source index must be 1 or 2")
    diff = _SOURCE_DIFFERENCES[k]
    return MeanSpec(f"source{k}", lambda x: _target_mean(x) - diff(x))


def source_difference(k: int) -> MeanSpec:
    """The k-th target-minus-source difference function."""
    if k not in _SOURCE_DIFFERENCES:
        raise ValueError("source index must be 1 or 2")
    return MeanSpec(f"difference{k}", _SOURCE_DIFFERENCES[k])


@dataclass(frozen=True)
class NoiseSpec:
    """Standard deviation of the additive Gaussian observation noise."""

    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


def common_design_points(m: int) -> np.ndarray:
    """Equidistant interior points ``j / (m + 1)`` for ``j = 1..m``.

    Every gap, boundary gaps included, equals ``1 / (m + 1) < 1/m``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    return np.arange(1, m + 1, dtype=np.float64) / (m + 1)


def independent_design_points(m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` independent Uniform[0, 1] draws, in draw order."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return rng.random(m)


def brownian_at(points: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One standard Brownian path evaluated at arbitrary points in [0, 1].

    Values are generated exactly through sorted Gaussian increments from
    ``B_0 = 0`` and returned in the original point order; duplicate points
    receive identical values.
    """
    pts = np.asarray(points, dtype=np.float64)
    order = np.argsort(pts, kind="stable")
    gaps = np.diff(pts[order], prepend=0.0)
    increments = rng.standard_normal(pts.shape[0]) * np.sqrt(gaps)
    path = np.cumsum(increments)
    out = np.empty_like(path)
    out[order] = path
    return out


def _generate_group(
    design: DesignKind,
    n: int,
    m: int,
    mean: MeanSpec,
    noise: NoiseSpec,
    streams: Sequence[np.random.Generator],
    common_points: np.ndarray | None,
    process_noise: bool,
) -> tuple[ObservationSet, ...]:
    sets = []
    for i in range(n):
        rng = streams[i]
        t = common_points if design is DesignKind.COMMON else independent_design_points(m, rng)
        y = mean(t)
        if process_noise:
            y = y + brownian_at(t, rng)
        if noise.sigma > 0:
            y = y + noise.sigma * rng.standard_normal(m)
        sets.append(ObservationSet(i, t, y))
    return tuple(sets)


def generate_bundle(
    sizes: SampleSizes,
    design: DesignKind,
    target_mean: MeanSpec,
    source_means: Sequence[MeanSpec],
    noise: NoiseSpec,
    rng: np.random.Generator,
    process_noise: bool = True,
) -> SampleBundle:
    """Simulate one bundle: target plus ``K`` source groups.

    Each subject draws its design points (common design: one shared
    equidistant vector per group), one fresh Brownian path evaluated at
    those points, and i.i.d. Gaussian observation noise, all from its own
    seed-derived stream (target subjects first, then source groups in
    order), so regeneration is bit-identical and independent of any
    parallel schedule.  ``process_noise=False`` drops the Brownian term.
    """
    if sizes.n_t < 1 or sizes.m_t < 1:
        raise ValueError("target sizes must be positive")
    if sizes.k_sources and (sizes.n_s < 1 or sizes.m_s < 1):
        raise ValueError("source sizes must be positive when sources exist")
    if len(source_means) != sizes.k_sources:
        raise ValueError("need one mean function per source group")

    streams = rng.spawn(sizes.n_t + sizes.k_sources * sizes.n_s)
    common_t = common_design_points(sizes.m_t) if design is DesignKind.COMMON else None
    target = _generate_group(
        design, sizes.n_t, sizes.m_t, target_mean, noise, streams[: sizes.n_t], common_t, process_noise
    )
    sources = []
    common_s = (
        common_design_points(sizes.m_s)
        if design is DesignKind.COMMON and sizes.k_sources
        else None
    )
    for k in range(sizes.k_sources):
        start = sizes.n_t + k * sizes.n_s
        sources.append(
            _generate_group(
                design,
                sizes.n_s,
                sizes.m_s,
                source_means[k],
                noise,
                streams[start : start + sizes.n_s],
                common_s,
                process_noise,
            )
        )
    return SampleBundle(design, target, tuple(sources))
