"""Conventional and transfer-learning mean estimators with parameter rules.

``fit_cl`` runs the local polynomial estimator on the target sample only.
``fit_tl`` pools all source groups, fits the pooled source mean, fits the
target-minus-source difference on the residual target sample, and returns
the sum of the two fits.  The ``theoretical_params_*`` functions implement
the rate-optimal bandwidth/degree/threshold prescriptions for each design.

All logarithms are natural.  Wherever a threshold or bandwidth formula
takes ``log`` of a sample count, the count is floored at 3 so degenerate
inputs (count 1 or 2) never produce a nonpositive threshold or a zero
divisor; the floor is inactive at realistic sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import localpoly
from .localpoly import FitParams, PiecewisePoly
from .model import (
    DesignRegularity,
    ObservationSet,
    SampleBundle,
    SampleSizes,
    SmoothnessSpec,
    holder_floor,
)

__all__ = [
    "TransferParams",
    "TransferEstimate",
    "fit_cl",
    "fit_tl",
    "pooled_sources",
    "theoretical_params_common",
    "theoretical_params_independent",
]


@dataclass(frozen=True)
class TransferParams:
    """Fit parameters for the pooled-source stage and the difference stage."""

    source: FitParams
    delta: FitParams


@dataclass(frozen=True, eq=False)
class TransferEstimate:
    """Sum estimator: pooled-source fit plus difference fit."""

    f_source_hat: PiecewisePoly
    delta_hat: PiecewisePoly

    def evaluate(self, x) -> np.ndarray | float:
        return self.f_source_hat.evaluate(x) + self.delta_hat.evaluate(x)


def floored_log(count: int) -> float:
    """Natural log of ``max(count, 3)``; always >= log 3 > 1."""
    return math.log(max(int(count), 3))


def fit_cl(bundle: SampleBundle, params: FitParams, rng: np.random.Generator) -> PiecewisePoly:
    """Conventional estimator: the local polynomial fit of the target sample."""
    return localpoly.fit(bundle.target, params, bundle.design, rng)


def pooled_sources(bundle: SampleBundle) -> list[ObservationSet]:
    """All source subjects concatenated in group order, reindexed densely.

    Regrouping the same ordered subject list (e.g. one group of 2h versus
    two groups of h) yields the identical pooled sample, so fits depend on
    the sources only through that ordered concatenation.
    """
    pooled: list[ObservationSet] = []
    for group in bundle.sources:
        for s in group:
            pooled.append(ObservationSet(len(pooled), s.t, s.y))
    return pooled


def residual_target(target: Sequence[ObservationSet], f_source: PiecewisePoly) -> list[ObservationSet]:
    """Target sample with the source fit subtracted from the values."""
    return [
        ObservationSet(s.subject_id, s.t, s.y - f_source.evaluate(s.t)) for s in target
    ]


def fit_tl(
    bundle: SampleBundle, params: TransferParams, rng: np.random.Generator
) -> TransferEstimate:
    """Transfer estimator: pooled-source fit plus difference fit on residuals.

    The residual sample keeps the target's design points and design kind
    unchanged.  Requires at least one source group.
    """
    if bundle.k_sources < 1:
        raise ValueError("fit_tl requires at least one source group")
    source_rng, delta_rng = rng.spawn(2)
    f_source = localpoly.fit(pooled_sources(bundle), params.source, bundle.design, source_rng)
    residual = residual_target(bundle.target, f_source)
    delta_hat = localpoly.fit(residual, params.delta, bundle.design, delta_rng)
    return TransferEstimate(f_source, delta_hat)


def _require_positive(**sizes: int) -> None:
    for name, value in sizes.items():
        if value < 1:
            raise ValueError(f"{name} must be positive, got {value}")


def cl_params_common(
    spec: SmoothnessSpec, reg: DesignRegularity, n_t: int, m_t: int
) -> FitParams:
    """Rate-optimal conventional parameters under a common design."""
    _require_positive(n_t=n_t, m_t=m_t)
    if reg.bandwidth_const_target < reg.gap_const_target:
        raise ValueError("bandwidth_const_target must dominate gap_const_target")
    degree = holder_floor(spec.alpha_mean)
    intervals = math.ceil(m_t / (2.0 * reg.bandwidth_const_target * (degree + 1)))
    return FitParams(intervals, degree, floored_log(n_t))


def tl_params_common(
    spec: SmoothnessSpec, reg: DesignRegularity, sizes: SampleSizes
) -> TransferParams:
    """Rate-optimal transfer parameters under a common design."""
    _require_positive(n_t=sizes.n_t, m_t=sizes.m_t, n_s=sizes.n_s, m_s=sizes.m_s, K=sizes.k_sources)
    if reg.bandwidth_const_source < reg.gap_const_source:
        raise ValueError("bandwidth_const_source must dominate gap_const_source")
    if reg.bandwidth_const_diff < reg.gap_const_target:
        raise ValueError("bandwidth_const_diff must dominate gap_const_target")
    d_s = holder_floor(spec.alpha_mean)
    d_d = holder_floor(spec.alpha_diff)
    q_s = math.ceil(sizes.m_s / (2.0 * (d_s + 1) * reg.bandwidth_const_source))
    q_d = math.ceil(sizes.m_t / (2.0 * (d_d + 1) * reg.bandwidth_const_diff))
    return TransferParams(
        source=FitParams(q_s, d_s, floored_log(sizes.n_s)),
        delta=FitParams(q_d, d_d, floored_log(sizes.n_t * sizes.n_s)),
    )


def theoretical_params_common(
    spec: SmoothnessSpec, reg: DesignRegularity, sizes: SampleSizes
) -> tuple[FitParams, TransferParams]:
    """Common-design prescriptions for both the conventional and transfer fits.

    Conventional: degree ``holder_floor(alpha_mean)`` (smallest admissible),
    interval count ``ceil(m_t / (2 B_t (d+1)))``, threshold ``log n_t``.
    Transfer: source stage from ``(m_s, n_s)``, difference stage from
    ``(m_t, n_t n_s)``, with the analogous formulas.
    """
    return (
        cl_params_common(spec, reg, sizes.n_t, sizes.m_t),
        tl_params_common(spec, reg, sizes),
    )


def _independent_intervals(
    squared_const: float, points: int, log_count: int, alpha: float, cap: float
) -> int:
    """Interval count: polynomial-in-sample-size term capped by the 2Bm rule.

    The two bandwidth bounds are combined by taking the smaller bandwidth,
    i.e. the larger interval count.
    """
    expo = 1.0 / (2.0 * alpha + 1.0)
    inner = math.ceil((squared_const * points) ** expo * floored_log(log_count) ** (-2.0 * expo))
    return max(inner, math.ceil(cap))


def cl_params_independent(
    spec: SmoothnessSpec, reg: DesignRegularity, n_t: int, m_t: int
) -> FitParams:
    """Rate-optimal conventional parameters under an independent design."""
    _require_positive(n_t=n_t, m_t=m_t)
    if reg.bandwidth_const_target < reg.density_bound_target:
        raise ValueError("bandwidth_const_target must dominate density_bound_target")
    degree = holder_floor(spec.alpha_mean)
    intervals = _independent_intervals(
        spec.holder_mean**2,
        m_t * n_t,
        n_t,
        spec.alpha_mean,
        2.0 * reg.bandwidth_const_target * m_t,
    )
    return FitParams(intervals, degree, floored_log(n_t))


def tl_params_independent(
    spec: SmoothnessSpec, reg: DesignRegularity, sizes: SampleSizes
) -> TransferParams:
    """Rate-optimal transfer parameters under an independent design."""
    _require_positive(n_t=sizes.n_t, m_t=sizes.m_t, n_s=sizes.n_s, m_s=sizes.m_s, K=sizes.k_sources)
    if reg.bandwidth_const_source < reg.density_bound_source:
        raise ValueError("bandwidth_const_source must dominate density_bound_source")
    if reg.bandwidth_const_diff < reg.density_bound_target:
        raise ValueError("bandwidth_const_diff must dominate density_bound_target")
    d_s = holder_floor(spec.alpha_mean)
    d_d = holder_floor(spec.alpha_diff)
    q_s = _independent_intervals(
        spec.holder_mean**2,
        sizes.k_sources * sizes.m_s * sizes.n_s,
        sizes.k_sources * sizes.n_s,
        spec.alpha_mean,
        2.0 * reg.bandwidth_const_source * sizes.k_sources * sizes.m_s,
    )
    q_d = _independent_intervals(
        spec.holder_diff**2,
        sizes.m_t * sizes.n_t,
        sizes.n_t * sizes.n_s,
        spec.alpha_diff,
        2.0 * reg.bandwidth_const_diff * sizes.m_t,
    )
    return TransferParams(
        source=FitParams(q_s, d_s, floored_log(sizes.n_s)),
        delta=FitParams(q_d, d_d, floored_log(sizes.n_t * sizes.n_s)),
    )


def theoretical_params_independent(
    spec: SmoothnessSpec, reg: DesignRegularity, sizes: SampleSizes
) -> tuple[FitParams, TransferParams]:
    """Independent-design prescriptions for both fits.

    Interval counts take the larger of a polynomial term
    ``ceil((L^2 N)^(1/(2a+1)) (log n)^(-2/(2a+1)))`` (with ``N`` the total
    observation count of the stage) and the cap ``ceil(2 B m)``;
    thresholds are the floored natural logs of the stage subject counts.
    """
    return (
        cl_params_independent(spec, reg, sizes.n_t, sizes.m_t),
        tl_params_independent(spec, reg, sizes),
    )
