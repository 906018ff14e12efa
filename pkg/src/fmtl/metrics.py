"""Risk evaluation: integrated squared error, replication summaries, rate slopes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = ["RiskSummary", "imse", "summarize", "rate_slope"]

IMSE_SUBINTERVALS = 8192


def _as_evaluator(f) -> Callable[[np.ndarray], np.ndarray]:
    return f.evaluate if hasattr(f, "evaluate") else f


def imse(est, truth, subintervals: int = IMSE_SUBINTERVALS) -> float:
    """Integrated squared difference on [0, 1] by the composite midpoint rule.

    Both arguments may be callables or objects with an ``evaluate`` method.
    The default grid of 8192 midpoints keeps the quadrature error far below
    Monte Carlo noise for piecewise-polynomial-minus-smooth integrands.
    """
    x = (np.arange(subintervals, dtype=np.float64) + 0.5) / subintervals
    diff = np.asarray(_as_evaluator(est)(x), dtype=np.float64) - np.asarray(
        _as_evaluator(truth)(x), dtype=np.float64
    )
    return float(np.mean(diff**2))


def _nearest_rank(sorted_values: np.ndarray, p: float) -> float:
    rank = max(1, math.ceil(p * sorted_values.shape[0]))
    return float(sorted_values[rank - 1])


@dataclass(frozen=True)
class RiskSummary:
    """Order statistics of per-replication risk values (nearest-rank rule)."""

    values: tuple[float, ...]
    count: int
    mean: float
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


def summarize(values: Sequence[float]) -> RiskSummary:
    """Nearest-rank summary of a nonempty list of risk values."""
    if len(values) == 0:
        raise ValueError("cannot summarize an empty list")
    arr = np.sort(np.asarray(values, dtype=np.float64))
    return RiskSummary(
        values=tuple(float(v) for v in values),
        count=arr.shape[0],
        mean=float(np.mean(arr)),
        minimum=float(arr[0]),
        q1=_nearest_rank(arr, 0.25),
        median=_nearest_rank(arr, 0.5),
        q3=_nearest_rank(arr, 0.75),
        maximum=float(arr[-1]),
    )


def rate_slope(points: Sequence[tuple[float, float]]) -> float:
    """Ordinary least squares slope of log(risk) against log(size).

    Requires at least three points with strictly positive sizes and risks.
    """
    if len(points) < 3:
        raise ValueError("need at least three (size, risk) points")
    sizes = np.asarray([p[0] for p in points], dtype=np.float64)
    risks = np.asarray([p[1] for p in points], dtype=np.float64)
    if np.any(sizes <= 0) or np.any(risks <= 0):
        raise ValueError("sizes and risks must be strictly positive")
    x = np.log(sizes)
    y = np.log(risks)
    dx = x - x.mean()
    denom = float(np.sum(dx * dx))
    if denom == 0.0:
        raise ValueError("sizes must not all coincide")
    return float(np.sum(dx * (y - y.mean())) / denom)
