"""Domain types for discretely sampled random curves.

A *sample* is a list of subjects, each carrying noisy observations
``(t, y)`` of one curve on [0, 1].  A :class:`SampleBundle` groups one
target sample with ``K`` source samples that share a sampling design.
All types are immutable after construction; validation is performed by
:func:`validate_bundle`, which reports violations instead of raising so
that malformed inputs can be diagnosed in full.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "DesignKind",
    "Observation",
    "ObservationSet",
    "SampleBundle",
    "SampleSizes",
    "SmoothnessSpec",
    "DesignRegularity",
    "holder_floor",
    "validate_bundle",
]


class DesignKind(enum.Enum):
    """Sampling design: shared design points per group, or per-observation draws."""

    COMMON = "common"
    INDEPENDENT = "independent"


@dataclass(frozen=True)
class Observation:
    """One design point in [0, 1] and the noisy value observed there."""

    t: float
    y: float


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """One subject's ordered record of discrete observations.

    ``t`` and ``y`` are parallel 1-d arrays.  Under a common design the
    design points must be ascending; that is checked by
    :func:`validate_bundle`, not the constructor.
    """

    subject_id: int
    t: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", _frozen_array(self.t))
        object.__setattr__(self, "y", _frozen_array(self.y))
        if self.t.ndim != 1 or self.t.shape != self.y.shape:
            raise ValueError("t and y must be 1-d arrays of equal length")

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def observations(self) -> tuple[Observation, ...]:
        return tuple(Observation(float(t), float(y)) for t, y in zip(self.t, self.y))

    @classmethod
    def from_observations(cls, subject_id: int, obs: Sequence[Observation]) -> "ObservationSet":
        return cls(subject_id, [o.t for o in obs], [o.y for o in obs])


@dataclass(frozen=True, eq=False)
class SampleBundle:
    """Target sample plus ``K`` source samples under one declared design.

    ``target`` holds ``n_t`` subjects with ``m_t`` observations each;
    every source group holds ``n_s`` subjects with ``m_s`` observations
    each.  ``K = 0`` (no sources) is legal and represents the
    conventional, target-only setting.
    """

    design: DesignKind
    target: tuple[ObservationSet, ...]
    sources: tuple[tuple[ObservationSet, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "sources", tuple(tuple(g) for g in self.sources))

    @property
    def n_t(self) -> int:
        return len(self.target)

    @property
    def m_t(self) -> int:
        return len(self.target[0]) if self.target else 0

    @property
    def k_sources(self) -> int:
        return len(self.sources)

    @property
    def n_s(self) -> int:
        return len(self.sources[0]) if self.sources else 0

    @property
    def m_s(self) -> int:
        return len(self.sources[0][0]) if self.sources and self.sources[0] else 0


@dataclass(frozen=True)
class SampleSizes:
    """Subject counts and per-subject sampling frequencies (n_t, m_t, n_s, m_s, K)."""

    n_t: int
    m_t: int
    n_s: int = 0
    m_s: int = 0
    k_sources: int = 0

    def __post_init__(self):
        if self.n_t < 0 or self.m_t < 0 or self.n_s < 0 or self.m_s < 0 or self.k_sources < 0:
            raise ValueError("sizes must be nonnegative")


def holder_floor(alpha: float) -> int:
    """Largest integer strictly smaller than ``alpha`` (the Holder exponent floor).

    ``holder_floor(1.0) == 0`` and ``holder_floor(2.0) == 1``: integers map
    to their predecessor, fractional values to their integer part.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return math.ceil(alpha) - 1


@dataclass(frozen=True)
class SmoothnessSpec:
    """Smoothness classes assumed for the mean and the target-source difference.

    ``alpha_mean`` / ``alpha_diff`` are the Holder exponents of the mean
    functions and of the difference functions; ``holder_*`` and ``sup_*``
    are the corresponding Holder constants and sup-norm bounds.
    """

    alpha_mean: float = 1.0
    alpha_diff: float = 2.0
    holder_mean: float = 1.0
    sup_mean: float = 8.0
    holder_diff: float = 1.0
    sup_diff: float = 4.0

    def __post_init__(self):
        for name in ("alpha_mean", "alpha_diff", "holder_mean", "sup_mean", "holder_diff", "sup_diff"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def degree_mean(self) -> int:
        return holder_floor(self.alpha_mean)

    @property
    def degree_diff(self) -> int:
        return holder_floor(self.alpha_diff)


@dataclass(frozen=True)
class DesignRegularity:
    """Design-regularity constants entering the bandwidth prescriptions.

    ``gap_const_*`` bound the maximal design-point gap times m under a
    common design; ``density_bound_*`` bound the design density from above
    under an independent design.  ``bandwidth_const_*`` are the free
    constants used to size interval counts and must dominate the matching
    gap constant (common design) or density bound (independent design).
    """

    gap_const_target: float = 1.0
    gap_const_source: float = 1.0
    density_bound_target: float = 1.0
    density_bound_source: float = 1.0
    bandwidth_const_target: float = 1.0
    bandwidth_const_source: float = 1.0
    bandwidth_const_diff: float = 1.0

    def __post_init__(self):
        for name in (
            "gap_const_target",
            "gap_const_source",
            "density_bound_target",
            "density_bound_source",
            "bandwidth_const_target",
            "bandwidth_const_source",
            "bandwidth_const_diff",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


def _check_group(
    kind: str,
    sets: Sequence[ObservationSet],
    design: DesignKind,
    violations: list[str],
) -> None:
    if not sets:
        violations.append(f"{kind} group is empty")
        return
    m = len(sets[0])
    for s in sets:
        if len(s) == 0:
            violations.append(f"{kind} subject {s.subject_id} has no observations")
        elif len(s) != m:
            violations.append(
                f"{kind} subject {s.subject_id} has {len(s)} observations, expected {m}"
            )
        for j, t in enumerate(s.t):
            if not (0.0 <= t <= 1.0) or not np.isfinite(s.y[j]):
                violations.append(
                    f"{kind} subject {s.subject_id} observation {j}: t={t!r} outside [0, 1]"
                    if not (0.0 <= t <= 1.0)
                    else f"{kind} subject {s.subject_id} observation {j}: y={s.y[j]!r} not finite"
                )
        if design is DesignKind.COMMON and len(s) > 1 and np.any(np.diff(s.t) < 0):
            violations.append(f"{kind} subject {s.subject_id} design points not ascending")


def _check_shared_design(kind: str, sets: Sequence[ObservationSet], violations: list[str]) -> None:
    if not sets:
        return
    ref = sets[0].t
    for s in sets[1:]:
        if len(s) == len(sets[0]) and not np.array_equal(s.t, ref):
            violations.append(
                f"{kind} subject {s.subject_id} design vector differs from subject "
                f"{sets[0].subject_id} under common design"
            )


def validate_bundle(bundle: SampleBundle) -> list[str]:
    """Collect every invariant violation in ``bundle``; empty list when valid.

    Checks size homogeneity per group, t in [0, 1], finite values, and
    (under a common design) ascending and bitwise-identical design vectors
    within the target group and across all source groups.  Deterministic
    and side-effect free.
    """
    violations: list[str] = []
    _check_group("target", bundle.target, bundle.design, violations)
    if bundle.design is DesignKind.COMMON:
        _check_shared_design("target", bundle.target, violations)

    if bundle.k_sources:
        n_s = len(bundle.sources[0])
        m_s = len(bundle.sources[0][0]) if bundle.sources[0] else 0
        all_source_sets: list[ObservationSet] = []
        for k, group in enumerate(bundle.sources):
            if len(group) != n_s:
                violations.append(
                    f"source group {k} has {len(group)} subjects, expected {n_s}"
                )
            _check_group(f"source[{k}]", group, bundle.design, violations)
            if group and len(group[0]) != m_s:
                violations.append(
                    f"source group {k} frequency {len(group[0])} differs from group 0 ({m_s})"
                )
            all_source_sets.extend(group)
        if bundle.design is DesignKind.COMMON:
            _check_shared_design("source", all_source_sets, violations)
    return violations
