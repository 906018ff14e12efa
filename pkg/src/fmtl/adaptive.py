"""Adaptive estimator selection by sample splitting, plus bagging.

The adaptive runners receive a target sample of ``2n`` subjects, split it
into equal train/test halves, fit candidate estimators on the train half
(all size-dependent formulas use the train-half count ``n``), score them
by empirical risk on the test half, and return the risk minimizer.  Under
a common design the candidates are the two theoretically tuned fits;
under an independent design a dyadic bandwidth grid supplies one
conventional candidate per grid value and one transfer candidate per grid
pair.  Because every run is randomized, the final estimator averages
``r_max`` independent runs.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import localpoly, transfer
from .localpoly import FitParams, SampleData
from .model import (
    DesignKind,
    DesignRegularity,
    ObservationSet,
    SampleBundle,
    SampleSizes,
    SmoothnessSpec,
    holder_floor,
)
from .transfer import TransferEstimate, floored_log

__all__ = [
    "SplitIndices",
    "Candidate",
    "AdaptiveFit",
    "BaggedEstimate",
    "split",
    "empirical_risk_common",
    "empirical_risk_independent",
    "select",
    "dyadic_interval_counts",
    "run_alc",
    "run_ali",
    "bagged",
]


@dataclass(frozen=True)
class SplitIndices:
    """Equal bipartition of subject positions 0..2n-1 into train and test."""

    train_ids: np.ndarray
    test_ids: np.ndarray


def split(n2: int, rng: np.random.Generator) -> SplitIndices:
    """Uniformly random equal bipartition of ``{0, ..., n2 - 1}``."""
    if n2 % 2 != 0 or n2 < 2:
        raise ValueError("subject count must be even and positive")
    perm = rng.permutation(n2)
    half = n2 // 2
    return SplitIndices(np.sort(perm[:half]), np.sort(perm[half:]))


@dataclass(frozen=True)
class Candidate:
    """A labelled estimator entered into the selection step."""

    label: str
    estimator: object


def empirical_risk_common(est, test: Sequence[ObservationSet]) -> float:
    """Gap-weighted squared test error under a common design.

    With shared ascending design points ``T_1 <= ... <= T_m`` and the
    convention ``T_0 = 0``, returns
    ``sum_i sum_j (Y_ij - est(T_j))^2 (T_j - T_{j-1})``.
    """
    t = test[0].t
    pred = np.asarray(est.evaluate(t))
    weights = np.diff(t, prepend=0.0)
    residuals = np.stack([s.y for s in test]) - pred
    return float(np.sum(residuals**2 * weights))


def _flat_risk(est, t_flat: np.ndarray, y_flat: np.ndarray) -> float:
    pred = np.asarray(est.evaluate(t_flat))
    return float(np.sum((y_flat - pred) ** 2))


def empirical_risk_independent(est, test: Sequence[ObservationSet]) -> float:
    """Unweighted squared test error over all observations."""
    t_flat = np.concatenate([s.t for s in test])
    y_flat = np.concatenate([s.y for s in test])
    return _flat_risk(est, t_flat, y_flat)


def select(
    candidates: Sequence[Candidate], risks: Sequence[float], rng: np.random.Generator
) -> Candidate:
    """Candidate with minimal risk; exact ties broken uniformly via ``rng``."""
    if not candidates or len(candidates) != len(risks):
        raise ValueError("need one risk per candidate and at least one candidate")
    best = min(risks)
    tied = [i for i, r in enumerate(risks) if r == best]
    winner = tied[0] if len(tied) == 1 else tied[int(rng.integers(len(tied)))]
    return candidates[winner]


@dataclass(frozen=True, eq=False)
class AdaptiveFit:
    """Outcome of one adaptive run: the chosen estimator plus its scoreboard."""

    estimator: object
    label: str
    candidate_labels: tuple[str, ...]
    risks: tuple[float, ...]

    def evaluate(self, x):
        return self.estimator.evaluate(x)


@dataclass(frozen=True, eq=False)
class BaggedEstimate:
    """Pointwise average of independently run estimators."""

    members: tuple[object, ...]

    def evaluate(self, x):
        return np.mean(np.stack([m.evaluate(np.asarray(x, dtype=np.float64)) for m in self.members]), axis=0)


def bagged(
    run: Callable[[np.random.Generator], object], r_max: int, rng: np.random.Generator
) -> BaggedEstimate:
    """Average of ``r_max`` runs on independent seed-derived streams."""
    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    return BaggedEstimate(tuple(run(child) for child in rng.spawn(r_max)))


# ---------------------------------------------------------------------------
# Prepared bundles: stacked arrays with plan caches shared across runs
# ---------------------------------------------------------------------------


class _Prepared:
    __slots__ = ("target", "pooled", "__weakref__")

    def __init__(self, bundle: SampleBundle):
        self.target = SampleData.from_sets(bundle.target, bundle.design)
        self.pooled = (
            SampleData.from_sets(transfer.pooled_sources(bundle), bundle.design)
            if bundle.k_sources
            else None
        )


_prepared_cache: "weakref.WeakKeyDictionary[SampleBundle, _Prepared]" = weakref.WeakKeyDictionary()


def _prepare(bundle: SampleBundle) -> _Prepared:
    prepared = _prepared_cache.get(bundle)
    if prepared is None:
        prepared = _Prepared(bundle)
        _prepared_cache[bundle] = prepared
    return prepared


def _split_sets(
    sets: Sequence[ObservationSet], data: SampleData, rng: np.random.Generator
):
    indices = split(len(sets), rng)
    train = data.rows(indices.train_ids)
    test = [sets[i] for i in indices.test_ids]
    return train, test


def run_alc(
    bundle: SampleBundle,
    spec: SmoothnessSpec,
    reg: DesignRegularity,
    rng: np.random.Generator,
) -> AdaptiveFit:
    """One adaptive run under a common design.

    Fits the theoretically tuned conventional estimator and (when sources
    exist) the transfer estimator on the train half, then selects by the
    gap-weighted test risk.
    """
    if bundle.design is not DesignKind.COMMON:
        raise ValueError("run_alc requires a common design")
    prepared = _prepare(bundle)
    train, test = _split_sets(bundle.target, prepared.target, rng)
    n_train = train.n

    cl_params = transfer.cl_params_common(spec, reg, n_train, bundle.m_t)
    candidates = [Candidate("cl", localpoly.fit_data(train, cl_params, rng.spawn(1)[0]))]
    if bundle.k_sources:
        sizes = SampleSizes(n_train, bundle.m_t, bundle.n_s, bundle.m_s, bundle.k_sources)
        tl_params = transfer.tl_params_common(spec, reg, sizes)
        candidates.append(
            Candidate("tl", _fit_tl_prepared(prepared.pooled, train, tl_params, rng.spawn(1)[0]))
        )
    risks = [empirical_risk_common(c.estimator, test) for c in candidates]
    choice = select(candidates, risks, rng)
    return AdaptiveFit(choice.estimator, choice.label, tuple(c.label for c in candidates), tuple(risks))


def _fit_tl_prepared(
    pooled: SampleData,
    train: SampleData,
    params: transfer.TransferParams,
    rng: np.random.Generator,
) -> TransferEstimate:
    """Transfer fit on stacked data, mirroring ``transfer.fit_tl``."""
    source_rng, delta_rng = rng.spawn(2)
    f_source = localpoly.fit_data(pooled, params.source, source_rng)
    residual = train.with_values(train.y - f_source.evaluate(train.t))
    delta_hat = localpoly.fit_data(residual, params.delta, delta_rng)
    return TransferEstimate(f_source, delta_hat)


def dyadic_interval_counts(limit: float) -> list[int]:
    """Interval counts ``2^r`` for positive integers ``r`` with ``2^r <= limit``."""
    counts = []
    q = 2
    while q <= limit:
        counts.append(q)
        q *= 2
    return counts


def run_ali(
    bundle: SampleBundle,
    spec: SmoothnessSpec,
    reg: DesignRegularity,
    rng: np.random.Generator,
) -> AdaptiveFit:
    """One adaptive run under an independent design.

    Builds one conventional candidate per dyadic interval count up to
    ``m_t * n`` and one transfer candidate per pair from the source grid
    (bounded by ``K * m_s * n_s``) and the difference grid (bounded by
    ``m_t * n``), then selects by the unweighted test risk.  Transfer
    candidates sharing a source interval count reuse one pooled-source
    fit.
    """
    if bundle.design is not DesignKind.INDEPENDENT:
        raise ValueError("run_ali requires an independent design")
    prepared = _prepare(bundle)
    train, test = _split_sets(bundle.target, prepared.target, rng)
    n_train = train.n
    m_t = bundle.m_t

    d_t = holder_floor(spec.alpha_mean)
    m_thresh_t = floored_log(n_train)
    candidates: list[Candidate] = []
    for q in dyadic_interval_counts(m_t * n_train):
        params = FitParams(q, d_t, m_thresh_t)
        candidates.append(
            Candidate(f"cl:q={q}", localpoly.fit_data(train, params, rng.spawn(1)[0]))
        )

    if bundle.k_sources:
        d_s = holder_floor(spec.alpha_mean)
        d_d = holder_floor(spec.alpha_diff)
        m_thresh_s = floored_log(bundle.n_s)
        m_thresh_d = floored_log(n_train * bundle.n_s)
        delta_grid = dyadic_interval_counts(m_t * n_train)
        for q_s in dyadic_interval_counts(bundle.k_sources * bundle.m_s * bundle.n_s):
            src_rng = rng.spawn(1)[0]
            f_source = localpoly.fit_data(
                prepared.pooled, FitParams(q_s, d_s, m_thresh_s), src_rng
            )
            residual = train.with_values(train.y - f_source.evaluate(train.t))
            for q_d in delta_grid:
                delta_hat = localpoly.fit_data(
                    residual, FitParams(q_d, d_d, m_thresh_d), rng.spawn(1)[0]
                )
                candidates.append(
                    Candidate(f"tl:qs={q_s},qd={q_d}", TransferEstimate(f_source, delta_hat))
                )

    t_flat = np.concatenate([s.t for s in test])
    y_flat = np.concatenate([s.y for s in test])
    risks = [_flat_risk(c.estimator, t_flat, y_flat) for c in candidates]
    choice = select(candidates, risks, rng)
    return AdaptiveFit(choice.estimator, choice.label, tuple(c.label for c in candidates), tuple(risks))
