"""Randomized local polynomial regression with sup-norm thresholding.

The estimator partitions [0, 1] into ``q`` equal intervals, reduces each
subject to at most one observation per interval (to keep the pooled
per-interval points independent across subjects), fits a degree-``d``
polynomial per interval by least squares in the rescaled local variable,
and zeroes any interval whose fitted polynomial exceeds the sup-norm
threshold ``M``.

Interval membership is half-open, ``[(r-1)/q, r/q)``, with the final
interval closed at 1.  Bandwidths are represented by their integer
reciprocal ``q`` so the partition is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import DesignKind, Observation, ObservationSet

__all__ = [
    "FitParams",
    "PiecewisePoly",
    "ReducedInterval",
    "SampleData",
    "packing_covering_subset",
    "satisfies_packing",
    "satisfies_covering",
    "reduce",
    "fit",
    "fit_interval",
    "sup_norm_on_interval",
]

# Grid used to approximate the sup norm of an interval polynomial on [0, 1].
SUP_NORM_POINTS = 129

# Relative singular-value cutoff below which a per-interval design matrix is
# treated as rank deficient and the fit falls back to the zero vector.
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class FitParams:
    """Inputs of one local polynomial fit: interval count, degree, threshold.

    ``intervals`` is the reciprocal of the bandwidth (``b = 1/intervals``).
    """

    intervals: int
    degree: int
    threshold: float

    def __post_init__(self):
        if not isinstance(self.intervals, (int, np.integer)) or self.intervals < 1:
            raise ValueError("intervals must be a positive integer")
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        if not self.threshold > 0:
            raise ValueError("threshold must be strictly positive")

    @property
    def bandwidth(self) -> float:
        return 1.0 / self.intervals


def interval_index(t: np.ndarray, intervals: int) -> np.ndarray:
    """Index of the interval owning each point; t == 1 maps to the last one."""
    idx = (np.asarray(t, dtype=np.float64) * intervals).astype(np.int64)
    return np.maximum(np.minimum(idx, intervals - 1), 0)


@dataclass(frozen=True, eq=False)
class PiecewisePoly:
    """Per-interval polynomial coefficients after thresholding.

    ``coeffs[r]`` holds the raw least-squares coefficients of interval
    ``r`` in the local variable ``u = x * q - r`` in [0, 1); ``zeroed[r]``
    marks intervals whose fit was replaced by zero because its sup norm
    exceeded the threshold.  Evaluation returns 0 on zeroed intervals and
    keeps the raw coefficients available.
    """

    intervals: int
    degree: int
    coeffs: np.ndarray
    zeroed: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.float64, copy=True)
        zeroed = np.array(self.zeroed, dtype=bool, copy=True)
        if coeffs.shape != (self.intervals, self.degree + 1):
            raise ValueError("coeffs must have shape (intervals, degree + 1)")
        if zeroed.shape != (self.intervals,):
            raise ValueError("zeroed must have shape (intervals,)")
        coeffs.setflags(write=False)
        zeroed.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "zeroed", zeroed)

    def evaluate(self, x) -> np.ndarray | float:
        """Evaluate at points in [0, 1]; scalar in, scalar out."""
        scalar = np.isscalar(x)
        xs = np.asarray(x, dtype=np.float64)
        if np.any(xs < 0.0) or np.any(xs > 1.0):
            raise ValueError("evaluation points must lie in [0, 1]")
        r = interval_index(xs, self.intervals)
        u = xs * self.intervals - r
        rows = self.coeffs[r]
        out = rows[..., self.degree].copy()
        for s in range(self.degree - 1, -1, -1):
            out = out * u + rows[..., s]
        out = np.where(self.zeroed[r], 0.0, out)
        return float(out) if scalar else out

    @classmethod
    def zero(cls, intervals: int, degree: int) -> "PiecewisePoly":
        return cls(intervals, degree, np.zeros((intervals, degree + 1)), np.zeros(intervals, bool))


@dataclass(frozen=True)
class ReducedInterval:
    """Per-interval outcome of the randomized reduction.

    ``picks`` holds at most one ``(subject_id, Observation)`` entry per
    subject, each with a design point inside the interval.
    """

    interval: int
    picks: tuple[tuple[int, Observation], ...]


# Relative slack in the spacing comparisons: decimal design grids (e.g.
# gaps meant to be exactly 1/m) lose up to a few ulps in binary floats and
# must still count as spaced.
SPACING_RTOL = 1e-9


def satisfies_packing(ts: Sequence[float], m: int) -> bool:
    """Pairwise design-point distances are >= 1/m (up to relative slack)."""
    arr = np.sort(np.asarray(ts, dtype=np.float64))
    if arr.shape[0] < 2:
        return True
    return bool(np.all(np.diff(arr) >= (1.0 / m) * (1.0 - SPACING_RTOL)))


def satisfies_covering(subset_ts: Sequence[float], ts: Sequence[float], radius: float) -> bool:
    """Every point of ``ts`` lies within ``radius`` of ``subset_ts`` (up to slack)."""
    subset = np.asarray(subset_ts, dtype=np.float64)
    if subset.shape[0] == 0:
        return len(ts) == 0
    pts = np.asarray(ts, dtype=np.float64)
    dist = np.min(np.abs(pts[:, None] - subset[None, :]), axis=1)
    return bool(np.all(dist <= radius * (1.0 + SPACING_RTOL)))


def packing_covering_subset(obs: Sequence[Observation], m: int) -> list[Observation]:
    """Greedy spacing subset of sorted observations at separation >= 1/m.

    Scans left to right, keeping the first observation and then every
    observation at design-point gap >= 1/m from the last kept one (the
    first admissible successor, so each dropped point sits within 1/m of
    a kept neighbour).  The returned subset is always a (1/m)-packing;
    it additionally (1/2m)-covers the input whenever the input admits a
    subset doing so under left-to-right selection.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    t = np.array([o.t for o in obs], dtype=np.float64)
    keep = packing_subset_indices(t, m)
    return [obs[i] for i in keep]


def packing_subset_indices(t_sorted: np.ndarray, m: int) -> np.ndarray:
    """Indices kept by the greedy >= 1/m spacing scan over sorted points."""
    n = t_sorted.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    gap = (1.0 / m) * (1.0 - SPACING_RTOL)
    keep = [0]
    last = t_sorted[0]
    for i in range(1, n):
        if t_sorted[i] - last >= gap:
            keep.append(i)
            last = t_sorted[i]
    return np.asarray(keep, dtype=np.int64)


# ---------------------------------------------------------------------------
# Stacked sample view and reduction plans
# ---------------------------------------------------------------------------


class SampleData:
    """Stacked (n, m) view of a homogeneous sample with cached reduction plans.

    Plans depend only on the design points and the interval count, so they
    are shared across repeated randomized fits and across samples that
    differ only in their values (e.g. residual samples).
    """

    def __init__(self, t: np.ndarray, y: np.ndarray, design: DesignKind):
        self.t = np.ascontiguousarray(t, dtype=np.float64)
        self.y = np.ascontiguousarray(y, dtype=np.float64)
        if self.t.shape != self.y.shape or self.t.ndim != 2:
            raise ValueError("t and y must be 2-d arrays of equal shape")
        self.design = design
        self._plans: dict[int, _Plan] = {}

    @property
    def n(self) -> int:
        return self.t.shape[0]

    @property
    def m(self) -> int:
        return self.t.shape[1]

    @classmethod
    def from_sets(cls, sample: Sequence[ObservationSet], design: DesignKind) -> "SampleData":
        if not sample:
            raise ValueError("sample must contain at least one subject")
        m = len(sample[0])
        if any(len(s) != m for s in sample):
            raise ValueError("all subjects must share one sampling frequency")
        t = np.stack([s.t for s in sample])
        y = np.stack([s.y for s in sample])
        return cls(t, y, design)

    def with_values(self, y: np.ndarray) -> "SampleData":
        """Same design points (and plans), different observed values."""
        out = SampleData.__new__(SampleData)
        out.t = self.t
        out.y = np.ascontiguousarray(y, dtype=np.float64)
        if out.y.shape != self.t.shape:
            raise ValueError("replacement values must match the design shape")
        out.design = self.design
        out._plans = self._plans
        return out

    def rows(self, idx: np.ndarray) -> "SampleData":
        """Subject subset; plans are not shared (the row set changes)."""
        return SampleData(self.t[idx], self.y[idx], self.design)

    def plan(self, intervals: int) -> "_Plan":
        plan = self._plans.get(intervals)
        if plan is None:
            plan = _build_plan(self, intervals)
            self._plans[intervals] = plan
        return plan


class _Plan:
    """Candidate table for the randomized reduction at one interval count.

    ``cell_*`` arrays describe every (subject, interval) cell with at
    least one candidate observation; candidates for cell ``j`` are the
    ``cell_count[j]`` entries of ``cand_col`` starting at
    ``cell_offset[j]`` (column indices into the sample arrays).  The
    ``group_*`` arrays give the interval-major regrouping of the cells
    (stable, so within an interval the subject order is preserved), which
    every randomized draw shares.
    """

    __slots__ = (
        "intervals",
        "cell_subject",
        "cell_interval",
        "cell_offset",
        "cell_count",
        "cand_col",
        "order",
        "sorted_interval",
        "group_offsets",
        "group_counts",
        "group_interval",
    )

    def __init__(self, intervals, cell_subject, cell_interval, cell_offset, cell_count, cand_col):
        self.intervals = intervals
        self.cell_subject = cell_subject
        self.cell_interval = cell_interval
        self.cell_offset = cell_offset
        self.cell_count = cell_count
        self.cand_col = cand_col
        self.order = np.argsort(cell_interval, kind="stable")
        self.sorted_interval = cell_interval[self.order]
        n_cells = self.sorted_interval.shape[0]
        if n_cells:
            boundary = np.empty(n_cells, dtype=bool)
            boundary[0] = True
            np.not_equal(self.sorted_interval[1:], self.sorted_interval[:-1], out=boundary[1:])
            self.group_offsets = np.flatnonzero(boundary)
            self.group_counts = np.diff(np.append(self.group_offsets, n_cells))
            self.group_interval = self.sorted_interval[self.group_offsets]
        else:
            self.group_offsets = np.empty(0, dtype=np.int64)
            self.group_counts = np.empty(0, dtype=np.int64)
            self.group_interval = np.empty(0, dtype=np.int64)


def _build_plan(data: SampleData, intervals: int) -> _Plan:
    n, m = data.t.shape
    if data.design is DesignKind.COMMON:
        # One shared design vector: the spacing subset and the per-interval
        # candidate spans are identical for every subject.
        t = data.t[0]
        subset = packing_subset_indices(t, m)
        bins = interval_index(t[subset], intervals)
        nonempty = np.unique(bins)
        lo = np.searchsorted(bins, nonempty, side="left")
        hi = np.searchsorted(bins, nonempty, side="right")
        r_count = nonempty.shape[0]
        cell_subject = np.repeat(np.arange(n, dtype=np.int64), r_count)
        cell_interval = np.tile(nonempty, n)
        cell_offset = np.tile(lo, n)
        cell_count = np.tile(hi - lo, n)
        return _Plan(intervals, cell_subject, cell_interval, cell_offset, cell_count, subset)

    bins = interval_index(data.t, intervals)
    order = np.argsort(bins, axis=1, kind="stable")
    sorted_bins = np.take_along_axis(bins, order, axis=1)
    keys = (np.arange(n, dtype=np.int64)[:, None] * intervals + sorted_bins).ravel()
    cols = order.ravel().astype(np.int64)
    boundary = np.empty(keys.shape[0], dtype=bool)
    boundary[0] = True
    np.not_equal(keys[1:], keys[:-1], out=boundary[1:])
    starts = np.flatnonzero(boundary)
    counts = np.diff(np.append(starts, keys.shape[0])).astype(np.int64)
    cell_keys = keys[starts]
    return _Plan(
        intervals,
        cell_keys // intervals,
        cell_keys % intervals,
        starts.astype(np.int64),
        counts,
        cols,
    )


def _draw_picks(data: SampleData, plan: _Plan, rng: np.random.Generator):
    """One uniform candidate per nonempty (subject, interval) cell.

    A single block of uniforms in cell order (subject-major, interval
    ascending) makes the draw independent of any execution schedule.
    Returns (interval ids, design points, values) of the picked
    observations, in cell order.
    """
    u = rng.random(plan.cell_subject.shape[0])
    sel = plan.cell_offset + np.minimum(
        (u * plan.cell_count).astype(np.int64), plan.cell_count - 1
    )
    cols = plan.cand_col[sel]
    subj = plan.cell_subject
    return plan.cell_interval, data.t[subj, cols], data.y[subj, cols]


def reduce(
    sample: Sequence[ObservationSet],
    params: FitParams,
    design: DesignKind,
    rng: np.random.Generator,
) -> list[ReducedInterval]:
    """Randomized per-subject reduction to at most one observation per interval.

    Under a common design candidates are restricted to the subject's
    greedy spacing subset; under an independent design every observation
    inside the interval is a candidate.  Subjects with no candidate in an
    interval contribute nothing there.  Returns one entry per interval,
    empty intervals included.
    """
    data = SampleData.from_sets(sample, design)
    plan = data.plan(params.intervals)
    cell_r, t_pick, y_pick = _draw_picks(data, plan, rng)
    picks_by_interval: list[list[tuple[int, Observation]]] = [[] for _ in range(params.intervals)]
    for j in range(cell_r.shape[0]):
        sid = sample[plan.cell_subject[j]].subject_id
        picks_by_interval[cell_r[j]].append((sid, Observation(float(t_pick[j]), float(y_pick[j]))))
    return [ReducedInterval(r, tuple(p)) for r, p in enumerate(picks_by_interval)]


# ---------------------------------------------------------------------------
# Per-interval least squares
# ---------------------------------------------------------------------------


def _svd_solve(x: np.ndarray, y: np.ndarray) -> np.ndarray | None:
    """Least squares via SVD; None when numerically rank deficient."""
    u_mat, s, vt = np.linalg.svd(x, full_matrices=False)
    if s[0] <= 0 or s[-1] < RANK_RTOL * s[0]:
        return None
    return vt.T @ ((u_mat.T @ y) / s)


def fit_interval(picks: ReducedInterval, params: FitParams) -> np.ndarray:
    """Degree-d least squares on one interval's picks, in the local variable.

    Returns the zero vector when there are fewer than ``degree + 1`` picks
    or the design matrix is numerically rank deficient.
    """
    d = params.degree
    if len(picks.picks) < d + 1:
        return np.zeros(d + 1)
    t = np.array([o.t for _, o in picks.picks], dtype=np.float64)
    y = np.array([o.y for _, o in picks.picks], dtype=np.float64)
    u = t * params.intervals - picks.interval
    x = u[:, None] ** np.arange(d + 1)
    solution = _svd_solve(x, y)
    return np.zeros(d + 1) if solution is None else solution


def sup_norm_on_interval(coeffs: np.ndarray) -> float:
    """Max of |sum_s coeffs[s] u^s| over a 129-point grid on [0, 1]."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    grid = np.linspace(0.0, 1.0, SUP_NORM_POINTS)
    powers = grid[None, :] ** np.arange(coeffs.shape[0])[:, None]
    return float(np.max(np.abs(coeffs @ powers)))


def _solve_intervals(
    intervals_nonempty: np.ndarray,
    offsets: np.ndarray,
    counts: np.ndarray,
    u: np.ndarray,
    y: np.ndarray,
    degree: int,
    total_intervals: int,
) -> np.ndarray:
    """Solve the per-interval least squares problems, grouped by pick count.

    ``u``/``y`` are the picked local coordinates and values sorted by
    interval; group ``j`` occupies ``offsets[j]:offsets[j]+counts[j]``.
    Groups with fewer than ``degree + 1`` picks or a rank-deficient design
    stay at zero.
    """
    d = degree
    coeffs = np.zeros((total_intervals, d + 1))
    if intervals_nonempty.shape[0] == 0:
        return coeffs
    if d == 0:
        # Constant fit: the interval mean.  The one-column design matrix has
        # singular value sqrt(count) > 0, so the rank rule never triggers.
        sums = np.add.reduceat(y, offsets)
        coeffs[intervals_nonempty, 0] = sums / counts
        return coeffs
    for c in np.unique(counts):
        if c < d + 1:
            continue
        group = np.flatnonzero(counts == c)
        take = offsets[group][:, None] + np.arange(c)[None, :]
        u_blk = u[take]
        y_blk = y[take]
        x = u_blk[..., None] ** np.arange(d + 1)
        u_mat, s, vt = np.linalg.svd(x, full_matrices=False)
        ok = (s[:, 0] > 0) & (s[:, -1] >= RANK_RTOL * s[:, 0])
        if not np.any(ok):
            continue
        s_safe = np.where(s > 0, s, 1.0)  # rank-deficient rows are masked out below
        uy = np.einsum("kcp,kc->kp", u_mat, y_blk)
        sol = np.einsum("kpq,kp->kq", vt, uy / s_safe)
        coeffs[intervals_nonempty[group[ok]]] = sol[ok]
    return coeffs


def _threshold(coeffs: np.ndarray, threshold: float, rows: np.ndarray) -> np.ndarray:
    """Zero-flags for the given rows where the fitted sup norm exceeds M.

    Rows never fitted hold the zero polynomial, whose sup norm is 0, so
    only fitted rows need checking.
    """
    zeroed = np.zeros(coeffs.shape[0], dtype=bool)
    if rows.shape[0]:
        fitted = coeffs[rows]
        if coeffs.shape[1] == 1:
            # constant: the grid maximum is |a0|
            sup = np.abs(fitted[:, 0])
        elif coeffs.shape[1] == 2:
            # linear: |a0 + a1 u| peaks at an endpoint, both on the grid
            sup = np.maximum(np.abs(fitted[:, 0]), np.abs(fitted[:, 0] + fitted[:, 1]))
        else:
            grid = np.linspace(0.0, 1.0, SUP_NORM_POINTS)
            powers = grid[None, :] ** np.arange(coeffs.shape[1])[:, None]
            sup = np.max(np.abs(fitted @ powers), axis=1)
        zeroed[rows] = sup > threshold
    return zeroed


def fit_data(data: SampleData, params: FitParams, rng: np.random.Generator) -> PiecewisePoly:
    """Reduce, fit per interval, and threshold one stacked sample."""
    plan = data.plan(params.intervals)
    _, t_pick, y_pick = _draw_picks(data, plan, rng)
    u = t_pick[plan.order] * params.intervals - plan.sorted_interval
    y = y_pick[plan.order]
    coeffs = _solve_intervals(
        plan.group_interval, plan.group_offsets, plan.group_counts, u, y, params.degree, params.intervals
    )
    zeroed = _threshold(coeffs, params.threshold, plan.group_interval)
    return PiecewisePoly(params.intervals, params.degree, coeffs, zeroed)


def fit(
    sample: Sequence[ObservationSet],
    params: FitParams,
    design: DesignKind,
    rng: np.random.Generator,
) -> PiecewisePoly:
    """End-to-end randomized local polynomial fit with thresholding."""
    return fit_data(SampleData.from_sets(sample, design), params, rng)
