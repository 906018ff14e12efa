import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmtl.localpoly import (
    FitParams,
    PiecewisePoly,
    ReducedInterval,
    fit,
    fit_interval,
    interval_index,
    packing_covering_subset,
    satisfies_covering,
    satisfies_packing,
    reduce,
    sup_norm_on_interval,
)
from fmtl.model import DesignKind, Observation, ObservationSet

from conftest import make_common_sets, make_independent_sets


def obs_at(ts, ys=None):
    ys = ys if ys is not None else [0.0] * len(ts)
    return [Observation(t, y) for t, y in zip(ts, ys)]


def is_packing(subset, m):
    return satisfies_packing([o.t for o in subset], m)


def covers(subset, obs, radius):
    return satisfies_covering([o.t for o in subset], [o.t for o in obs], radius)


class TestPackingCoveringSubset:
    def test_already_spaced_input_is_kept(self):
        obs = obs_at([0.1, 0.2, 0.3])
        assert packing_covering_subset(obs, 10) == obs

    def test_close_pair_dropped_and_covered(self):
        obs = obs_at([0.10, 0.14, 0.30])
        subset = packing_covering_subset(obs, 10)
        assert [o.t for o in subset] == [0.10, 0.30]
        assert is_packing(subset, 10)
        assert covers(subset, obs, 1.0 / 20)
        # exhaustive check: the returned subset is among the subsets that
        # satisfy both predicates
        valid = [
            list(c)
            for r in range(1, 4)
            for c in itertools.combinations(obs, r)
            if is_packing(c, 10) and covers(c, obs, 1.0 / 20)
        ]
        assert subset in valid

    def test_singleton(self):
        obs = obs_at([0.77])
        assert packing_covering_subset(obs, 3) == obs

    def test_rejects_bad_m(self):
        with pytest.raises(ValueError):
            packing_covering_subset(obs_at([0.5]), 0)

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=40),
        st.integers(min_value=1, max_value=60),
    )
    def test_packing_predicate_always_holds(self, ts, m):
        obs = obs_at(sorted(ts))
        subset = packing_covering_subset(obs, m)
        assert is_packing(subset, m)
        assert all(o in obs for o in subset)

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=40),
        st.integers(min_value=1, max_value=60),
    )
    def test_greedy_covering_radius_one_over_m(self, ts, m):
        # the greedy scan guarantees every dropped point is within 1/m of a
        # kept one; the exact 1/(2m) predicate is checked on coverable inputs
        obs = obs_at(sorted(ts))
        subset = packing_covering_subset(obs, m)
        assert covers(subset, obs, 1.0 / m)

    @given(st.data())
    def test_covering_predicate_on_coverable_inputs(self, data):
        # anchors pairwise >= 1/m with satellites within 1/(2m) to the right:
        # a subset satisfying both predicates exists and the scan returns one
        m = data.draw(st.integers(min_value=2, max_value=30))
        anchor_count = data.draw(st.integers(min_value=1, max_value=max(1, m // 2)))
        anchors = []
        pos = data.draw(st.floats(min_value=0.0, max_value=1.0 / m))
        for _ in range(anchor_count):
            if pos > 1.0:
                break
            anchors.append(pos)
            pos += 1.0 / m + data.draw(st.floats(min_value=0.0, max_value=1.0 / m))
        ts = []
        for a in anchors:
            ts.append(a)
            n_sat = data.draw(st.integers(min_value=0, max_value=3))
            for _ in range(n_sat):
                offset = data.draw(st.floats(min_value=0.0, max_value=1.0 / (2 * m)))
                ts.append(min(a + offset, 1.0))
        obs = obs_at(sorted(ts))
        subset = packing_covering_subset(obs, m)
        assert is_packing(subset, m)
        assert covers(subset, obs, 1.0 / (2 * m))


class TestFitInterval:
    def test_constant_fit(self):
        picks = ReducedInterval(0, ((0, Observation(0.25, 4.0)), (1, Observation(0.75, 4.0))))
        coeffs = fit_interval(picks, FitParams(1, 0, 10.0))
        assert coeffs == pytest.approx([4.0])

    def test_linear_fit_hand_computed(self):
        picks = ReducedInterval(0, ((0, Observation(0.0, 0.0)), (1, Observation(0.5, 1.0))))
        coeffs = fit_interval(picks, FitParams(1, 1, 10.0))
        assert coeffs == pytest.approx([0.0, 2.0], abs=1e-12)

    def test_underdetermined_returns_zero(self):
        picks = ReducedInterval(0, ((0, Observation(0.3, 5.0)),))
        assert fit_interval(picks, FitParams(1, 1, 10.0)).tolist() == [0.0, 0.0]

    def test_rank_deficient_returns_zero(self):
        # duplicated design point: two picks but rank 1 for degree 1
        picks = ReducedInterval(0, ((0, Observation(0.3, 1.0)), (1, Observation(0.3, 2.0))))
        assert fit_interval(picks, FitParams(1, 1, 10.0)).tolist() == [0.0, 0.0]

    def test_agrees_with_normal_equations_oracle(self):
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 150:
            d = int(rng.integers(0, 4))
            count = int(rng.integers(2 * (d + 1), 21))
            q = int(rng.integers(1, 9))
            r = int(rng.integers(0, q))
            t = (rng.random(count) + r) / q
            u = t * q - r  # the local coordinate the fit itself uses
            x = u[:, None] ** np.arange(d + 1)
            gram = x.T @ x
            if np.linalg.cond(gram) > 1e5:
                continue
            y = x @ rng.standard_normal(d + 1) + 0.3 * rng.standard_normal(count)
            picks = ReducedInterval(
                r, tuple((i, Observation(float(tt), float(yy))) for i, (tt, yy) in enumerate(zip(t, y)))
            )
            coeffs = fit_interval(picks, FitParams(q, d, 10.0))
            oracle = np.linalg.solve(gram, x.T @ y)
            assert np.max(np.abs(coeffs - oracle)) < 1e-10
            checked += 1


class TestSupNorm:
    def test_constant(self):
        assert sup_norm_on_interval([3.0]) == 3.0

    def test_monotone_linear(self):
        assert sup_norm_on_interval([0.0, 1.0]) == 1.0

    def test_parabola_vertex(self):
        assert sup_norm_on_interval([0.0, 2.0, -2.0]) == pytest.approx(0.5, abs=1e-12)


class TestReduce:
    def test_single_observation_subjects(self, rng):
        sets = [ObservationSet(i, [0.2 + 0.1 * i], [float(i)]) for i in range(4)]
        out = reduce(sets, FitParams(1, 0, 1.0), DesignKind.INDEPENDENT, rng)
        assert len(out) == 1
        assert sorted(sid for sid, _ in out[0].picks) == [0, 1, 2, 3]
        picked = {sid: o for sid, o in out[0].picks}
        for s in sets:
            assert picked[s.subject_id].t == s.t[0]

    def test_locality_one_pick_per_interval(self, rng):
        t = np.array([0.55, 0.6, 0.7, 0.8, 0.9])  # all in I_2 of q=2
        sets = [ObservationSet(0, t, np.arange(5.0))]
        out = reduce(sets, FitParams(2, 0, 1.0), DesignKind.INDEPENDENT, rng)
        assert len(out[0].picks) == 0
        assert len(out[1].picks) == 1
        assert out[1].picks[0][1].t in t

    def test_common_design_draws_only_from_spacing_subset(self):
        t = np.array([0.10, 0.14])
        sets = [ObservationSet(0, t, np.array([1.0, 2.0]))]
        seen = set()
        for seed in range(1000):
            out = reduce(sets, FitParams(2, 0, 1.0), DesignKind.COMMON, np.random.default_rng(seed))
            for ri in out:
                for _, o in ri.picks:
                    seen.add(o.t)
        assert seen == {0.10}

    def test_pick_is_uniform_over_interval_candidates(self):
        # four observations in one interval: each should be picked ~25%
        t = np.array([0.1, 0.2, 0.3, 0.4])
        sets = [ObservationSet(0, t, np.arange(4.0))]
        counts = {v: 0 for v in t}
        rng = np.random.default_rng(123)
        for _ in range(4000):
            out = reduce(sets, FitParams(1, 0, 1.0), DesignKind.INDEPENDENT, rng)
            counts[out[0].picks[0][1].t] += 1
        assert all(850 < c < 1150 for c in counts.values())

    def test_one_pick_per_subject_and_interval_membership(self):
        rng = np.random.default_rng(99)
        for _ in range(50):
            n = int(rng.integers(1, 6))
            m = int(rng.integers(1, 12))
            q = int(rng.integers(1, 7))
            design = DesignKind.INDEPENDENT if rng.random() < 0.5 else DesignKind.COMMON
            maker = make_independent_sets if design is DesignKind.INDEPENDENT else make_common_sets
            sets = maker(n, m, seed=int(rng.integers(1 << 31)))
            out = reduce(sets, FitParams(q, 0, 1.0), design, rng)
            assert len(out) == q
            for ri in out:
                sids = [sid for sid, _ in ri.picks]
                assert len(sids) == len(set(sids))
                for _, o in ri.picks:
                    assert ri.interval == interval_index(np.array([o.t]), q)[0]


class TestFit:
    def test_noiseless_polynomial_recovered(self):
        rng = np.random.default_rng(3)
        for d in range(4):
            coeffs = rng.standard_normal(d + 1) * 0.3
            fn = lambda x, c=coeffs: sum(c[s] * x**s for s in range(len(c)))
            sets = make_common_sets(10, 40, fn=fn)
            est = fit(sets, FitParams(4, d, 10.0), DesignKind.COMMON, rng)
            xs = rng.random(1000)
            assert np.max(np.abs(est.evaluate(xs) - fn(xs))) < 1e-8

    def test_threshold_zeroes_everything(self, rng):
        threshold = 2.0
        sets = make_common_sets(5, 8, fn=lambda x: np.full_like(x, 2 * threshold))
        est = fit(sets, FitParams(3, 0, threshold), DesignKind.COMMON, rng)
        assert np.all(est.zeroed)
        xs = np.linspace(0, 1, 101)
        assert np.all(est.evaluate(xs) == 0.0)
        # the raw coefficients stay available on zeroed intervals
        assert np.all(est.coeffs[:, 0] == pytest.approx(2 * threshold))

    def test_empty_intervals_are_zero_but_not_flagged(self, rng):
        sets = [ObservationSet(0, [0.1, 0.2], [1.0, 1.0])]
        est = fit(sets, FitParams(4, 0, 5.0), DesignKind.INDEPENDENT, rng)
        assert est.coeffs[2].tolist() == [0.0] and est.coeffs[3].tolist() == [0.0]
        assert not est.zeroed[2] and not est.zeroed[3]
        assert est.evaluate(0.9) == 0.0

    def test_threshold_bound_on_non_zeroed_intervals(self):
        rng = np.random.default_rng(17)
        for _ in range(40):
            n = int(rng.integers(2, 8))
            m = int(rng.integers(2, 12))
            q = int(rng.integers(1, 6))
            d = int(rng.integers(0, 3))
            threshold = float(rng.uniform(0.2, 1.5))
            sets = make_independent_sets(n, m, fn=None, noise=2.0, seed=int(rng.integers(1 << 31)))
            est = fit(sets, FitParams(q, d, threshold), DesignKind.INDEPENDENT, rng)
            for r in range(q):
                if not est.zeroed[r]:
                    assert sup_norm_on_interval(est.coeffs[r]) <= threshold + 1e-12

    def test_seeded_determinism_bit_identical(self):
        sets = make_independent_sets(6, 9, fn=np.sin, noise=1.0, seed=4)
        a = fit(sets, FitParams(3, 1, 5.0), DesignKind.INDEPENDENT, np.random.default_rng(11))
        b = fit(sets, FitParams(3, 1, 5.0), DesignKind.INDEPENDENT, np.random.default_rng(11))
        assert np.array_equal(a.coeffs, b.coeffs)
        assert np.array_equal(a.zeroed, b.zeroed)

    def test_fit_matches_reduce_plus_fit_interval(self):
        # the stacked path and the per-interval public operations agree
        for seed in range(10):
            rng = np.random.default_rng(seed)
            d = int(rng.integers(0, 3))
            q = int(rng.integers(1, 6))
            params = FitParams(q, d, 50.0)
            sets = make_independent_sets(5, 8, fn=np.cos, noise=0.5, seed=seed)
            est = fit(sets, params, DesignKind.INDEPENDENT, np.random.default_rng(seed + 1))
            reduced = reduce(sets, params, DesignKind.INDEPENDENT, np.random.default_rng(seed + 1))
            for ri in reduced:
                expected = fit_interval(ri, params)
                assert np.max(np.abs(est.coeffs[ri.interval] - expected)) < 1e-10


class TestEvaluate:
    def test_zero_estimator(self):
        est = PiecewisePoly.zero(3, 1)
        assert est.evaluate(0.7) == 0.0

    def test_piecewise_constants(self):
        est = PiecewisePoly(2, 0, [[1.0], [5.0]], [False, False])
        assert est.evaluate(0.25) == 1.0
        assert est.evaluate(0.75) == 5.0

    def test_boundary_belongs_to_right_interval(self):
        est = PiecewisePoly(2, 0, [[1.0], [5.0]], [False, False])
        assert est.evaluate(0.5) == 5.0
        assert est.evaluate(1.0) == 5.0
        assert est.evaluate(0.0) == 1.0

    def test_rejects_points_outside_domain(self):
        est = PiecewisePoly.zero(2, 0)
        with pytest.raises(ValueError):
            est.evaluate(1.5)
        with pytest.raises(ValueError):
            est.evaluate(np.array([0.2, -0.1]))

    def test_local_polynomial_evaluation(self):
        # on I_2 of q=2, u = 2x - 1
        est = PiecewisePoly(2, 1, [[0.0, 0.0], [1.0, 2.0]], [False, False])
        assert est.evaluate(0.75) == pytest.approx(1.0 + 2.0 * 0.5)


class TestFitParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            FitParams(0, 0, 1.0)
        with pytest.raises(ValueError):
            FitParams(2, -1, 1.0)
        with pytest.raises(ValueError):
            FitParams(2, 0, 0.0)

    def test_bandwidth_is_exact_reciprocal(self):
        p = FitParams(8, 1, 2.0)
        assert p.bandwidth == 0.125
        assert 1.0 / p.bandwidth == 8
