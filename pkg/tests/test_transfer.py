import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fmtl.localpoly import FitParams, fit
from fmtl.model import (
    DesignKind,
    DesignRegularity,
    ObservationSet,
    SampleBundle,
    SampleSizes,
    SmoothnessSpec,
)
from fmtl.transfer import (
    TransferParams,
    cl_params_common,
    cl_params_independent,
    fit_cl,
    fit_tl,
    pooled_sources,
    theoretical_params_common,
    theoretical_params_independent,
    tl_params_independent,
)

from conftest import make_bundle, make_common_sets


def assert_poly_equal(a, b):
    assert np.array_equal(a.coeffs, b.coeffs)
    assert np.array_equal(a.zeroed, b.zeroed)


class TestFitCl:
    def test_equals_localpoly_fit_on_target(self):
        bundle = make_bundle(n_t=5, m_t=8, fn=np.sin, noise=0.5, seed=1)
        params = FitParams(3, 0, 5.0)
        a = fit_cl(bundle, params, np.random.default_rng(2))
        b = fit(bundle.target, params, bundle.design, np.random.default_rng(2))
        assert_poly_equal(a, b)

    def test_k0_bundle_accepted(self):
        bundle = make_bundle(n_t=4, m_t=5)
        est = fit_cl(bundle, FitParams(2, 0, 5.0), np.random.default_rng(0))
        assert est.intervals == 2

    def test_seeded_determinism(self):
        bundle = make_bundle(n_t=4, m_t=5, fn=np.cos, noise=1.0, seed=3)
        params = FitParams(2, 1, 5.0)
        assert_poly_equal(
            fit_cl(bundle, params, np.random.default_rng(9)),
            fit_cl(bundle, params, np.random.default_rng(9)),
        )


class TestFitTl:
    def test_rejects_no_sources(self):
        bundle = make_bundle(n_t=4, m_t=5)
        params = TransferParams(FitParams(2, 0, 5.0), FitParams(2, 0, 5.0))
        with pytest.raises(ValueError):
            fit_tl(bundle, params, np.random.default_rng(0))

    def test_zeroed_source_reduces_to_cl_on_delta_params(self):
        bundle = make_bundle(n_t=4, m_t=6, groups=((3, 8),), fn=np.sin, noise=0.5, seed=5)
        huge = tuple(
            tuple(ObservationSet(s.subject_id, s.t, s.y + 1e6) for s in g)
            for g in bundle.sources
        )
        shifted = SampleBundle(bundle.design, bundle.target, huge)
        params = TransferParams(FitParams(4, 0, 3.0), FitParams(2, 1, 8.0))
        est = fit_tl(shifted, params, np.random.default_rng(21))
        assert np.all(est.f_source_hat.zeroed)
        _, delta_rng = np.random.default_rng(21).spawn(2)
        expected = fit_cl(shifted, params.delta, delta_rng)
        assert_poly_equal(est.delta_hat, expected)

    def test_noiseless_polynomial_transfer_is_exact(self):
        fn = lambda x: 0.5 + 0.25 * x
        bundle = make_bundle(n_t=6, m_t=30, groups=((6, 30),), fn=fn, noise=0.0, seed=7)
        params = TransferParams(FitParams(3, 1, 5.0), FitParams(3, 1, 5.0))
        est = fit_tl(bundle, params, np.random.default_rng(3))
        xs = np.random.default_rng(4).random(500)
        assert np.max(np.abs(np.asarray(est.evaluate(xs)) - fn(xs))) < 1e-8

    def test_pooling_invariance_over_group_boundaries(self):
        bundle = make_bundle(n_t=4, m_t=6, groups=((8, 10),), fn=np.sin, noise=1.0, seed=11)
        subjects = bundle.sources[0]
        as_one = SampleBundle(bundle.design, bundle.target, (subjects,))
        as_two = SampleBundle(bundle.design, bundle.target, (subjects[:4], subjects[4:]))
        params = TransferParams(FitParams(4, 0, 5.0), FitParams(2, 1, 5.0))
        a = fit_tl(as_one, params, np.random.default_rng(13))
        b = fit_tl(as_two, params, np.random.default_rng(13))
        assert_poly_equal(a.f_source_hat, b.f_source_hat)
        assert_poly_equal(a.delta_hat, b.delta_hat)

    def test_pooled_sources_reindexes_densely(self):
        bundle = make_bundle(n_t=2, m_t=4, groups=((3, 5), (3, 5)))
        pooled = pooled_sources(bundle)
        assert [s.subject_id for s in pooled] == list(range(6))

    def test_additivity_exact_at_random_points(self):
        bundle = make_bundle(n_t=4, m_t=6, groups=((3, 8),), fn=np.sin, noise=1.0, seed=15)
        params = TransferParams(FitParams(4, 0, 5.0), FitParams(2, 1, 5.0))
        est = fit_tl(bundle, params, np.random.default_rng(17))
        xs = np.random.default_rng(18).random(1000)
        total = np.asarray(est.evaluate(xs))
        parts = np.asarray(est.f_source_hat.evaluate(xs)) + np.asarray(est.delta_hat.evaluate(xs))
        assert np.array_equal(total, parts)


class TestCommonParams:
    def test_worked_example(self):
        spec = SmoothnessSpec(alpha_mean=0.4)
        cl, _ = theoretical_params_common(spec, DesignRegularity(), SampleSizes(10, 50, 5, 20, 1))
        assert cl.degree == 0
        assert cl.intervals == 25
        assert cl.threshold == math.log(10)

    def test_threshold_floor_for_tiny_counts(self):
        cl = cl_params_common(SmoothnessSpec(), DesignRegularity(), 1, 10)
        assert cl.threshold == math.log(3)

    def test_integer_alpha_degrees(self):
        spec = SmoothnessSpec(alpha_mean=2.0, alpha_diff=3.0)
        cl, tl = theoretical_params_common(spec, DesignRegularity(), SampleSizes(10, 50, 5, 20, 1))
        assert cl.degree == 1
        assert tl.source.degree == 1
        assert tl.delta.degree == 2

    def test_delta_threshold_uses_product_count(self):
        _, tl = theoretical_params_common(
            SmoothnessSpec(), DesignRegularity(), SampleSizes(10, 50, 5, 20, 1)
        )
        assert tl.source.threshold == math.log(5)
        assert tl.delta.threshold == math.log(50)

    def test_rejects_nonpositive_sizes(self):
        with pytest.raises(ValueError):
            theoretical_params_common(
                SmoothnessSpec(), DesignRegularity(), SampleSizes(10, 50, 0, 20, 1)
            )
        with pytest.raises(ValueError):
            cl_params_common(SmoothnessSpec(), DesignRegularity(), 0, 10)

    def test_rejects_bandwidth_const_below_gap_const(self):
        reg = DesignRegularity(gap_const_target=2.0, bandwidth_const_target=1.0)
        with pytest.raises(ValueError):
            cl_params_common(SmoothnessSpec(), reg, 10, 50)

    def test_interval_count_monotone_in_frequency(self):
        spec = SmoothnessSpec()
        reg = DesignRegularity()
        counts = [cl_params_common(spec, reg, 10, m).intervals for m in range(1, 200)]
        assert all(b >= a for a, b in zip(counts, counts[1:]))
        assert counts[-1] > counts[0]


class TestIndependentParams:
    def test_worked_example_cap_branch(self):
        spec = SmoothnessSpec(alpha_mean=0.5)
        cl = cl_params_independent(spec, DesignRegularity(), 50, 50)
        # polynomial term gives ceil(2500**0.5 / log 50) = 13; cap 2*50 = 100
        assert cl.intervals == 100

    def test_polynomial_branch_active_for_small_cap(self):
        spec = SmoothnessSpec(alpha_mean=0.5)
        cl = cl_params_independent(spec, DesignRegularity(), 10000, 1)
        # polynomial term ceil(10000**0.5 * log(10000)**-1) = 11 beats cap 2
        assert cl.intervals == 11

    def test_delta_stage_worked_example(self):
        spec = SmoothnessSpec(alpha_mean=0.5, alpha_diff=3.0)
        tl = tl_params_independent(spec, DesignRegularity(), SampleSizes(10000, 1, 1, 1, 1))
        # inner: ceil((1e4)**(1/7) * log(1e4)**(-2/7)) = 2; cap: 2*1*1 = 2
        assert tl.delta.intervals == 2
        assert tl.delta.degree == 2

    def test_rejects_nonpositive_sizes(self):
        with pytest.raises(ValueError):
            theoretical_params_independent(
                SmoothnessSpec(), DesignRegularity(), SampleSizes(10, 50, 5, 0, 1)
            )

    @given(
        st.integers(min_value=1, max_value=500),
        st.integers(min_value=1, max_value=500),
        st.integers(min_value=1, max_value=300),
        st.integers(min_value=1, max_value=200),
        st.integers(min_value=1, max_value=4),
        st.floats(min_value=0.3, max_value=4.0),
        st.floats(min_value=0.3, max_value=4.0),
        st.floats(min_value=0.2, max_value=5.0),
    )
    def test_params_are_reciprocal_integers_with_positive_thresholds(
        self, n_t, m_t, n_s, m_s, k, alpha_m, alpha_d, holder
    ):
        spec = SmoothnessSpec(alpha_mean=alpha_m, alpha_diff=alpha_d, holder_mean=holder, holder_diff=holder)
        sizes = SampleSizes(n_t, m_t, n_s, m_s, k)
        for params in (
            theoretical_params_common(spec, DesignRegularity(), sizes),
            theoretical_params_independent(spec, DesignRegularity(), sizes),
        ):
            cl, tl = params
            for p in (cl, tl.source, tl.delta):
                assert isinstance(p.intervals, int) and p.intervals >= 1
                assert p.threshold > 0
