"""Pseudo-likelihood estimation: pair statistics, the three fitters, and
information criteria."""

import math

import numpy as np
import pytest

from mimm import core, gaussian, ple
from mimm.exceptions import InsufficientInteriorError

AR1 = gaussian.ClassicalARParams([0.5], 0.5)
SPEC1 = core.ar_spec(1)


class TestPairStatistic:
    def test_equal_values_give_zero(self):
        series = core.TimeSeries([1.0, 4.0, 4.0, 2.0])
        np.testing.assert_array_equal(ple.pair_statistic(SPEC1, series, 1, 2).x, [0.0])

    def test_worked_example(self):
        series = core.TimeSeries([1.0, 2.0, 3.0, 4.0])
        assert ple.pair_statistic(SPEC1, series, 1, 2).x == pytest.approx([3.0])

    def test_sign_antisymmetry_under_swapped_series(self):
        rng = np.random.default_rng(0)
        data = rng.standard_normal(12)
        series = core.TimeSeries(data)
        s1, s2 = 3, 7
        x = ple.pair_statistic(SPEC1, series, s1, s2).x
        swapped = data.copy()
        swapped[[s1, s2]] = swapped[[s2, s1]]
        x_rev = ple.pair_statistic(SPEC1, core.TimeSeries(swapped), s1, s2).x
        np.testing.assert_array_equal(x_rev, -x)

    def test_equals_negated_swap_delta_exactly(self):
        rng = np.random.default_rng(1)
        spec = core.ar_spec(2)
        series = core.TimeSeries(rng.standard_normal(25))
        for _ in range(15):
            s1, s2 = sorted(rng.choice(range(2, 23), size=2, replace=False))
            x = ple.pair_statistic(spec, series, int(s1), int(s2)).x
            delta = core.swap_delta(spec, series, int(s1), int(s2))
            np.testing.assert_array_equal(x, -delta)


class TestLogPl:
    def test_zero_theta_value(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((37, 2))
        assert ple.log_pl(np.zeros(2), X) == pytest.approx(37 * math.log(0.5), abs=1e-12)

    def test_single_pair_high_precision(self):
        import mpmath

        rng = np.random.default_rng(3)
        with mpmath.workdps(60):
            for _ in range(20):
                margin = float(rng.uniform(-30, 30))
                ours = ple.log_pl(np.array([1.0]), np.array([[margin]]))
                exact = float(-mpmath.log(1 + mpmath.exp(-mpmath.mpf(margin))))
                assert ours == pytest.approx(exact, rel=1e-13, abs=1e-300)

    def test_overflow_safe(self):
        value = ple.log_pl(np.array([1.0]), np.array([[-1e4], [1e4]]))
        assert np.isfinite(value) and value <= 0.0

    def test_monotone_in_margins(self):
        X = np.array([[1.0], [2.0], [0.5]])
        lo = ple.log_pl(np.array([0.3]), X)
        hi = ple.log_pl(np.array([0.9]), X)
        assert hi > lo

    def test_empty_pairs_rejected(self):
        with pytest.raises(ValueError):
            ple.log_pl(np.zeros(1), np.empty((0, 1)))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((60, 3))
        theta = rng.standard_normal(3)
        grad = ple.log_pl_gradient(theta, X)
        for k in range(3):
            h = 1e-6 * (1 + abs(theta[k]))
            up, dn = theta.copy(), theta.copy()
            up[k] += h
            dn[k] -= h
            fd = (ple.log_pl(up, X) - ple.log_pl(dn, X)) / (2 * h)
            assert grad[k] == pytest.approx(fd, rel=1e-6)


class TestFitNaive:
    def test_recovers_ar1_weight(self):
        series = gaussian.simulate_ar(AR1, 1000, seed=21)
        fit = ple.fit_naive(SPEC1, series)
        assert fit.converged
        assert abs(fit.theta[0] - 1.0) < 0.3
        assert fit.n_pairs_used == ple.n_interior_pairs(1000, 1)
        assert fit.log_pl <= 0.0
        assert fit.aic == pytest.approx(-2 * fit.log_pl + 2)

    def test_ar2_error_band(self):
        ar2 = gaussian.ClassicalARParams([0.5, 0.3], 0.5)
        truth = gaussian.ard_to_mininfo(ar2).theta
        spec = core.ar_spec(2)
        errs = []
        for s in range(10):
            series = gaussian.simulate_ar(ar2, 1000, seed=7100 + s)
            errs.append(float(np.linalg.norm(ple.fit_naive(spec, series).theta - truth)))
        assert 0.04 <= float(np.mean(errs)) <= 0.18  # published mean 0.0876

    def test_null_dependence_stays_near_zero(self):
        estimates = []
        for s in range(30):
            series = gaussian.simulate_ar(gaussian.ClassicalARParams([0.0], 1.0), 300, seed=600 + s)
            estimates.append(float(ple.fit_naive(SPEC1, series).theta[0]))
        estimates = np.asarray(estimates)
        se = estimates.std(ddof=1) / math.sqrt(len(estimates))
        assert abs(estimates.mean()) < 2 * se + 1e-9

    def test_objective_never_decreases_with_small_rate(self):
        series = gaussian.simulate_ar(AR1, 150, seed=15)
        fit = ple.fit_naive(
            SPEC1,
            series,
            ple.GdConfig(max_epochs=80, lr0=0.2, decay=0.0, track_objective=True),
        )
        diffs = np.diff(np.asarray(fit.objective_trace))
        assert np.all(diffs >= -1e-12)

    def test_streaming_matches_materialized(self):
        series = gaussian.simulate_ar(AR1, 300, seed=16)
        cfg_mat = ple.GdConfig(max_epochs=40)
        cfg_stream = ple.GdConfig(max_epochs=40, materialize_limit=0, chunk_pairs=5000)
        a = ple.fit_naive(SPEC1, series, cfg_mat)
        b = ple.fit_naive(SPEC1, series, cfg_stream)
        assert a.theta[0] == pytest.approx(b.theta[0], abs=1e-10)
        assert a.log_pl == pytest.approx(b.log_pl, rel=1e-10)

    def test_interior_too_small(self):
        with pytest.raises(InsufficientInteriorError):
            ple.fit_naive(core.ar_spec(2), core.TimeSeries([1.0, 2.0, 3.0, 4.0, 5.0]))


class TestFitBipartition:
    def test_pair_count_even_and_odd_interior(self):
        even = gaussian.simulate_ar(AR1, 10, seed=1)  # interior 8
        odd = gaussian.simulate_ar(AR1, 11, seed=1)  # interior 9
        assert ple.fit_bipartition(SPEC1, even, seed=0).n_pairs_used == 4
        assert ple.fit_bipartition(SPEC1, odd, seed=0).n_pairs_used == 4

    def test_different_seeds_agree_within_noise(self):
        series = gaussian.simulate_ar(AR1, 4000, seed=22)
        a = ple.fit_bipartition(SPEC1, series, seed=1)
        b = ple.fit_bipartition(SPEC1, series, seed=2)
        assert a.theta[0] != b.theta[0]  # different matchings
        assert abs(a.theta[0] - b.theta[0]) < 0.5

    def test_estimate_close_to_truth(self):
        series = gaussian.simulate_ar(AR1, 5000, seed=23)
        fit = ple.fit_bipartition(SPEC1, series, seed=3)
        assert abs(fit.theta[0] - 1.0) < 0.25
        assert fit.aic is None and fit.pic is None


class TestFitPairs:
    def test_matches_bipartition_on_same_pairs(self):
        series = gaussian.simulate_ar(AR1, 500, seed=31)
        rng = np.random.default_rng(5)
        interior = rng.permutation(np.arange(1, 499))
        paired = interior[:400].reshape(200, 2)
        s1 = paired.min(axis=1)
        s2 = paired.max(axis=1)
        fit = ple.fit_pairs(SPEC1, series, s1, s2)
        assert fit.n_pairs_used == 200
        assert fit.log_pl <= 0.0 and fit.converged


class TestFitOnlineSgd:
    def test_estimate_close_to_truth(self):
        series = gaussian.simulate_ar(AR1, 1000, seed=24)
        fit = ple.fit_online_sgd(SPEC1, series, ple.SgdConfig(eta=0.01, n_iters=10_000, seed=6))
        assert abs(fit.theta[0] - 1.0) < 0.4
        assert fit.n_pairs_used == 10_000

    def test_constant_series_stays_at_zero(self):
        series = core.TimeSeries(np.ones(50) * 2.5)
        fit = ple.fit_online_sgd(SPEC1, series, ple.SgdConfig(eta=0.1, n_iters=500, seed=7))
        assert fit.theta[0] == 0.0

    def test_deterministic_given_seed(self):
        series = gaussian.simulate_ar(AR1, 400, seed=25)
        a = ple.fit_online_sgd(SPEC1, series, ple.SgdConfig(eta=0.01, n_iters=2000, seed=8))
        b = ple.fit_online_sgd(SPEC1, series, ple.SgdConfig(eta=0.01, n_iters=2000, seed=8))
        assert a.theta[0] == b.theta[0]


class TestConfigs:
    def test_gd_config_validation(self):
        with pytest.raises(ValueError):
            ple.GdConfig(lr0=0.0)
        with pytest.raises(ValueError):
            ple.GdConfig(decay=-0.1)

    def test_sgd_config_validation(self):
        with pytest.raises(ValueError):
            ple.SgdConfig(eta=0.0)
        with pytest.raises(ValueError):
            ple.SgdConfig(n_iters=0)

    def test_result_rejects_positive_log_pl(self):
        with pytest.raises(ValueError):
            ple.PleResult(
                theta=np.zeros(1),
                log_pl=1.0,
                aic=None,
                pic=None,
                n_pairs_used=1,
                wall_time_s=0.0,
                converged=True,
                method="test",
            )


class TestAicPic:
    def test_published_row_anchor(self):
        # the published log pseudo-likelihood is rounded to 1e-2, so the
        # doubled value carries +-0.01 of input rounding
        aic, pic = ple.aic_pic(-343262.87, K=1, n=1000, d=1)
        assert aic == pytest.approx(686527.75, abs=0.02)
        assert pic == pytest.approx(686538.85, abs=0.02)

    def test_k_zero_forbidden(self):
        with pytest.raises(ValueError):
            ple.aic_pic(-10.0, K=0, n=100, d=1)

    def test_aic_linear_in_k(self):
        base, _ = ple.aic_pic(-50.0, K=3, n=100, d=1)
        double, _ = ple.aic_pic(-50.0, K=6, n=100, d=1)
        assert double - base == pytest.approx(6.0)

    def test_pic_penalty_uses_interior_pair_count(self):
        _, pic = ple.aic_pic(-50.0, K=2, n=100, d=2)
        assert pic == pytest.approx(100.0 + 2 * math.log(math.comb(96, 2)))
