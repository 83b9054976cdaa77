"""Exchange sampler and Fisher scoring for conditional likelihood."""

import math

import numpy as np
import pytest

from mimm import core, gaussian, mcle, oracle
from mimm.exceptions import InsufficientInteriorError, ShapeMismatchError

AR1 = gaussian.ClassicalARParams([0.5], 0.5)
SPEC1 = core.ar_spec(1)


class TestInteriorPermutation:
    def test_identity(self):
        perm = mcle.InteriorPermutation.identity(10, 2)
        np.testing.assert_array_equal(perm.order, np.arange(10))

    def test_rejects_moved_boundary(self):
        order = np.arange(10)
        order[[0, 5]] = order[[5, 0]]
        with pytest.raises(ValueError):
            mcle.InteriorPermutation(order, d=1)

    def test_rejects_non_permutation(self):
        with pytest.raises(ValueError):
            mcle.InteriorPermutation(np.zeros(5, dtype=int), d=1)


class TestLogRatio:
    def test_null_swap(self):
        assert mcle.log_ratio_swap([1.5], [0.0]) == 0.0

    def test_zero_theta(self):
        assert mcle.log_ratio_swap([0.0, 0.0], [3.0, -2.0]) == 0.0

    def test_worked_example(self):
        series = core.TimeSeries([1.0, 2.0, 3.0, 4.0])
        delta = core.swap_delta(SPEC1, series, 1, 2)
        assert mcle.log_ratio_swap([1.0], delta) == pytest.approx(-3.0)

    def test_detailed_balance(self):
        rng = np.random.default_rng(1)
        spec = core.ar_spec(2)
        series = core.TimeSeries(rng.standard_normal(20))
        theta = rng.standard_normal(2)
        for _ in range(10):
            s1, s2 = sorted(rng.choice(range(2, 18), size=2, replace=False))
            fwd = core.swap_delta(spec, series, int(s1), int(s2))
            order = list(range(20))
            order[s1], order[s2] = order[s2], order[s1]
            rev = core.swap_delta(spec, series, int(s1), int(s2), order=order)
            assert mcle.log_ratio_swap(theta, fwd) == -mcle.log_ratio_swap(theta, rev)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            mcle.log_ratio_swap([1.0], [1.0, 2.0])


class TestExchangeSampler:
    def test_zero_theta_accepts_everything(self):
        series = gaussian.simulate_ar(AR1, 50, seed=0)
        res = mcle.exchange_sample(SPEC1, series, [0.0], mcle.ExchangeConfig(n_samples=3000, seed=1))
        assert res.acceptance_rate == 1.0

    def test_uniform_mean_matches_enumeration(self):
        series = gaussian.simulate_ar(AR1, 8, seed=5)
        stats = oracle.permutation_statistics(SPEC1, series)
        mu_exact = stats.mean(axis=0)
        res = mcle.exchange_sample(
            SPEC1, series, [0.0], mcle.ExchangeConfig(n_samples=20_000, seed=2)
        )
        mu_chain = res.stats.mean(axis=0)
        # generous effective-sample-size discount for chain autocorrelation
        se = stats.std() / math.sqrt(len(res.stats) / 20.0)
        assert abs(mu_chain[0] - mu_exact[0]) < 3.0 * se

    def test_two_state_chain_law(self):
        series = core.TimeSeries([0.3, 1.2, -0.8, 0.5])
        delta = core.swap_delta(SPEC1, series, 1, 2)
        theta = np.array([1.3])
        logr = float(theta @ delta)
        a = min(1.0, math.exp(logr))
        b = min(1.0, math.exp(-logr))
        pi_b = a / (a + b)
        res = mcle.exchange_sample(
            SPEC1, series, theta, mcle.ExchangeConfig(n_samples=40_000, burn_in=2000, seed=9)
        )
        h_swapped = core.total_statistic(SPEC1, series) + delta
        frac_b = float(np.mean(np.abs(res.stats[:, 0] - h_swapped[0]) < 1e-9))
        var = pi_b * (1 - pi_b) * (2 - a - b) / (a + b) / len(res.stats)
        assert abs(frac_b - pi_b) < 3.0 * math.sqrt(var)

    def test_acceptance_declines_with_order(self):
        params = {
            1: gaussian.ClassicalARParams([0.5], 0.5),
            2: gaussian.ClassicalARParams([0.5, 0.3], 0.5),
            3: gaussian.ClassicalARParams([0.5, 0.3, 0.1], 0.5),
        }
        means = []
        for d in (1, 2, 3):
            spec = core.ar_spec(d)
            theta = gaussian.ard_to_mininfo(params[d]).theta
            accs = [
                mcle.exchange_sample(
                    spec,
                    gaussian.simulate_ar(params[d], 200, seed=100 + s),
                    theta,
                    mcle.ExchangeConfig(n_samples=4000, seed=31 + s),
                ).acceptance_rate
                for s in range(8)
            ]
            means.append(float(np.mean(accs)))
        assert means[0] > means[1] > means[2]

    def test_insufficient_interior(self):
        series = core.TimeSeries([1.0, 2.0, 3.0, 4.0])
        with pytest.raises(InsufficientInteriorError):
            mcle.exchange_sample(core.ar_spec(2), series, [0.0, 0.0])

    def test_statistics_track_the_running_permutation(self):
        # every recorded statistic must equal the statistic of some interior
        # permutation of the data (cross-checked by enumeration at n=7)
        series = gaussian.simulate_ar(AR1, 7, seed=3)
        stats = oracle.permutation_statistics(SPEC1, series)
        res = mcle.exchange_sample(
            SPEC1, series, [0.8], mcle.ExchangeConfig(n_samples=500, seed=4)
        )
        for value in res.stats[:, 0]:
            assert np.min(np.abs(stats[:, 0] - value)) < 1e-9


class TestConfigs:
    def test_exchange_config_validation(self):
        with pytest.raises(ValueError):
            mcle.ExchangeConfig(n_samples=0)
        with pytest.raises(ValueError):
            mcle.ExchangeConfig(thin=0)
        assert mcle.ExchangeConfig(n_samples=1000).effective_burn_in == 100

    def test_scoring_config_validation(self):
        with pytest.raises(ValueError):
            mcle.ScoringConfig(grad_tol=0.0)
        with pytest.raises(ValueError):
            mcle.ScoringConfig(step_damping=0.0)

    def test_result_validates_acceptance_rate(self):
        with pytest.raises(ValueError):
            mcle.McleResult(
                theta=np.zeros(1),
                iterations=1,
                final_acceptance_rate=1.5,
                score_norm_trace=(),
                theta_trace=(),
                acceptance_trace=(),
                converged=True,
                wall_time_s=0.0,
            )


class TestFisherScoring:
    def test_exact_moments_match_enumeration_maximizer(self):
        series = gaussian.simulate_ar(AR1, 8, seed=5)
        stats = oracle.permutation_statistics(SPEC1, series)
        fit = mcle.fisher_scoring(
            SPEC1,
            series,
            scoring_config=mcle.ScoringConfig(max_iters=200, grad_tol=1e-9),
            moment_fn=lambda th: oracle.enumeration_moments(SPEC1, series, th, stats=stats),
        )
        target = oracle.exact_cle(SPEC1, series)
        assert fit.converged
        assert fit.theta[0] == pytest.approx(target[0], abs=1e-3)

    def test_zero_score_fixed_point(self):
        # boundary values equal, interior swap changes nothing: the observed
        # statistic equals the permutation mean, so theta stays at zero
        series = core.TimeSeries([1.0, 2.0, 5.0, 1.0])
        fit = mcle.fisher_scoring(
            SPEC1,
            series,
            moment_fn=lambda th: oracle.enumeration_moments(SPEC1, series, th),
        )
        assert fit.converged and fit.iterations == 1
        assert fit.theta[0] == 0.0

    def test_mcmc_estimate_close_to_truth(self):
        series = gaussian.simulate_ar(AR1, 150, seed=8)
        fit = mcle.fisher_scoring(
            SPEC1,
            series,
            exchange_config=mcle.ExchangeConfig(n_samples=8000, seed=13),
        )
        assert 0.0 <= fit.final_acceptance_rate <= 1.0
        assert abs(fit.theta[0] - 1.0) < 0.8
        assert len(fit.score_norm_trace) == fit.iterations
