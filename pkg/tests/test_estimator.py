import logging
import math

import numpy as np
import pytest

from src.exceptions import ConfigurationError
from src.protocol.analytic import q_plus
from src.protocol.estimator import (
    DITHER_ROUNDS,
    READOUT_KAPPA,
    AdaptiveEstimator,
    Posterior,
    bayes_update,
    bayes_update_counts,
    init_posterior,
    make_rng,
    readout_centre,
    sample_outcomes,
    select_theta,
)
from src.protocol.schemas import ModelConfig, wrap_phase


def point_mass(index: int, grid_size: int = 2048) -> Posterior:
    post = init_posterior(grid_size)
    weights = np.zeros(grid_size)
    weights[index] = 1.0
    return Posterior(grid=post.grid, weights=weights)


class TestPosterior:
    def test_uniform_prior(self):
        post = init_posterior(16)
        np.testing.assert_allclose(post.weights, 1 / 16)
        assert post.grid[0] == -math.pi
        assert post.mean() == 0.0
        assert post.circular_variance() == pytest.approx(1.0, abs=1e-12)

    def test_grid_too_small(self):
        with pytest.raises(ConfigurationError):
            init_posterior(8)

    def test_non_power_of_two_warns(self, caplog):
        with caplog.at_level(logging.WARNING):
            post = init_posterior(100)
        assert post.grid.size == 100
        assert "not a power of two" in caplog.text

    def test_point_mass(self):
        post = point_mass(1500)
        assert post.mean() == pytest.approx(post.grid[1500], abs=1e-12)
        assert post.circular_variance() == pytest.approx(0.0, abs=1e-12)


class TestBayesUpdate:
    def test_plus_outcome_peaks_at_readout(self):
        post = bayes_update(init_posterior(), ModelConfig(), theta=0.5, outcome=1)
        assert post.weights.sum() == pytest.approx(1.0)
        assert abs(post.grid[np.argmax(post.weights)] - 0.5) <= 2 * math.pi / 2048

    def test_opposite_outcomes_zero_the_readout_point(self):
        post = init_posterior()
        theta = float(post.grid[700])
        post = bayes_update(post, ModelConfig(l=1), theta, 1)
        post = bayes_update(post, ModelConfig(l=1), theta, -1)
        assert post.weights[700] == 0.0

    def test_invalid_outcome(self):
        with pytest.raises(ConfigurationError):
            bayes_update(init_posterior(), ModelConfig(), 0.0, 0)

    def test_repeated_agreement_sharpens(self):
        cfg = ModelConfig(l=4)
        post = init_posterior()
        variances = [post.circular_variance()]
        for _ in range(10):
            post = bayes_update(post, cfg, 0.0, 1)
            variances.append(post.circular_variance())
        assert all(later < earlier for earlier, later in zip(variances, variances[1:]))

    def test_counts_match_sequential_updates(self):
        cfg = ModelConfig(m=1, l=2, epsilon=0.4)
        theta = 0.8
        sequential = init_posterior()
        for outcome in (1, 1, -1, 1, -1):
            sequential = bayes_update(sequential, cfg, theta, outcome)
        batched = bayes_update_counts(init_posterior(), cfg, theta, plus=3, minus=2)
        np.testing.assert_allclose(batched.weights, sequential.weights, atol=1e-12)

    def test_impossible_outcome_resets_to_uniform(self, caplog):
        post = point_mass(1024)
        assert post.grid[1024] == 0.0
        with caplog.at_level(logging.WARNING):
            single = bayes_update(post, ModelConfig(), 0.0, -1)
        batched = bayes_update_counts(post, ModelConfig(), 0.0, plus=0, minus=3)
        for reset in (single, batched):
            assert reset.resets == 1
            np.testing.assert_allclose(reset.weights, 1 / 2048)
        assert "resetting to uniform" in caplog.text


class TestSelectTheta:
    def test_dither_alternates(self):
        cfg = ModelConfig(l=3)
        post = init_posterior()
        offset = math.pi / 8
        assert select_theta(post, 0, cfg) == pytest.approx(offset)
        assert select_theta(post, 1, cfg) == pytest.approx(-offset)
        assert select_theta(post, DITHER_ROUNDS - 2, cfg) == pytest.approx(offset)
        assert select_theta(post, DITHER_ROUNDS - 1, cfg) == pytest.approx(-offset)

    def test_concentrated_posterior_reads_out_at_mean(self):
        post = point_mass(1500)
        assert select_theta(post, DITHER_ROUNDS, ModelConfig(n=2)) == pytest.approx(post.grid[1500], abs=1e-6)

    def test_offset_follows_posterior_width(self):
        post = init_posterior()
        weights = np.zeros(post.grid.size)
        weights[[1000, 1010]] = 0.5
        post = Posterior(grid=post.grid, weights=weights)
        offset = READOUT_KAPPA * post.circular_std()
        assert 0.0 < offset < math.pi / 2
        assert select_theta(post, DITHER_ROUNDS, ModelConfig()) == pytest.approx(post.mean() + offset)
        assert select_theta(post, DITHER_ROUNDS + 1, ModelConfig()) == pytest.approx(post.mean() - offset)

    def test_offset_is_capped(self):
        cfg = ModelConfig(l=4)
        post = init_posterior()
        weights = np.exp(-0.5 * (post.grid / 0.5) ** 2)
        post = Posterior(grid=post.grid, weights=weights / weights.sum())
        assert READOUT_KAPPA * post.circular_std() > math.pi / 10
        assert select_theta(post, 20, cfg) == pytest.approx(math.pi / 10)

    def test_broad_bimodal_posterior_reads_out_at_mode(self):
        post = init_posterior()
        weights = np.zeros(post.grid.size)
        weights[600], weights[1600] = 0.6, 0.4
        post = Posterior(grid=post.grid, weights=weights)
        assert post.circular_variance() > 0.5
        assert readout_centre(post) == post.grid[600]
        assert select_theta(post, DITHER_ROUNDS, ModelConfig(l=4)) == pytest.approx(post.grid[600] + math.pi / 10)

    def test_readout_never_sits_on_posterior_centre(self):
        cfg = ModelConfig(l=4)
        post = init_posterior()
        for round_index in range(40):
            post = bayes_update_counts(post, cfg, select_theta(post, round_index, cfg), plus=15, minus=5)
            theta = select_theta(post, round_index + 1, cfg)
            assert abs(wrap_phase(theta - readout_centre(post))) > 1e-6

    def test_dither_wraps(self):
        post = point_mass(2040)
        theta = select_theta(post, 0, ModelConfig())
        assert -math.pi < theta <= math.pi


class TestSampling:
    def test_frequencies_match_probabilities(self):
        cfg = ModelConfig(l=2)
        shots = 100_000
        probability = float(q_plus(cfg, math.pi / 4))
        plus, minus = sample_outcomes(cfg, math.pi / 4, shots, make_rng(7))
        assert plus + minus == shots
        sigma = math.sqrt(probability * (1 - probability) / shots)
        assert abs(plus / shots - probability) < 3 * sigma

    def test_same_seed_same_draws(self):
        cfg = ModelConfig(m=2, epsilon=0.3)
        first = [sample_outcomes(cfg, 0.4, 20, make_rng(11)) for _ in range(3)]
        assert len(set(first)) == 1

    def test_negative_seed(self):
        with pytest.raises(ConfigurationError):
            make_rng(-1)


class TestAdaptiveEstimator:
    def test_trace_is_deterministic(self):
        estimator = AdaptiveEstimator(grid_size=256)
        cfg = ModelConfig(m=1, l=1, epsilon=0.5)
        first = estimator.run_adaptive(cfg, 0.3, rounds=12, seed=5)
        second = estimator.run_adaptive(cfg, 0.3, rounds=12, seed=5)
        other = estimator.run_adaptive(cfg, 0.3, rounds=12, seed=6)
        assert first.model_dump() == second.model_dump()
        assert [r.plus for r in first.rounds] != [r.plus for r in other.rounds]

    def test_trace_records_every_round(self):
        trace = AdaptiveEstimator(grid_size=256).run_adaptive(ModelConfig(l=2), -0.7, rounds=10, shots_per_round=5)
        assert [r.round_index for r in trace.rounds] == list(range(10))
        assert all(r.plus + r.minus == 5 for r in trace.rounds)
        assert trace.prng == "PCG64"
        assert trace.posterior_resets == 0

    def test_converges_for_single_control(self):
        trace = AdaptiveEstimator().run_adaptive(ModelConfig(), 0.5, rounds=50, shots_per_round=20, seed=1)
        assert abs(trace.final_error) < 0.15
        assert trace.final_variance < 0.05

    def test_readout_distance_shrinks_over_ensemble(self):
        estimator = AdaptiveEstimator(grid_size=512)
        cfg = ModelConfig(l=4)
        phi = -1.2
        distances = np.array([
            [abs(wrap_phase(record.theta - phi)) for record in estimator.run_adaptive(cfg, phi, rounds=30, seed=seed).rounds]
            for seed in range(40)
        ]).mean(axis=0)
        early, middle, late = distances[0:5].mean(), distances[10:15].mean(), distances[25:30].mean()
        assert early >= middle >= late
        assert late < 0.2

    def test_sign_of_detuning_is_resolved(self):
        estimator = AdaptiveEstimator(grid_size=1024)
        cfg = ModelConfig(l=4)
        for seed in range(10):
            trace = estimator.run_adaptive(cfg, 0.5, rounds=60, seed=seed)
            assert abs(trace.final_error) < 0.1

    @pytest.mark.parametrize("rounds,shots", [(0, 20), (5, 0)])
    def test_rejects_empty_runs(self, rounds, shots):
        with pytest.raises(ConfigurationError):
            AdaptiveEstimator().run_adaptive(ModelConfig(), 0.1, rounds=rounds, shots_per_round=shots)

    def test_rejects_empty_rounds_in_constructor(self):
        with pytest.raises(ConfigurationError):
            AdaptiveEstimator(shots_per_round=0)


class TestCrbBenchmark:
    def test_bound_depends_only_on_qfi(self):
        estimator = AdaptiveEstimator(grid_size=128)
        pure = estimator.crb_benchmark(ModelConfig(n=6), 0.2, total_shots=40, trials=2)
        mixed = estimator.crb_benchmark(ModelConfig(l=48), 0.2, total_shots=40, trials=2)
        assert pure.qfi == mixed.qfi == 49.0
        assert pure.crb == mixed.crb == pytest.approx(1 / (40 * 49))

    def test_few_trials_are_flagged(self, caplog):
        with caplog.at_level(logging.WARNING):
            summary = AdaptiveEstimator(grid_size=128).crb_benchmark(ModelConfig(), 0.2, total_shots=40, trials=1)
        assert summary.low_confidence
        assert "low-confidence" in caplog.text

    def test_budget_rounds_to_whole_rounds(self, caplog):
        with caplog.at_level(logging.WARNING):
            summary = AdaptiveEstimator(grid_size=128).crb_benchmark(ModelConfig(), 0.2, total_shots=50, trials=1)
        assert summary.total_shots == 40
        assert "rounded down" in caplog.text

    def test_parallel_matches_serial(self):
        cfg = ModelConfig(m=1, l=1, epsilon=0.6)
        serial = AdaptiveEstimator(grid_size=128).crb_benchmark(cfg, 0.4, total_shots=100, trials=4, seed=3)
        parallel = AdaptiveEstimator(grid_size=128, workers=4).crb_benchmark(cfg, 0.4, total_shots=100, trials=4, seed=3)
        assert parallel.model_dump() == serial.model_dump()

    def test_no_information(self):
        with pytest.raises(ConfigurationError):
            AdaptiveEstimator().crb_benchmark(ModelConfig(l=2, control_purity=0.0), 0.2, total_shots=40, trials=1)

    def test_no_trials(self):
        with pytest.raises(ConfigurationError):
            AdaptiveEstimator().crb_benchmark(ModelConfig(), 0.2, total_shots=40, trials=0)

    def test_budget_below_one_round(self):
        with pytest.raises(ConfigurationError):
            AdaptiveEstimator().crb_benchmark(ModelConfig(), 0.2, total_shots=10, trials=1)

    def test_negative_seed(self):
        with pytest.raises(ConfigurationError):
            AdaptiveEstimator(grid_size=128).crb_benchmark(ModelConfig(), 0.2, total_shots=40, trials=2, seed=-1)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed,phi", [(0, 0.5), (1000, -1.2), (77, 2.6)])
    def test_mixed_register_reaches_bound(self, seed, phi):
        summary = AdaptiveEstimator().crb_benchmark(ModelConfig(l=4), phi, total_shots=2000, trials=200, seed=seed)
        assert not summary.low_confidence
        assert 0.8 <= summary.ratio <= 2.0

    @pytest.mark.slow
    def test_larger_register_beats_single_control(self):
        estimator = AdaptiveEstimator()
        single = estimator.crb_benchmark(ModelConfig(), 0.5, total_shots=2000, trials=200)
        register = estimator.crb_benchmark(ModelConfig(l=8), 0.5, total_shots=2000, trials=200)
        assert single.mse / register.mse >= 4.0
