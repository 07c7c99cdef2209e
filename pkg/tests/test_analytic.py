import math

import numpy as np
import pytest
from hypothesis import given

from src.exceptions import ConfigurationError
from src.protocol.analytic import (
    BINOMIAL_GUARD,
    classical_fisher,
    complex_visibility,
    eigenvalue,
    heisenberg_fisher,
    max_classical_fisher,
    outcome_probs,
    q_plus,
    qfi_binomial_sum,
    qfi_closed_form,
    sql_fisher,
    visibility,
    visibility_derivative,
)
from src.protocol.schemas import Detuning, ModelConfig
from tests.conftest import configs, omegas


class TestVisibility:
    @given(configs(purity=True))
    def test_zero_detuning_gives_control_purity(self, cfg):
        assert visibility(cfg, 0.0) == pytest.approx(cfg.control_purity, abs=1e-12)

    def test_mixed_register_quarter_turn(self):
        cfg = ModelConfig(l=2)
        assert visibility(cfg, math.pi / 4) == pytest.approx(2 ** -1.5, abs=1e-12)
        assert visibility(cfg, math.pi / 4) == pytest.approx(0.3535534, abs=1e-7)

    def test_pure_register_is_single_cosine(self):
        cfg = ModelConfig(n=6)
        grid = np.linspace(-math.pi, math.pi, 101)
        np.testing.assert_allclose(visibility(cfg, grid), np.cos(7 * grid), atol=1e-12)
        assert visibility(cfg, math.pi / 14) == pytest.approx(0.0, abs=1e-12)

    def test_accepts_detuning_model(self):
        cfg = ModelConfig(m=1, epsilon=0.5)
        detuning = Detuning.from_phases(theta=1.0 + math.pi / 2, phi=1.0)
        assert visibility(cfg, detuning) == pytest.approx(visibility(cfg, math.pi / 2))

    @given(configs(purity=True), omegas)
    def test_bounded_and_periodic(self, cfg, omega):
        x = visibility(cfg, omega)
        assert -1.0 <= x <= 1.0
        assert visibility(cfg, omega + 2 * math.pi) == pytest.approx(x, abs=1e-9)

    @given(configs(), omegas)
    def test_real_part_of_complex_visibility(self, cfg, omega):
        assert visibility(cfg, omega) == pytest.approx(complex_visibility(cfg, omega).real, abs=1e-12)


class TestOutcomeProbs:
    def test_zero_detuning(self):
        probs = outcome_probs(ModelConfig(n=2, m=1, l=3, epsilon=0.2), 0.0)
        assert probs.q_plus == pytest.approx(1.0)
        assert probs.q_minus == pytest.approx(0.0, abs=1e-12)

    def test_mixed_qubit_at_quarter_turn(self):
        probs = outcome_probs(ModelConfig(l=1), math.pi / 2)
        assert probs.q_plus == pytest.approx(0.5, abs=1e-12)
        assert probs.q_minus == pytest.approx(0.5, abs=1e-12)

    def test_semi_pure_qubit_at_quarter_turn(self):
        probs = outcome_probs(ModelConfig(m=1, epsilon=0.5), math.pi / 2)
        assert probs.q_plus == pytest.approx(0.25, abs=1e-12)

    @given(configs(purity=True), omegas)
    def test_distribution_sums_to_one(self, cfg, omega):
        probs = outcome_probs(cfg, omega)
        assert probs.q_plus + probs.q_minus == 1.0
        assert 0.0 <= probs.q_minus <= 1.0

    def test_vectorised_q_plus_matches_scalar(self):
        cfg = ModelConfig(n=1, m=2, l=1, epsilon=0.6)
        grid = np.linspace(-3.0, 3.0, 13)
        expected = [outcome_probs(cfg, w).q_plus for w in grid]
        np.testing.assert_allclose(q_plus(cfg, grid), expected, atol=1e-15)


class TestVisibilityDerivative:
    def test_single_control_is_minus_sine(self):
        grid = np.linspace(-math.pi, math.pi, 41)
        np.testing.assert_allclose(visibility_derivative(ModelConfig(), grid), -np.sin(grid), atol=1e-14)

    @given(configs())
    def test_vanishes_at_maximum(self, cfg):
        assert visibility_derivative(cfg, 0.0) == pytest.approx(0.0, abs=1e-12)

    @given(configs(purity=True), omegas)
    def test_matches_central_difference(self, cfg, omega):
        h = 1e-6
        central = (visibility(cfg, omega + h) - visibility(cfg, omega - h)) / (2 * h)
        assert visibility_derivative(cfg, omega) == pytest.approx(central, abs=1e-8)


class TestClassicalFisher:
    def test_pure_register_is_flat(self):
        grid = np.linspace(-math.pi / 2, math.pi / 2, 401)
        values = classical_fisher(ModelConfig(n=6), grid)
        np.testing.assert_allclose(values, 49.0, rtol=1e-10)

    def test_single_control_is_one(self):
        grid = np.linspace(-3.0, 3.0, 61)
        np.testing.assert_allclose(classical_fisher(ModelConfig(), grid), 1.0, rtol=1e-10)

    def test_series_limit_at_zero(self):
        assert classical_fisher(ModelConfig(l=48), 0.0) == pytest.approx(49.0, rel=1e-10)
        assert classical_fisher(ModelConfig(m=11, epsilon=0.49), 0.0) == pytest.approx(49.191, abs=1e-3)

    def test_mixed_register_approaches_qfi(self):
        cfg = ModelConfig(l=48)
        assert classical_fisher(cfg, 1e-4) == pytest.approx(49.0, abs=1e-3)

    @given(configs())
    def test_limit_equals_qfi(self, cfg):
        qfi = qfi_closed_form(cfg)
        assert abs(classical_fisher(cfg, 1e-4) - qfi) / qfi < 1e-3

    @given(configs(), omegas)
    def test_never_exceeds_qfi(self, cfg, omega):
        assert 0.0 <= classical_fisher(cfg, omega) <= qfi_closed_form(cfg) * (1.0 + 1e-8)

    def test_unpolarised_control_carries_nothing(self):
        cfg = ModelConfig(l=2, control_purity=0.0)
        np.testing.assert_allclose(classical_fisher(cfg, np.linspace(-1, 1, 5)), 0.0, atol=1e-15)


class TestQuantumFisher:
    @pytest.mark.parametrize("epsilon", [0.0, 0.3, 1.0])
    def test_single_control(self, epsilon):
        assert qfi_closed_form(ModelConfig(epsilon=epsilon)) == 1.0
        assert qfi_binomial_sum(ModelConfig(epsilon=epsilon)) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("l", range(0, 9))
    def test_mixed_register_reaches_sql(self, l):
        cfg = ModelConfig(l=l)
        assert qfi_closed_form(cfg) == l + 1
        assert qfi_closed_form(cfg) == sql_fisher(cfg)

    @pytest.mark.parametrize("l,epsilon", [(0, 0.5), (3, 0.2), (7, 0.9)])
    def test_one_plus_epsilon(self, l, epsilon):
        assert qfi_closed_form(ModelConfig(m=1, l=l, epsilon=epsilon)) == pytest.approx(l + 2 + 2 * epsilon)

    @pytest.mark.parametrize("n", range(0, 7))
    def test_pure_register_is_heisenberg(self, n):
        cfg = ModelConfig(n=n)
        assert qfi_closed_form(cfg) == (n + 1) ** 2
        assert qfi_closed_form(cfg) == heisenberg_fisher(cfg)

    def test_semi_pure_reference_curve(self):
        assert qfi_closed_form(ModelConfig(m=11, epsilon=0.49)) == pytest.approx(49.191, abs=1e-3)

    def test_binomial_sum_small_cases(self):
        assert qfi_binomial_sum(ModelConfig(l=5)) == pytest.approx(6.0, rel=1e-12)
        cfg = ModelConfig(n=2, m=3, l=4, epsilon=0.3)
        assert qfi_binomial_sum(cfg) == pytest.approx(qfi_closed_form(cfg), rel=1e-10)

    def test_dual_path_on_full_grid(self):
        for n in range(7):
            for m in range(7):
                for l in range(7):
                    for epsilon in (0.0, 0.25, 0.5, 0.75, 1.0):
                        cfg = ModelConfig(n=n, m=m, l=l, epsilon=epsilon)
                        assert qfi_binomial_sum(cfg) == pytest.approx(qfi_closed_form(cfg), rel=1e-9)

    @given(configs(purity=True))
    def test_dual_path_with_partial_control(self, cfg):
        assert qfi_binomial_sum(cfg) == pytest.approx(qfi_closed_form(cfg), rel=1e-9)

    @given(configs())
    def test_at_least_sql(self, cfg):
        assert qfi_closed_form(cfg) >= sql_fisher(cfg) - 1e-12

    def test_large_registers_stay_finite(self):
        cfg = ModelConfig(n=3, m=600, l=400, epsilon=0.37)
        assert qfi_binomial_sum(cfg) == pytest.approx(qfi_closed_form(cfg), rel=1e-9)

    def test_binomial_guard(self):
        with pytest.raises(ConfigurationError):
            qfi_binomial_sum(ModelConfig(m=BINOMIAL_GUARD, l=1))


class TestEigenvalue:
    def test_semi_pure_qubit(self):
        assert eigenvalue(ModelConfig(m=1, epsilon=0.5), 0) == pytest.approx(0.75)

    def test_mixed_only(self):
        assert eigenvalue(ModelConfig(l=3), 0) == pytest.approx(1 / 8)

    def test_normalisation(self):
        cfg = ModelConfig(m=4, l=2, epsilon=0.7)
        total = sum(math.comb(cfg.m, j) * 2 ** cfg.l * eigenvalue(cfg, j) for j in range(cfg.m + 1))
        assert total == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("j", [-1, 3])
    def test_index_out_of_range(self, j):
        with pytest.raises(ConfigurationError):
            eigenvalue(ModelConfig(m=2), j)


class TestReadoutOptimum:
    def test_pure_control_peaks_at_zero(self):
        omega, fisher = max_classical_fisher(ModelConfig(l=6))
        assert fisher == pytest.approx(7.0, rel=1e-6)
        assert abs(omega) < 1e-2

    def test_partial_control_peaks_away_from_zero(self):
        cfg = ModelConfig(l=2, control_purity=0.6)
        omega, fisher = max_classical_fisher(cfg)
        assert abs(omega) > 1e-2
        assert fisher <= qfi_closed_form(cfg) + 1e-9
        assert fisher >= classical_fisher(cfg, np.linspace(-1.5, 1.5, 301)).max() - 1e-9
