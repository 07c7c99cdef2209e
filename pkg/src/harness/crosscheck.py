"""
Перекрёстная проверка двух независимых путей: замкнутой модели и плотного
оракула. Числовые сбои попадают в отчёт, а не прерывают прогон
"""
import itertools
import logging
import math
from typing import Callable, Iterable, List, Tuple

import numpy as np

from src.exceptions import ConfigurationError, ProtocolError, SizeCapError
from src.protocol.analytic import (
    classical_fisher,
    outcome_probs,
    qfi_binomial_sum,
    qfi_closed_form,
    visibility,
    visibility_derivative,
)
from src.protocol.estimator import make_rng
from src.protocol.oracle import (
    MAX_ORACLE_QUBITS,
    GeneratorMatrix,
    evolve_protocol,
    measure_control_x,
    prepare_probe,
    qfi_numeric,
)
from src.protocol.schemas import CheckResult, CrosscheckReport, ModelConfig

logger = logging.getLogger(__name__)

DEFAULT_MAX_QUBITS = 10
DEFAULT_SAMPLES = 100
EPSILON_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
ORACLE_EPSILONS = (0.0, 0.3, 0.7, 1.0)
ANALYTIC_RANGE = 6
QFI_ORACLE_QUBITS = 8
FD_STEP = 1e-6
CLASSICAL_PROBE_QUBITS = 10

NUMERICAL_FAILURES = (ProtocolError, ArithmeticError, ValueError, np.linalg.LinAlgError)

Check = Callable[[], float]


def _run_suite(name: str, tolerance: float, checks: Iterable[Check]) -> CheckResult:
    """
    Прогоняет набор проверок; каждая возвращает отклонение, сравниваемое
    с tolerance. Исключение или NaN считаются провалом
    """
    result = CheckResult(name=name, tolerance=tolerance)
    for check in checks:
        result.checked += 1
        try:
            deviation = float(check())
        except NUMERICAL_FAILURES as exc:
            logger.error("Check %s raised %s: %s", name, type(exc).__name__, exc)
            deviation = math.inf
        if math.isnan(deviation):
            deviation = math.inf
        if deviation > tolerance:
            result.failed += 1
        result.worst_deviation = max(result.worst_deviation, deviation)
    level = logging.INFO if result.passed else logging.WARNING
    logger.log(level, "%s: %d checked, %d failed, worst %.3e (tol %.1e)",
               name, result.checked, result.failed, result.worst_deviation, tolerance)
    return result


def _analytic_grid() -> List[ModelConfig]:
    span = range(ANALYTIC_RANGE + 1)
    return [ModelConfig(n=n, m=m, l=l, epsilon=eps)
            for n, m, l in itertools.product(span, span, span)
            for eps in EPSILON_GRID]


def _oracle_grid(max_qubits: int) -> List[ModelConfig]:
    limit = min(max_qubits, QFI_ORACLE_QUBITS) - 1
    configs = []
    for n, m, l in itertools.product(range(limit + 1), repeat=3):
        if n + m + l > limit:
            continue
        for eps in ORACLE_EPSILONS if m else ORACLE_EPSILONS[:1]:
            configs.append(ModelConfig(n=n, m=m, l=l, epsilon=eps))
    return configs


def _random_config(rng: np.random.Generator, max_qubits: int, purity: bool = True) -> ModelConfig:
    register = int(rng.integers(0, max_qubits))
    n, m, l = (int(v) for v in rng.multinomial(register, [1.0 / 3.0] * 3))
    return ModelConfig(
        n=n, m=m, l=l,
        epsilon=float(rng.random()),
        control_purity=float(rng.uniform(0.2, 1.0)) if purity else 1.0,
    )


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1.0)


def _sql_gap(cfg: ModelConfig) -> float:
    """
    Нарушение F_q ≥ SQL; при n = m = 0 ещё и отклонение от равенства
    """
    qfi = qfi_closed_form(cfg)
    sql = float(cfg.total_qubits)
    if cfg.n == cfg.m == 0:
        return abs(qfi - sql)
    return max(sql - qfi, 0.0)


def _fisher_excess(cfg: ModelConfig) -> float:
    omegas = np.linspace(-math.pi, math.pi, 257)
    return max(float(np.max(classical_fisher(cfg, omegas))) - qfi_closed_form(cfg), 0.0)


def _derivative_gap(cfg: ModelConfig, omega: float) -> float:
    central = (visibility(cfg, omega + FD_STEP) - visibility(cfg, omega - FD_STEP)) / (2.0 * FD_STEP)
    return abs(visibility_derivative(cfg, omega) - central)


def _probability_gap(cfg: ModelConfig, phi: float, theta: float) -> float:
    oracle = measure_control_x(evolve_protocol(cfg, phi, theta)).q_plus
    return abs(oracle - outcome_probs(cfg, theta - phi).q_plus)


def _checkpoint_gap(cfg: ModelConfig, phi: float, theta: float) -> float:
    states = evolve_protocol(cfg, phi, theta).states
    purity = states[0].purity()
    return max(
        max(abs(state.purity() - purity) for state in states),
        max(state.hermiticity_error() for state in states),
        max(state.trace_error() for state in states),
    )


def _qfi_oracle_gap(cfg: ModelConfig) -> float:
    probe = prepare_probe(cfg)
    numeric = qfi_numeric(probe, GeneratorMatrix.for_qubits(probe.num_qubits))
    return abs(numeric - qfi_closed_form(cfg)) / qfi_closed_form(cfg)


def _classical_probe_gap(l: int) -> float:
    probe = prepare_probe(ModelConfig(l=l))
    dim = probe.dim
    expected = (np.eye(dim) + np.fliplr(np.eye(dim))) / dim
    return float(np.max(np.abs(probe.matrix - expected)))


class CrosscheckService:
    """
    Сервис перекрёстной проверки замкнутой модели и оракула
    """
    def crosscheck(self, max_qubits: int = DEFAULT_MAX_QUBITS, seed: int = 0,
                   samples: int = DEFAULT_SAMPLES) -> CrosscheckReport:
        """
        Рандомизированный прогон наборов инвариантов analytic и oracle

        Args:
            max_qubits(int): наибольшее число кубитов в оракульных проверках, ≤ 12
            seed(int): зерно PCG64; отчёт детерминирован при фиксированном зерне
            samples(int): число случайных кортежей (cfg, φ, θ) для оракула

        Returns:
            CrosscheckReport: счётчики и худшие отклонения по наборам
        """
        if max_qubits > MAX_ORACLE_QUBITS:
            raise SizeCapError(f"max_qubits={max_qubits} exceeds the dense cap {MAX_ORACLE_QUBITS}")
        if max_qubits < 1 or samples < 1:
            raise ConfigurationError(f"Need max_qubits >= 1 and samples >= 1, got {max_qubits} and {samples}")
        rng = make_rng(seed)
        grid = _analytic_grid()

        analytic_samples: List[Tuple[ModelConfig, float]] = [
            (_random_config(rng, 3 * ANALYTIC_RANGE + 1, purity=False), float(rng.uniform(-math.pi, math.pi)))
            for _ in range(samples)
        ]
        oracle_samples: List[Tuple[ModelConfig, float, float]] = [
            (_random_config(rng, max_qubits),
             float(rng.uniform(-math.pi, math.pi)),
             float(rng.uniform(-math.pi, math.pi)))
            for _ in range(samples)
        ]

        checks = [
            _run_suite("qfi_dual_path", 1e-9,
                       (lambda cfg=cfg: _relative(qfi_binomial_sum(cfg), qfi_closed_form(cfg)) for cfg in grid)),
            _run_suite("sql_bound", 1e-12, (lambda cfg=cfg: _sql_gap(cfg) for cfg in grid)),
            _run_suite("fisher_limit", 1e-3,
                       (lambda cfg=cfg: abs(classical_fisher(cfg, 1e-4) - qfi_closed_form(cfg)) / qfi_closed_form(cfg)
                        for cfg, _ in analytic_samples)),
            _run_suite("fisher_bound", 1e-9, (lambda cfg=cfg: _fisher_excess(cfg) for cfg, _ in analytic_samples)),
            _run_suite("visibility_derivative", 1e-8,
                       (lambda cfg=cfg, w=w: _derivative_gap(cfg, w) for cfg, w in analytic_samples)),
            _run_suite("probability_dual_path", 1e-10,
                       (lambda c=c, p=p, t=t: _probability_gap(c, p, t) for c, p, t in oracle_samples)),
            _run_suite("checkpoint_invariants", 1e-12,
                       (lambda c=c, p=p, t=t: _checkpoint_gap(c, p, t) for c, p, t in oracle_samples)),
            _run_suite("qfi_oracle", 1e-8, (lambda cfg=cfg: _qfi_oracle_gap(cfg) for cfg in _oracle_grid(max_qubits))),
            _run_suite("classical_probe", 1e-12,
                       (lambda l=l: _classical_probe_gap(l) for l in range(min(max_qubits, CLASSICAL_PROBE_QUBITS)))),
        ]
        return CrosscheckReport(seed=seed, max_qubits=max_qubits, checks=checks)

