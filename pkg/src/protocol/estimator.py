"""
Адаптивная байесовская оценка фазы на сетке и сравнение с границей
Крамера-Рао
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import xlogy

from src.back_tasks import run_parallel
from src.exceptions import ConfigurationError
from src.protocol.analytic import q_plus, qfi_closed_form, visibility
from src.protocol.schemas import (
    BenchmarkSummary,
    EstimationTrace,
    ModelConfig,
    RoundRecord,
    wrap_phase,
)

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 2048
DEFAULT_SHOTS_PER_ROUND = 20
DITHER_ROUNDS = 8
MIN_GRID_SIZE = 16
MIN_STABLE_TRIALS = 100
UNDERFLOW = 1e-300
RESULTANT_FLOOR = 1e-12
READOUT_KAPPA = 2.0
BROAD_VARIANCE = 0.5
PRNG_NAME = "PCG64"


@dataclass(frozen=True)
class Posterior:
    """
    Дискретное апостериорное распределение фазы на сетке [−π, π)
    """
    grid: np.ndarray
    weights: np.ndarray
    resets: int = 0

    def _resultant(self) -> complex:
        return complex(np.sum(self.weights * np.exp(1j * self.grid)))

    def mean(self) -> float:
        """
        Круговое среднее; для равномерного распределения по соглашению 0
        """
        resultant = self._resultant()
        if abs(resultant) < RESULTANT_FLOOR:
            return 0.0
        return wrap_phase(math.atan2(resultant.imag, resultant.real))

    def circular_variance(self) -> float:
        return float(min(max(1.0 - abs(self._resultant()), 0.0), 1.0))

    def circular_std(self) -> float:
        """
        Круговое стандартное отклонение sqrt(−2 ln R); для равномерного
        распределения бесконечно
        """
        resultant = abs(self._resultant())
        if resultant < RESULTANT_FLOOR:
            return math.inf
        return math.sqrt(max(-2.0 * math.log(min(resultant, 1.0)), 0.0))

    def mode(self) -> float:
        """
        Точка сетки с наибольшим весом; для плоского распределения - mean()
        """
        if np.ptp(self.weights) == 0.0:
            return self.mean()
        return float(self.grid[int(np.argmax(self.weights))])


def _uniform(grid: np.ndarray) -> np.ndarray:
    return np.full(grid.shape, 1.0 / grid.size)


def init_posterior(grid_size: int = DEFAULT_GRID_SIZE) -> Posterior:
    """
    Равномерное априорное распределение: θ(0) не использует знаний о φ

    Args:
        grid_size(int): число точек сетки, ≥ 16 (желательно степень двойки)

    Returns:
        Posterior: равномерные веса на сетке −π + 2πi/G
    """
    if grid_size < MIN_GRID_SIZE:
        raise ConfigurationError(f"Posterior grid needs at least {MIN_GRID_SIZE} points, got {grid_size}")
    if grid_size & (grid_size - 1):
        logger.warning("Posterior grid size %d is not a power of two", grid_size)
    grid = -math.pi + 2.0 * math.pi * np.arange(grid_size) / grid_size
    return Posterior(grid=grid, weights=_uniform(grid))


def _normalise(post: Posterior, weights: np.ndarray) -> Posterior:
    total = float(np.sum(weights))
    if total < UNDERFLOW:
        peak = float(np.max(weights))
        if not peak > 0.0 or not math.isfinite(peak):
            logger.warning("Posterior collapsed to zero; resetting to uniform")
            return Posterior(grid=post.grid, weights=_uniform(post.grid), resets=post.resets + 1)
        weights = weights / peak
        total = float(np.sum(weights))
    return Posterior(grid=post.grid, weights=weights / total, resets=post.resets)


def bayes_update(post: Posterior, cfg: ModelConfig, theta: float, outcome: int) -> Posterior:
    """
    Байесовское обновление по одному исходу измерения

    w_i ∝ w_i · q^{±}(θ − φ_i)

    Args:
        post(Posterior): текущее апостериорное распределение
        cfg(ModelConfig): конфигурация протокола
        theta(float): настройка считывания текущего раунда
        outcome(int): +1 или −1

    Returns:
        Posterior: нормированное апостериорное распределение
    """
    if outcome not in (1, -1):
        raise ConfigurationError(f"Outcome must be +1 or -1, got {outcome}")
    x = visibility(cfg, theta - post.grid)
    likelihood = 0.5 * (1.0 + outcome * x)
    return _normalise(post, post.weights * likelihood)


def bayes_update_counts(post: Posterior, cfg: ModelConfig, theta: float,
                        plus: int, minus: int) -> Posterior:
    """
    То же, что plus обновлений с исходом + и minus с исходом −,
    одним шагом в лог-пространстве
    """
    probability = np.asarray(q_plus(cfg, theta - post.grid))
    with np.errstate(divide="ignore"):
        log_weights = (np.log(post.weights)
                       + xlogy(plus, probability)
                       + xlogy(minus, 1.0 - probability))
    peak = np.max(log_weights)
    if not np.isfinite(peak):
        return _normalise(post, np.zeros_like(post.weights))
    return _normalise(post, np.exp(log_weights - peak))


def readout_centre(post: Posterior) -> float:
    """
    Центр считывания: круговое среднее для сосредоточенного распределения,
    мода для широкого или многомодального (круговая дисперсия > 0.5)

    Среднее двух симметричных пиков лежит между ними, где x(ω) почти не
    зависит от φ; мода выбирает один пик, и следующий раунд его
    подтверждает или исключает
    """
    if post.circular_variance() > BROAD_VARIANCE:
        return post.mode()
    return post.mean()


def select_theta(post: Posterior, round_index: int, cfg: ModelConfig) -> float:
    """
    Настройка считывания θ(r) = центр ± сдвиг, знак чередуется по чётности
    раунда (+ на чётных)

    x(ω) чётна при n = m = 0: при θ, совпадающем с центром, исход говорит
    только о |θ − φ|. Сдвиг держит распределение по одну сторону от θ
    во всех раундах. Первые 8 раундов сдвиг равен π/(2(1+n+m+l)), далее
    min(2·σ_circ, π/(2(1+n+m+l))); потеря информации Фишера при этом
    второго порядка по σ_circ

    Args:
        post(Posterior): апостериорное распределение после r раундов
        round_index(int): номер раунда r
        cfg(ModelConfig): конфигурация (задаёт наибольший сдвиг)

    Returns:
        float: θ(r), радианы
    """
    centre = readout_centre(post)
    offset = math.pi / (2.0 * cfg.total_qubits)
    if round_index >= DITHER_ROUNDS:
        offset = min(READOUT_KAPPA * post.circular_std(), offset)
    sign = 1.0 if round_index % 2 == 0 else -1.0
    return wrap_phase(centre + sign * offset)


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ConfigurationError(f"Seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def sample_outcomes(cfg: ModelConfig, omega: float, shots: int,
                    rng: np.random.Generator) -> Tuple[int, int]:
    """
    Разыгрывает shots исходов измерения при расстройке ω

    Returns:
        tuple[int, int]: (число исходов +, число исходов −)
    """
    plus = int(rng.binomial(shots, float(q_plus(cfg, omega))))
    return plus, shots - plus


class AdaptiveEstimator:
    """
    Сервис адаптивной оценки фазы: одиночные прогоны и ансамблевое
    сравнение с границей Крамера-Рао
    """
    def __init__(self, grid_size: int = DEFAULT_GRID_SIZE,
                 shots_per_round: int = DEFAULT_SHOTS_PER_ROUND,
                 workers: int = 1):
        """
        Args:
            grid_size(int): размер сетки апостериорного распределения
            shots_per_round(int): число измерений в раунде по умолчанию
            workers(int): число потоков для независимых испытаний
        """
        if shots_per_round < 1:
            raise ConfigurationError(f"Need at least one shot per round, got {shots_per_round}")
        self.grid_size = grid_size
        self.shots_per_round = shots_per_round
        self.workers = workers


    def run_adaptive(self, cfg: ModelConfig, phi_true: float, rounds: int,
                     shots_per_round: Optional[int] = None, seed: int = 0) -> EstimationTrace:
        """
        Один адаптивный прогон

        В каждом раунде: θ(r) по select_theta, shots_per_round исходов
        из q±(θ − φ) генератором PCG64(seed), байесовское обновление

        Args:
            cfg(ModelConfig): конфигурация протокола
            phi_true(float): истинная фаза
            rounds(int): число раундов, ≥ 1
            shots_per_round(Optional[int]): измерений в раунде, ≥ 1
            seed(int): зерно генератора

        Returns:
            EstimationTrace: детерминированная история при фиксированных входах
        """
        shots = self.shots_per_round if shots_per_round is None else shots_per_round
        if rounds < 1 or shots < 1:
            raise ConfigurationError(f"Need rounds >= 1 and shots >= 1, got {rounds} and {shots}")
        rng = make_rng(seed)
        post = init_posterior(self.grid_size)
        trace = EstimationTrace(config=cfg, phi_true=phi_true, seed=seed, prng=PRNG_NAME)
        for round_index in range(rounds):
            theta = select_theta(post, round_index, cfg)
            plus, minus = sample_outcomes(cfg, theta - phi_true, shots, rng)
            post = bayes_update_counts(post, cfg, theta, plus, minus)
            trace.rounds.append(RoundRecord(
                round_index=round_index,
                theta=theta,
                plus=plus,
                minus=minus,
                estimate=post.mean(),
                circ_variance=post.circular_variance(),
            ))
        trace.posterior_resets = post.resets
        return trace


    def crb_benchmark(self, cfg: ModelConfig, phi_true: float, total_shots: int,
                      trials: int, seed: int = 0) -> BenchmarkSummary:
        """
        Ансамбль независимых прогонов и сравнение СКО итоговых оценок
        с CRB = 1/(N·F_q)

        Испытание t использует зерно seed + t; агрегирование не зависит
        от порядка выполнения

        Args:
            cfg(ModelConfig): конфигурация протокола
            phi_true(float): истинная фаза
            total_shots(int): полный бюджет измерений одного испытания
            trials(int): число испытаний (≥ 100 для устойчивой статистики)
            seed(int): базовое зерно

        Returns:
            BenchmarkSummary: СКО, CRB, их отношение и флаг низкой достоверности
        """
        if trials < 1:
            raise ConfigurationError(f"Need at least one trial, got {trials}")
        if seed < 0:
            raise ConfigurationError(f"Seed must be non-negative, got {seed}")
        qfi = qfi_closed_form(cfg)
        if qfi <= 0.0:
            raise ConfigurationError("Configuration carries no Fisher information")
        if total_shots < self.shots_per_round:
            raise ConfigurationError(
                f"Budget of {total_shots} shots is smaller than one round of {self.shots_per_round}"
            )
        rounds = total_shots // self.shots_per_round
        shots_used = rounds * self.shots_per_round
        if shots_used != total_shots:
            logger.warning("Budget %d rounded down to %d shots (%d rounds x %d)",
                           total_shots, shots_used, rounds, self.shots_per_round)

        traces = run_parallel(
            lambda trial: self.run_adaptive(cfg, phi_true, rounds, seed=seed + trial),
            list(range(trials)),
            workers=self.workers,
        )
        errors = np.array([trace.final_error for trace in traces])
        variances = np.array([trace.final_variance for trace in traces])
        mse = float(np.mean(errors ** 2))
        crb = 1.0 / (shots_used * qfi)
        low_confidence = trials < MIN_STABLE_TRIALS
        if low_confidence:
            logger.warning("Benchmark with %d trials is low-confidence (< %d)", trials, MIN_STABLE_TRIALS)
        return BenchmarkSummary(
            config=cfg,
            phi_true=phi_true,
            total_shots=shots_used,
            trials=trials,
            qfi=qfi,
            mse=mse,
            crb=crb,
            ratio=mse / crb,
            mean_circ_variance=float(np.mean(variances)),
            low_confidence=low_confidence,
        )

