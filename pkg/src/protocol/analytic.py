"""
Замкнутая модель протокола: видность, вероятности исходов, классическая
информация Фишера и два независимых пути к квантовой информации Фишера
"""
import math
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt
from scipy.optimize import minimize_scalar
from scipy.special import gammaln, xlogy

from src.exceptions import ConfigurationError
from src.protocol.schemas import Detuning, ModelConfig, OutcomeDistribution

OmegaLike = Union[Detuning, float, npt.ArrayLike]

SERIES_THRESHOLD = 1e-12
BINOMIAL_GUARD = 1024


def _as_omega(w: OmegaLike) -> np.ndarray:
    if isinstance(w, Detuning):
        return np.asarray(w.omega, dtype=float)
    return np.asarray(w, dtype=float)


def _unwrap(result: np.ndarray) -> Union[float, np.ndarray]:
    if np.ndim(result) == 0:
        return float(result)
    return result


def _polar_power(z: np.ndarray, k: int) -> np.ndarray:
    """
    z^k через модуль и фазу по отдельности; |z| ≤ 1, поэтому произведение
    устойчиво и при больших k. Соглашение 0⁰ = 1
    """
    if k == 0:
        return np.ones_like(z)
    return np.abs(z) ** k * np.exp(1j * k * np.angle(z))


def _semi_pure_factor(cfg: ModelConfig, omega: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    z = np.cos(omega) + 1j * cfg.epsilon * np.sin(omega)
    dz = -np.sin(omega) + 1j * cfg.epsilon * np.cos(omega)
    return z, dz


def complex_visibility(cfg: ModelConfig, w: OmegaLike) -> Union[complex, np.ndarray]:
    """
    δ·e^{i(n+1)ω}·cos^l(ω)·[cos ω + iε sin ω]^m

    Args:
        cfg(ModelConfig): конфигурация протокола
        w: расстройка ω (число, массив или Detuning)

    Returns:
        комплексная видность; её вещественная часть - x(ω)
    """
    omega = _as_omega(w)
    z, _ = _semi_pure_factor(cfg, omega)
    value = (cfg.control_purity
             * np.exp(1j * (cfg.n + 1) * omega)
             * np.cos(omega) ** cfg.l
             * _polar_power(z, cfg.m))
    if np.ndim(value) == 0:
        return complex(value)
    return value


def visibility(cfg: ModelConfig, w: OmegaLike) -> Union[float, np.ndarray]:
    """
    Видность x(ω) = ⟨σ_x⟩ управляющего кубита после считывания

    Args:
        cfg(ModelConfig): конфигурация протокола
        w: расстройка ω = θ(r) − φ

    Returns:
        x(ω) в [−1, 1]; при ω = 0 и δ = 1 равна 1
    """
    omega = _as_omega(w)
    z, _ = _semi_pure_factor(cfg, omega)
    phase = (cfg.n + 1) * omega + cfg.m * np.angle(z)
    modulus = np.abs(z) ** cfg.m if cfg.m else np.ones_like(omega)
    x = cfg.control_purity * np.cos(omega) ** cfg.l * modulus * np.cos(phase)
    return _unwrap(np.clip(x, -1.0, 1.0))


def outcome_probs(cfg: ModelConfig, w: OmegaLike) -> OutcomeDistribution:
    """
    Распределение исходов q± = (1 ± x)/2 для одной расстройки

    Args:
        cfg(ModelConfig): конфигурация протокола
        w: скалярная расстройка

    Returns:
        OutcomeDistribution: q_plus, q_minus = 1 − q_plus
    """
    return OutcomeDistribution(q_plus=float(q_plus(cfg, w)))


def q_plus(cfg: ModelConfig, w: OmegaLike) -> Union[float, np.ndarray]:
    """
    Векторизованная вероятность исхода "+"
    """
    x = np.asarray(visibility(cfg, w))
    return _unwrap(np.clip(0.5 * (1.0 + x), 0.0, 1.0))


def _complex_derivative(cfg: ModelConfig, omega: np.ndarray) -> np.ndarray:
    c = np.cos(omega)
    s = np.sin(omega)
    z, dz = _semi_pure_factor(cfg, omega)
    base = np.exp(1j * (cfg.n + 1) * omega)
    zm = _polar_power(z, cfg.m)
    cl = c ** cfg.l

    derivative = 1j * (cfg.n + 1) * base * cl * zm
    if cfg.l:
        derivative = derivative - cfg.l * base * c ** (cfg.l - 1) * s * zm
    if cfg.m:
        derivative = derivative + cfg.m * base * cl * _polar_power(z, cfg.m - 1) * dz
    return cfg.control_purity * derivative


def visibility_derivative(cfg: ModelConfig, w: OmegaLike) -> Union[float, np.ndarray]:
    """
    dx/dω в замкнутой форме (правило произведения по трём множителям)

    Знак: ∂_φ = −∂_ω, поэтому ∂_φ q± = ∓½·dx/dω

    Args:
        cfg(ModelConfig): конфигурация протокола
        w: расстройка ω

    Returns:
        производная видности по ω
    """
    omega = _as_omega(w)
    return _unwrap(np.real(_complex_derivative(cfg, omega)))


def _one_minus_x_squared(cfg: ModelConfig, omega: np.ndarray) -> np.ndarray:
    """
    1 − x² = (1 − δ²A²) + δ²A²·sin²Φ, где A - модуль, Φ - фаза видности;
    1 − δ²A² считается через expm1/log1p без потери точности у |x| = 1
    """
    s = np.sin(omega)
    z, _ = _semi_pure_factor(cfg, omega)
    phase = (cfg.n + 1) * omega + cfg.m * np.angle(z)
    with np.errstate(divide="ignore"):
        log_a2 = np.zeros_like(omega)
        if cfg.l:
            log_a2 = log_a2 + 2.0 * cfg.l * np.log(np.abs(np.cos(omega)))
        if cfg.m:
            log_a2 = log_a2 + cfg.m * np.log1p(-(1.0 - cfg.epsilon ** 2) * s ** 2)
        log_a2 = log_a2 + 2.0 * np.log(cfg.control_purity)
    a2 = np.exp(log_a2)
    return -np.expm1(log_a2) + a2 * np.sin(phase) ** 2


def _series_limit(cfg: ModelConfig, omega: np.ndarray) -> np.ndarray:
    """
    Предел F при |x| → 1: отношение кривизн, F → −x·x''
    """
    c = np.cos(omega)
    z, dz = _semi_pure_factor(cfg, omega)
    log_derivative = 1j * (cfg.n + 1) * np.ones_like(omega, dtype=complex)
    log_curvature = np.zeros_like(omega, dtype=complex)
    if cfg.l:
        log_derivative = log_derivative - cfg.l * np.tan(omega)
        log_curvature = log_curvature - cfg.l / c ** 2
    if cfg.m:
        ratio = dz / z
        log_derivative = log_derivative + cfg.m * ratio
        log_curvature = log_curvature - cfg.m * (1.0 + ratio ** 2)
    p = complex_visibility(cfg, omega)
    second = np.real(p * (log_derivative ** 2 + log_curvature))
    return np.maximum(-np.real(p) * second, 0.0)


def classical_fisher(cfg: ModelConfig, w: OmegaLike) -> Union[float, np.ndarray]:
    """
    Классическая информация Фишера двухисходного распределения
    F(ω) = (dx/dω)² / (1 − x²)

    В точках |x| = 1 возвращается предел по ряду второго порядка, а не 0/0

    Args:
        cfg(ModelConfig): конфигурация протокола
        w: расстройка ω

    Returns:
        F(ω) ≥ 0
    """
    omega = np.atleast_1d(_as_omega(w))
    denominator = _one_minus_x_squared(cfg, omega)
    numerator = np.real(_complex_derivative(cfg, omega)) ** 2

    fisher = np.empty_like(omega)
    regular = denominator >= SERIES_THRESHOLD
    fisher[regular] = numerator[regular] / denominator[regular]
    if not regular.all():
        fisher[~regular] = _series_limit(cfg, omega[~regular])
    if np.ndim(_as_omega(w)) == 0:
        return float(fisher[0])
    return fisher


def qfi_closed_form(cfg: ModelConfig) -> float:
    """
    F_q = l + m(1−ε²) + (1+n+εm)², умноженное на δ² для
    частично поляризованного управляющего кубита
    """
    eps = cfg.epsilon
    value = cfg.l + cfg.m * (1.0 - eps ** 2) + (1.0 + cfg.n + eps * cfg.m) ** 2
    return cfg.control_purity ** 2 * value


def _log_eigenvalues(cfg: ModelConfig, j: np.ndarray) -> np.ndarray:
    eps = cfg.epsilon
    return (-(cfg.m + cfg.l) * math.log(2.0)
            + xlogy(cfg.m - j, 1.0 + eps)
            + xlogy(j, 1.0 - eps))


def _log_binomial(total: int, k: np.ndarray) -> np.ndarray:
    return gammaln(total + 1) - gammaln(k + 1) - gammaln(total - k + 1)


def eigenvalue(cfg: ModelConfig, j: int) -> float:
    """
    Собственное значение λ_j⁺ = (1+ε)^{m−j}(1−ε)^j / 2^{m+l}

    Args:
        cfg(ModelConfig): конфигурация протокола
        j(int): число единиц в строке частично чистого регистра, 0..m

    Returns:
        float: λ_j⁺; Σ_j C(m,j)·2^l·λ_j⁺ = 1
    """
    if not 0 <= j <= cfg.m:
        raise ConfigurationError(f"Eigenvalue index j={j} outside 0..{cfg.m}")
    return float(np.exp(_log_eigenvalues(cfg, np.asarray(j, dtype=float))))


def qfi_binomial_sum(cfg: ModelConfig) -> float:
    """
    Квантовая информация Фишера через биномиальную сумму по собственным
    векторам ψ±_jk пробного состояния

    F_q = 4 Σ_j C(m,j) λ_j⁺ Σ_k C(l,k) |⟨ψ⁻_jk|G|ψ⁺_jk⟩|²,
    ⟨ψ⁻|G|ψ⁺⟩ = ½[(j+k) − (n+m+l−j−k+1)]

    Веса считаются в лог-пространстве: по отдельности C(m,j) и λ_j⁺
    переполняются, произведение - нет

    Args:
        cfg(ModelConfig): конфигурация с m + l ≤ 1024

    Returns:
        float: значение, совпадающее с qfi_closed_form
    """
    if cfg.m + cfg.l > BINOMIAL_GUARD:
        raise ConfigurationError(
            f"m + l = {cfg.m + cfg.l} exceeds the binomial guard {BINOMIAL_GUARD}"
        )
    j = np.arange(cfg.m + 1, dtype=float)
    k = np.arange(cfg.l + 1, dtype=float)
    weight_j = np.exp(_log_binomial(cfg.m, j) + _log_eigenvalues(cfg, j))
    weight_k = np.exp(_log_binomial(cfg.l, k))
    total = j[:, None] + k[None, :]
    element = 0.5 * (total - (cfg.register_size - total + 1))
    pair_sum = np.sum(weight_j[:, None] * weight_k[None, :] * element ** 2)
    return float(4.0 * cfg.control_purity ** 2 * pair_sum)


def sql_fisher(cfg: ModelConfig) -> float:
    """
    Стандартный квантовый предел: N = 1+n+m+l некоррелированных кубитов
    """
    return float(cfg.total_qubits)


def heisenberg_fisher(cfg: ModelConfig) -> float:
    return float(cfg.total_qubits ** 2)


def max_classical_fisher(cfg: ModelConfig, grid_points: int = 2001) -> Tuple[float, float]:
    """
    Лучшая точка считывания: максимум F(ω) на [−π/2, π/2]

    При δ = 1 максимум достигается при ω → 0; при δ < 1 он смещается
    от нуля

    Returns:
        tuple[float, float]: (ω*, F(ω*))
    """
    grid = np.linspace(-math.pi / 2, math.pi / 2, grid_points)
    values = classical_fisher(cfg, grid)
    best = int(np.argmax(values))
    step = grid[1] - grid[0]
    result = minimize_scalar(
        lambda w: -classical_fisher(cfg, w),
        bounds=(grid[best] - step, grid[best] + step),
        method="bounded",
        options={"xatol": 1e-10},
    )
    if -result.fun > values[best]:
        return float(result.x), float(-result.fun)
    return float(grid[best]), float(values[best])
