"""
Корреляции состояний протокола: негативность, дискорд при измерении
управляющего кубита, классическая коррелированность и критерий
эрмитовости U_ω
"""
import logging
import math
from functools import reduce
from typing import Tuple

import numpy as np
from scipy.linalg import eigvalsh
from scipy.optimize import minimize
from scipy.special import entr

from src.back_tasks import run_parallel
from src.exceptions import SizeCapError
from src.protocol.oracle import DensityMatrix, partial_transpose
from src.protocol.schemas import ModelConfig

logger = logging.getLogger(__name__)

MAX_DISCORD_QUBITS = 10
DISCORD_GRID = 64
REFINE_TOL = 1e-8
DISCORD_CLAMP = 1e-9

_LN2 = math.log(2.0)
_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def _check_cap(rho: DensityMatrix):
    if rho.num_qubits > MAX_DISCORD_QUBITS:
        raise SizeCapError(
            f"State has {rho.num_qubits} qubits, correlation measures are capped at {MAX_DISCORD_QUBITS}"
        )


def _entropy_of_spectrum(eigenvalues: np.ndarray) -> np.ndarray:
    """
    −Σ λ log₂ λ по последней оси (биты)
    """
    return np.sum(entr(np.clip(eigenvalues, 0.0, None)), axis=-1) / _LN2


def von_neumann_entropy(matrix: np.ndarray) -> float:
    return float(_entropy_of_spectrum(eigvalsh(matrix)))


def negativity(rho: DensityMatrix) -> float:
    """
    Негативность по разрезу управляющий | регистр: (‖ρ^{T_c}‖₁ − 1)/2

    Args:
        rho(DensityMatrix): корректная матрица плотности

    Returns:
        float: сумма модулей отрицательных собственных значений ρ^{T_c}
    """
    eigenvalues = eigvalsh(partial_transpose(rho))
    return float(-np.sum(eigenvalues[eigenvalues < 0.0]))


class _ConditionalEntropy:
    """
    Σ_k p_k S(ρ_рег|k) для проективного измерения управляющего кубита
    в базисе {|ψ⟩, |ψ⊥⟩}, |ψ⟩ = cos(t/2)|0⟩ + e^{ip} sin(t/2)|1⟩
    """
    def __init__(self, rho: DensityMatrix):
        self.top, self.coherence, self.bottom = (np.asarray(b) for b in rho.blocks())
        self.register = self.top + self.bottom

    def _projected(self, polar: float, azimuths: np.ndarray) -> np.ndarray:
        c = math.cos(polar / 2.0)
        s = math.sin(polar / 2.0)
        phases = np.exp(1j * azimuths)[:, None, None]
        cross = phases * self.coherence + np.conj(phases) * self.coherence.conj().T
        return c * c * self.top + s * s * self.bottom + c * s * cross

    @staticmethod
    def _weighted_entropy(blocks: np.ndarray) -> np.ndarray:
        # p·S(M/p) = −Σ μ log μ + p log p
        eigenvalues = np.linalg.eigvalsh(blocks)
        weights = np.clip(eigenvalues, 0.0, None).sum(axis=-1)
        return _entropy_of_spectrum(eigenvalues) - entr(weights) / _LN2

    def row(self, polar: float, azimuths: np.ndarray) -> np.ndarray:
        projected = self._projected(polar, azimuths)
        complement = self.register[None, :, :] - projected
        return self._weighted_entropy(projected) + self._weighted_entropy(complement)

    def __call__(self, angles: np.ndarray) -> float:
        polar, azimuth = angles
        return float(self.row(polar, np.array([azimuth]))[0])


def _minimise_conditional_entropy(rho: DensityMatrix, workers: int = 1) -> Tuple[float, np.ndarray]:
    """
    Минимум условной энтропии по сфере Блоха: сетка 64x64 по (t, p),
    затем Нелдер-Мид из лучшей точки сетки

    При равенстве значений выигрывает меньший полярный, затем меньший
    азимутальный угол (первый минимум в построчном обходе)
    """
    objective = _ConditionalEntropy(rho)
    polar = math.pi * np.arange(DISCORD_GRID) / DISCORD_GRID
    azimuth = 2.0 * math.pi * np.arange(DISCORD_GRID) / DISCORD_GRID
    rows = run_parallel(lambda t: objective.row(t, azimuth), list(polar), workers=workers)
    grid = np.vstack(rows)
    best = np.unravel_index(int(np.argmin(grid)), grid.shape)
    start = np.array([polar[best[0]], azimuth[best[1]]])
    best_value = float(grid[best])

    refined = minimize(objective, start, method="Nelder-Mead",
                       options={"xatol": REFINE_TOL, "fatol": 1e-14})
    if refined.fun < best_value:
        return float(refined.fun), refined.x
    return best_value, start


def discord_control(rho: DensityMatrix, workers: int = 1) -> float:
    """
    Дискорд Оливье-Зурека при проективном измерении управляющего кубита

    D = S(ρ_упр) − S(ρ) + min Σ_k p_k S(ρ_рег|k), энтропии в битах

    Args:
        rho(DensityMatrix): состояние из не более чем 10 кубитов
        workers(int): число потоков для строк сетки

    Returns:
        float: D ≥ 0 (шум порядка −1e−9 обрезается до нуля)
    """
    _check_cap(rho)
    control_entropy = von_neumann_entropy(rho.reduced_control())
    joint_entropy = von_neumann_entropy(rho.matrix)
    conditional, angles = _minimise_conditional_entropy(rho, workers=workers)
    discord = control_entropy - joint_entropy + conditional
    if discord < -DISCORD_CLAMP:
        logger.warning("Discord evaluated to %.3e below the clamp; returning 0", discord)
    logger.debug("Discord %.3e at measurement angles %s", discord, angles)
    return max(discord, 0.0)


def _rotate_to_x_basis(rho: DensityMatrix) -> np.ndarray:
    hadamards = reduce(np.kron, [_HADAMARD] * rho.num_qubits)
    return hadamards @ rho.matrix @ hadamards


def is_classically_correlated(rho: DensityMatrix, tol: float = 1e-6) -> bool:
    """
    Проверка полной классической коррелированности

    Состояние должно быть диагональным в произведении собственных базисов
    σ_x (проверка поэлементно после Адамара на каждом кубите) и иметь
    нулевой дискорд при измерении управляющего кубита

    Args:
        rho(DensityMatrix): состояние из не более чем 10 кубитов
        tol(float): допуск на внедиагональные элементы и дискорд

    Returns:
        bool: True, если состояние классически коррелировано
    """
    _check_cap(rho)
    rotated = _rotate_to_x_basis(rho)
    off_diagonal = rotated - np.diag(np.diag(rotated))
    if np.max(np.abs(off_diagonal)) > tol:
        return False
    return discord_control(rho) <= tol


def bulk_factor(phi: float, theta: float) -> np.ndarray:
    """
    Однокубитный множитель w = u_φ† v_θ σ_x u_φ σ_x оператора U_ω = w^⊗(n+m+l)
    """
    u = np.diag([1.0, np.exp(1j * phi)])
    v = np.diag([np.exp(-1j * theta), np.exp(1j * theta)])
    return u.conj().T @ v @ _SIGMA_X @ u @ _SIGMA_X


def hermiticity_defect(cfg: ModelConfig, phi: float, theta: float) -> float:
    """
    max|w − w†| для множителя w; ноль, когда U_ω эрмитов

    Пустой регистр (n = m = l = 0) даёт U_ω = 𝟙 и нулевой дефект

    Args:
        cfg(ModelConfig): конфигурация протокола
        phi(float): фаза, радианы
        theta(float): настройка считывания, радианы

    Returns:
        float: дефект эрмитовости ≥ 0
    """
    if cfg.register_size == 0:
        return 0.0
    w = bulk_factor(phi, theta)
    return float(np.max(np.abs(w - w.conj().T)))


def phase_free_hermiticity_defect(cfg: ModelConfig, phi: float, theta: float) -> float:
    """
    Дефект эрмитовости с точностью до глобальной фазы: max|w² − (tr w²/2)𝟙|

    Глобальная фаза U в контролируемом вентиле - локальный поворот
    управляющего кубита, поэтому дискорд выхода обращается в ноль ровно
    там, где этот дефект нулевой (ω ≡ 0 mod π/2)
    """
    if cfg.register_size == 0:
        return 0.0
    w = bulk_factor(phi, theta)
    square = w @ w
    return float(np.max(np.abs(square - 0.5 * np.trace(square) * np.eye(2))))
