"""
Плотный симулятор матрицы плотности для полной схемы протокола

Порядок кубитов: [управляющий, n чистых, m частично чистых, l смешанных],
big-endian (управляющий - старший бит индекса). Все вентили схемы либо
диагональны, либо являются перестановкой базиса, либо действуют только на
управляющий кубит, поэтому применяются побитовыми обновлениями без
построения полных матриц
"""
import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Tuple

import numpy as np
from scipy.linalg import eigh, eigvalsh

from src.exceptions import InvalidStateError, SizeCapError
from src.protocol.schemas import ModelConfig, OutcomeDistribution

logger = logging.getLogger(__name__)

MAX_ORACLE_QUBITS = 12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
SPECTRUM_TOL = 1e-10
QFI_PAIR_THRESHOLD = 1e-12

_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)


@dataclass(frozen=True)
class DensityMatrix:
    """
    Матрица плотности из num_qubits кубитов; массив только для чтения
    """
    matrix: np.ndarray
    num_qubits: int = field(init=False)

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        dim = matrix.shape[0]
        if matrix.ndim != 2 or matrix.shape[1] != dim or dim & (dim - 1) or dim < 2:
            raise InvalidStateError(f"Density matrix must be square 2^N x 2^N, got {matrix.shape}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "num_qubits", dim.bit_length() - 1)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def trace_error(self) -> float:
        return float(abs(np.trace(self.matrix) - 1.0))

    def min_eigenvalue(self) -> float:
        return float(eigvalsh(self.matrix)[0])

    def purity(self) -> float:
        """
        tr(ρ²); для эрмитовой ρ равна сумме |ρ_ij|²
        """
        return float(np.sum(np.abs(self.matrix) ** 2))

    def validate(self, spectrum: bool = False) -> "DensityMatrix":
        """
        Проверяет инварианты матрицы плотности

        Args:
            spectrum(bool): дополнительно проверить λ_min ≥ −1e−10
                            (полная диагонализация, дорого на больших размерах)

        Returns:
            DensityMatrix: та же матрица, если проверки пройдены
        """
        if self.hermiticity_error() > HERMITIAN_TOL:
            raise InvalidStateError(f"Matrix is not Hermitian (error {self.hermiticity_error():.3e})")
        if self.trace_error() > TRACE_TOL:
            raise InvalidStateError(f"Trace differs from 1 by {self.trace_error():.3e}")
        if spectrum and self.min_eigenvalue() < -SPECTRUM_TOL:
            raise InvalidStateError(f"Negative eigenvalue {self.min_eigenvalue():.3e}")
        return self

    def blocks(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Блоки по управляющему кубиту: (ρ_00, ρ_01, ρ_11) размера 2^R x 2^R
        """
        half = self.dim // 2
        return (self.matrix[:half, :half],
                self.matrix[:half, half:],
                self.matrix[half:, half:])

    def reduced_control(self) -> np.ndarray:
        a, b, c = self.blocks()
        return np.array([[np.trace(a), np.trace(b)],
                         [np.conj(np.trace(b)), np.trace(c)]])

    def reduced_register(self) -> np.ndarray:
        a, _, c = self.blocks()
        return a + c


@dataclass(frozen=True)
class GeneratorMatrix:
    """
    Генератор G = Σ_x |1⟩⟨1|_x: диагональ - вес Хэмминга индекса базиса
    """
    diagonal: np.ndarray

    @classmethod
    def for_qubits(cls, num_qubits: int) -> "GeneratorMatrix":
        diagonal = hamming_weights(2 ** num_qubits).astype(float)
        diagonal.setflags(write=False)
        return cls(diagonal=diagonal)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diagonal)


@dataclass(frozen=True)
class ProtocolTrace:
    """
    Контрольные точки σ₀…σ₄ одного прогона схемы
    """
    config: ModelConfig
    phi: float
    theta: float
    states: Tuple[DensityMatrix, ...]

    @property
    def probe(self) -> DensityMatrix:
        return self.states[1]

    @property
    def final(self) -> DensityMatrix:
        return self.states[4]


def hamming_weights(dim: int) -> np.ndarray:
    indices = np.arange(dim)
    weights = np.zeros(dim, dtype=np.int64)
    for bit in range(max(dim.bit_length() - 1, 0)):
        weights += (indices >> bit) & 1
    return weights


def _check_cap(cfg: ModelConfig, cap: int = MAX_ORACLE_QUBITS):
    if cfg.total_qubits > cap:
        raise SizeCapError(
            f"Configuration needs {cfg.total_qubits} qubits, the dense cap is {cap}"
        )


def _apply_diagonal(rho: np.ndarray, diagonal: np.ndarray) -> np.ndarray:
    return diagonal[:, None] * rho * np.conj(diagonal)[None, :]


def _apply_bulk_cnot(rho: np.ndarray) -> np.ndarray:
    """
    CNOT от управляющего кубита на каждый кубит регистра - перестановка
    индексов i → i XOR маска_регистра для индексов со старшим битом 1
    """
    dim = rho.shape[0]
    half = dim // 2
    indices = np.arange(dim)
    permutation = np.where(indices >= half, indices ^ (half - 1), indices)
    return rho[np.ix_(permutation, permutation)]


def _apply_control_hadamard(rho: np.ndarray) -> np.ndarray:
    half = rho.shape[0] // 2
    tensor = rho.reshape(2, half, 2, half)
    rotated = np.einsum("ab,bjcl,dc->ajdl", _HADAMARD, tensor, _HADAMARD.conj())
    return rotated.reshape(rho.shape)


def _phase_encoding_diagonal(num_qubits: int, phi: float) -> np.ndarray:
    """
    u_φ = diag(1, e^{iφ}) на каждом кубите: e^{iφ·вес(i)}
    """
    return np.exp(1j * phi * hamming_weights(2 ** num_qubits))


def _readout_diagonal(num_qubits: int, theta: float) -> np.ndarray:
    """
    Контролируемый v_θ = exp(−iθσ_z) на каждом кубите регистра и
    u_θ† = diag(1, e^{−iθ}) на управляющем кубите
    """
    dim = 2 ** num_qubits
    half = dim // 2
    register_size = num_qubits - 1
    register_weight = hamming_weights(half)
    controlled = np.exp(-1j * theta * (register_size - 2 * register_weight))
    control_line = np.exp(-1j * theta)
    return np.concatenate([np.ones(half, dtype=complex), control_line * controlled])


def build_initial_state(cfg: ModelConfig) -> DensityMatrix:
    """
    Начальное состояние σ₀ = ρ_δ ⊗ |0⟩⟨0|^⊗n ⊗ ρ_ε^⊗m ⊗ 𝟙^⊗l/2^l

    Args:
        cfg(ModelConfig): конфигурация с 1+n+m+l ≤ 12

    Returns:
        DensityMatrix: диагональная матрица плотности
    """
    _check_cap(cfg)
    delta = cfg.control_purity
    eps = cfg.epsilon
    factors = ([np.array([(1 + delta) / 2, (1 - delta) / 2])]
               + [np.array([1.0, 0.0])] * cfg.n
               + [np.array([(1 + eps) / 2, (1 - eps) / 2])] * cfg.m
               + [np.array([0.5, 0.5])] * cfg.l)
    diagonal = reduce(np.kron, factors)
    return DensityMatrix(np.diag(diagonal).astype(complex))


def prepare_probe(cfg: ModelConfig) -> DensityMatrix:
    """
    Пробное состояние σ: Адамар на управляющем кубите и первый bulk CNOT
    """
    initial = build_initial_state(cfg)
    rho = _apply_control_hadamard(initial.matrix)
    return DensityMatrix(_apply_bulk_cnot(rho))


def evolve_protocol(cfg: ModelConfig, phi: float, theta: float) -> ProtocolTrace:
    """
    Прогоняет схему и сохраняет все пять контрольных точек

    σ₀ - начальное состояние; σ₁ - после Адамара и CNOT; σ₂ - после
    кодирования фазы u_φ на всех кубитах; σ₃ - после второго CNOT;
    σ₄ - после контролируемого v_θ на регистре и u_θ† на управляющем кубите

    Args:
        cfg(ModelConfig): конфигурация с 1+n+m+l ≤ 12
        phi(float): неизвестная фаза, радианы
        theta(float): настройка считывания θ(r), радианы

    Returns:
        ProtocolTrace: контрольные точки σ₀…σ₄
    """
    initial = build_initial_state(cfg)
    num_qubits = initial.num_qubits
    sigma_1 = _apply_bulk_cnot(_apply_control_hadamard(initial.matrix))
    sigma_2 = _apply_diagonal(sigma_1, _phase_encoding_diagonal(num_qubits, phi))
    sigma_3 = _apply_bulk_cnot(sigma_2)
    sigma_4 = _apply_diagonal(sigma_3, _readout_diagonal(num_qubits, theta))
    states = (initial,) + tuple(DensityMatrix(s) for s in (sigma_1, sigma_2, sigma_3, sigma_4))
    logger.debug("Evolved %d-qubit protocol at phi=%.6f theta=%.6f", num_qubits, phi, theta)
    return ProtocolTrace(config=cfg, phi=phi, theta=theta, states=states)


def measure_control_x(trace: ProtocolTrace) -> OutcomeDistribution:
    """
    Измерение управляющего кубита σ₄ в базисе σ_x: q± = ⟨±|σ₄|±⟩

    Args:
        trace(ProtocolTrace): результат evolve_protocol

    Returns:
        OutcomeDistribution: распределение исходов
    """
    control = trace.final.reduced_control()
    q_plus = 0.5 * np.real(control[0, 0] + control[1, 1]) + np.real(control[0, 1])
    return OutcomeDistribution(q_plus=float(np.clip(q_plus, 0.0, 1.0)))


def qfi_numeric(probe: DensityMatrix, generator: GeneratorMatrix) -> float:
    """
    Квантовая информация Фишера через полную диагонализацию

    F_q = 2 Σ_{i,j} (λ_i−λ_j)²/(λ_i+λ_j) |⟨ψ_i|G|ψ_j⟩|² по парам
    с λ_i+λ_j > 1e−12 (пары двух нулевых собственных значений дают 0)

    Args:
        probe(DensityMatrix): пробное состояние до кодирования фазы
        generator(GeneratorMatrix): генератор сдвига фазы

    Returns:
        float: F_q
    """
    if probe.hermiticity_error() > HERMITIAN_TOL:
        raise InvalidStateError("QFI requires a Hermitian probe state")
    eigenvalues, eigenvectors = eigh(probe.matrix)
    generator_elements = (eigenvectors.conj().T * generator.diagonal) @ eigenvectors
    sums = eigenvalues[:, None] + eigenvalues[None, :]
    differences = eigenvalues[:, None] - eigenvalues[None, :]
    mask = sums > QFI_PAIR_THRESHOLD
    weights = np.zeros_like(sums)
    weights[mask] = differences[mask] ** 2 / sums[mask]
    return float(2.0 * np.sum(weights * np.abs(generator_elements) ** 2))


def partial_transpose(rho: DensityMatrix) -> np.ndarray:
    """
    Частичное транспонирование по управляющему кубиту (разрез
    управляющий | регистр)
    """
    half = rho.dim // 2
    tensor = rho.matrix.reshape(2, half, 2, half)
    return tensor.transpose(2, 1, 0, 3).reshape(rho.dim, rho.dim)
