import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field


class ModelConfig(BaseModel):
    """
    Pydantic-модель вектора ресурсов протокола (n, m, l, ε)

    n - чистые кубиты регистра, m - частично чистые (ρ_ε),
    l - полностью смешанные. control_purity задаёт поляризацию
    управляющего кубита (1 - чистый |0⟩)
    """
    model_config = ConfigDict(frozen=True)

    n: int = Field(0, ge=0)
    m: int = Field(0, ge=0)
    l: int = Field(0, ge=0)
    epsilon: float = Field(0.0, ge=0.0, le=1.0, allow_inf_nan=False)
    control_purity: float = Field(1.0, ge=0.0, le=1.0, allow_inf_nan=False)

    @property
    def register_size(self) -> int:
        return self.n + self.m + self.l

    @property
    def total_qubits(self) -> int:
        return 1 + self.register_size


class Detuning(BaseModel):
    """
    Pydantic-модель расстройки ω = θ(r) − φ, радианы
    """
    model_config = ConfigDict(frozen=True)

    omega: float = Field(allow_inf_nan=False)

    @classmethod
    def from_phases(cls, theta: float, phi: float) -> "Detuning":
        return cls(omega=theta - phi)


class OutcomeDistribution(BaseModel):
    """
    Распределение исходов измерения управляющего кубита в базисе σ_x
    """
    model_config = ConfigDict(frozen=True)

    q_plus: float = Field(ge=0.0, le=1.0)

    @computed_field
    @property
    def q_minus(self) -> float:
        return 1.0 - self.q_plus


class ScanKind(str, Enum):
    classical_fisher = "classical_fisher"
    qfi = "qfi"
    discord = "discord"
    negativity = "negativity"
    mse = "mse"
    hermiticity_defect = "hermiticity_defect"
    phase_free_hermiticity_defect = "phase_free_hermiticity_defect"
    estimate = "estimate"
    circular_variance = "circular_variance"
    theta = "theta"
    crb = "crb"
    ratio = "ratio"


ScanVariable = Literal["omega", "phi", "epsilon", "round", "total_shots"]


class ScanRow(BaseModel):
    """
    Pydantic-модель одной строки скана (единица CSV-вывода)
    """
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=0)
    m: int = Field(ge=0)
    l: int = Field(ge=0)
    epsilon: float = Field(ge=0.0, le=1.0)
    x_variable: ScanVariable
    x_value: float = Field(allow_inf_nan=False)
    kind: ScanKind
    value: float = Field(allow_inf_nan=False)

    @classmethod
    def for_config(cls, cfg: ModelConfig, x_variable: str, x_value: float,
                   kind: ScanKind, value: float) -> "ScanRow":
        return cls(n=cfg.n, m=cfg.m, l=cfg.l, epsilon=cfg.epsilon,
                   x_variable=x_variable, x_value=float(x_value),
                   kind=kind, value=float(value))


class RoundRecord(BaseModel):
    """
    Итог одного раунда адаптивной оценки
    """
    round_index: int = Field(ge=0)
    theta: float
    plus: int = Field(ge=0)
    minus: int = Field(ge=0)
    estimate: float
    circ_variance: float = Field(ge=0.0, le=1.0)


class EstimationTrace(BaseModel):
    """
    Полная история одного прогона адаптивной байесовской оценки фазы
    """
    config: ModelConfig
    phi_true: float
    seed: int
    prng: str = "PCG64"
    rounds: List[RoundRecord] = Field(default_factory=list)
    posterior_resets: int = 0

    @property
    def final_estimate(self) -> float:
        return self.rounds[-1].estimate

    @property
    def final_variance(self) -> float:
        return self.rounds[-1].circ_variance

    @property
    def final_error(self) -> float:
        """
        Ошибка итоговой оценки, приведённая к (−π, π]
        """
        return wrap_phase(self.final_estimate - self.phi_true)


class BenchmarkSummary(BaseModel):
    """
    Сводка сравнения эмпирической СКО с границей Крамера-Рао
    """
    config: ModelConfig
    phi_true: float
    total_shots: int
    trials: int
    qfi: float
    mse: float
    crb: float
    ratio: float
    mean_circ_variance: float
    low_confidence: bool


class ReadoutPoint(BaseModel):
    """
    Протокол при фиксированной настройке считывания θ: распределение
    исходов по замкнутой формуле и по оракулу, информация Фишера и
    корреляции выходного состояния

    Поля oracle_q_plus и negativity пусты при 1+n+m+l > 12,
    discord - при 1+n+m+l > 10
    """
    config: ModelConfig
    phi: float
    theta: float
    omega: float
    visibility: float
    q_plus: float = Field(ge=0.0, le=1.0)
    oracle_q_plus: Optional[float] = None
    classical_fisher: float
    discord: Optional[float] = None
    negativity: Optional[float] = None
    hermiticity_defect: float
    phase_free_hermiticity_defect: float


class CheckResult(BaseModel):
    """
    Результат одного набора перекрёстных проверок
    """
    name: str
    checked: int = 0
    failed: int = 0
    worst_deviation: float = 0.0
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.failed == 0


class CrosscheckReport(BaseModel):
    """
    Отчёт прогона crosscheck: счётчики и худшие отклонения по наборам
    """
    seed: int
    max_qubits: int
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(check.failed for check in self.checks)


class RunManifest(BaseModel):
    """
    Все разрешённые параметры запуска, печатаются в stderr перед выполнением
    """
    command: str
    parameters: Dict[str, Any]


def wrap_phase(angle: float) -> float:
    """
    Приводит угол к интервалу (−π, π]
    """
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped == -math.pi:
        return math.pi
    return wrapped
