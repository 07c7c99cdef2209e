"""
Сканы и воспроизведение кривых информации Фишера: строки ScanRow для
CSV-вывода
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from src.back_tasks import run_parallel
from src.exceptions import ConfigurationError, SizeCapError
from src.harness.csv_io import write_rows
from src.protocol.analytic import classical_fisher, q_plus, qfi_closed_form, visibility
from src.protocol.correlations import (
    MAX_DISCORD_QUBITS,
    discord_control,
    hermiticity_defect,
    negativity,
    phase_free_hermiticity_defect,
)
from src.protocol.oracle import MAX_ORACLE_QUBITS, evolve_protocol, measure_control_x, prepare_probe
from src.protocol.schemas import (
    BenchmarkSummary,
    Detuning,
    EstimationTrace,
    ModelConfig,
    ReadoutPoint,
    ScanKind,
    ScanRow,
)

logger = logging.getLogger(__name__)

FIG3_POINTS = 401
FIG3_RANGE = (-math.pi / 2, math.pi / 2)
FIG3_CURVES: Dict[str, ModelConfig] = {
    "dotted": ModelConfig(n=6),
    "dashed": ModelConfig(m=11, epsilon=0.49),
    "solid": ModelConfig(l=48),
}
PPT_TOL = 1e-10


def sort_rows(rows: Sequence[ScanRow]) -> List[ScanRow]:
    """
    Детерминированный порядок вывода: по значению переменной скана, затем по kind
    """
    return sorted(rows, key=lambda row: (row.x_value, row.kind.value))


def omega_grid(omega_min: float, omega_max: float, steps: int) -> np.ndarray:
    if steps < 2:
        raise ConfigurationError(f"Scan needs at least 2 steps, got {steps}")
    if not (math.isfinite(omega_min) and math.isfinite(omega_max)) or omega_min >= omega_max:
        raise ConfigurationError(f"Invalid scan range [{omega_min}, {omega_max}]")
    return np.linspace(omega_min, omega_max, steps)


def equal_qfi_epsilon(cfg: ModelConfig, target: float) -> float:
    """
    Значение ε, при котором F_q(cfg) совпадает с target; NaN, если такого
    ε в [0, 1] нет
    """
    def gap(eps: float) -> float:
        return qfi_closed_form(cfg.model_copy(update={"epsilon": eps})) - target

    if gap(0.0) * gap(1.0) > 0.0:
        return math.nan
    return float(brentq(gap, 0.0, 1.0, xtol=1e-12))


class ScanService:
    """
    Сервис сканов: классическая информация Фишера, дискорд, негативность,
    ряды строк для адаптивной оценки
    """
    def __init__(self, workers: int = 1):
        self.workers = workers


    def fisher_scan(self, cfg: ModelConfig, omega_min: float, omega_max: float,
                    steps: int, include_qfi: bool = True) -> List[ScanRow]:
        """
        Классическая информация Фишера на равномерной сетке ω

        Args:
            cfg(ModelConfig): конфигурация протокола
            omega_min(float): левая граница, радианы
            omega_max(float): правая граница, радианы
            steps(int): число точек, ≥ 2
            include_qfi(bool): добавить строку kind=qfi при ω = 0

        Returns:
            List[ScanRow]: строки, упорядоченные по ω
        """
        omegas = omega_grid(omega_min, omega_max, steps)
        values = classical_fisher(cfg, omegas)
        rows = [ScanRow.for_config(cfg, "omega", w, ScanKind.classical_fisher, v)
                for w, v in zip(omegas, values)]
        if include_qfi:
            rows.append(ScanRow.for_config(cfg, "omega", 0.0, ScanKind.qfi, qfi_closed_form(cfg)))
        return sort_rows(rows)


    def fig3_curves(self) -> Dict[str, Tuple[List[ScanRow], List[str]]]:
        """
        Три кривые F(ω) на [−π/2, π/2] по 401 точке и комментарии к ним

        Комментарии содержат диапазон ω, опорное F_q и расхождение значений
        F_q между конфигурациями

        Returns:
            Dict: имя кривой -> (строки, комментарии)
        """
        qfis = {name: qfi_closed_form(cfg) for name, cfg in FIG3_CURVES.items()}
        reference = qfis["dotted"]
        spread = (max(qfis.values()) - min(qfis.values())) / reference
        if spread > 1e-12:
            logger.warning("Reference curves do not share one QFI value: %s (relative spread %.3e)",
                           {name: round(value, 6) for name, value in qfis.items()}, spread)

        curves = {}
        for name, cfg in FIG3_CURVES.items():
            rows = self.fisher_scan(cfg, FIG3_RANGE[0], FIG3_RANGE[1], FIG3_POINTS, include_qfi=False)
            comments = [
                f"curve {name}: n={cfg.n} m={cfg.m} l={cfg.l} epsilon={cfg.epsilon:g}",
                f"omega range [-pi/2, pi/2] with {FIG3_POINTS} points",
                f"qfi_closed_form {qfis[name]:.17g}",
            ]
            if abs(qfis[name] - reference) > 1e-12 * reference:
                matching = equal_qfi_epsilon(cfg, reference)
                comments.append(
                    f"qfi discrepancy: {qfis[name]:.6f} vs {reference:.6f} for the other curves "
                    f"(relative {abs(qfis[name] - reference) / reference:.3e}); "
                    f"equal qfi needs epsilon {matching:.6f}"
                )
            curves[name] = (rows, comments)
        return curves


    def fig3(self, out_dir: Path) -> Dict[str, Path]:
        """
        Записывает три CSV-файла кривых в out_dir

        Args:
            out_dir(Path): каталог вывода (создаётся при необходимости)

        Returns:
            Dict[str, Path]: имя кривой -> путь файла
        """
        return {
            name: write_rows(rows, out_dir / f"fig3_{name}.csv", comments)
            for name, (rows, comments) in self.fig3_curves().items()
        }


    def _discord_point(self, cfg: ModelConfig, phi: float, omega: float) -> List[ScanRow]:
        theta = phi + omega
        final = evolve_protocol(cfg, phi, theta).final
        discord = discord_control(final)
        defect = hermiticity_defect(cfg, phi, theta)
        phase_free = phase_free_hermiticity_defect(cfg, phi, theta)
        if cfg.n + cfg.m > 0:
            violation = negativity(final)
            if violation > PPT_TOL:
                logger.warning("Output state has negative partial transpose (%.3e) for %s at omega=%.6f",
                               violation, cfg, omega)
        return [
            ScanRow.for_config(cfg, "omega", omega, ScanKind.discord, discord),
            ScanRow.for_config(cfg, "omega", omega, ScanKind.hermiticity_defect, defect),
            ScanRow.for_config(cfg, "omega", omega, ScanKind.phase_free_hermiticity_defect, phase_free),
        ]


    def discord_scan(self, cfg: ModelConfig, omegas: Sequence[float], phi: float = 0.0) -> List[ScanRow]:
        """
        Дискорд выходного состояния σ₄ и дефекты эрмитовости U_ω по сетке ω

        Для конфигураций с n + m > 0 нарушение PPT у σ₄ записывается в журнал
        как находка, а не как ошибка

        Args:
            cfg(ModelConfig): конфигурация с 1+n+m+l ≤ 10
            omegas(Sequence[float]): точки ω = θ − φ
            phi(float): фаза, при которой строится σ₄

        Returns:
            List[ScanRow]: по три строки (discord, hermiticity_defect,
            phase_free_hermiticity_defect) на точку
        """
        if cfg.total_qubits > MAX_DISCORD_QUBITS:
            raise SizeCapError(
                f"Configuration needs {cfg.total_qubits} qubits, discord is capped at {MAX_DISCORD_QUBITS}"
            )
        points = run_parallel(lambda w: self._discord_point(cfg, phi, float(w)),
                              list(omegas), workers=self.workers)
        return sort_rows([row for point in points for row in point])


    def readout_point(self, cfg: ModelConfig, phi: float, theta: float) -> ReadoutPoint:
        """
        Одна точка протокола при фиксированной настройке считывания θ

        Замкнутая формула считается всегда; оракул (q± и негативность σ₄)
        только при 1+n+m+l ≤ 12, дискорд только при 1+n+m+l ≤ 10

        Args:
            cfg(ModelConfig): конфигурация протокола
            phi(float): фаза, радианы
            theta(float): настройка считывания, радианы

        Returns:
            ReadoutPoint: аналитические и оракульные величины в точке (φ, θ)
        """
        omega = Detuning.from_phases(theta, phi).omega
        point = ReadoutPoint(
            config=cfg,
            phi=phi,
            theta=theta,
            omega=omega,
            visibility=float(visibility(cfg, omega)),
            q_plus=float(q_plus(cfg, omega)),
            classical_fisher=float(classical_fisher(cfg, omega)),
            hermiticity_defect=hermiticity_defect(cfg, phi, theta),
            phase_free_hermiticity_defect=phase_free_hermiticity_defect(cfg, phi, theta),
        )
        if cfg.total_qubits > MAX_ORACLE_QUBITS:
            logger.info("Skipping oracle for %d qubits (cap %d)", cfg.total_qubits, MAX_ORACLE_QUBITS)
            return point
        trace = evolve_protocol(cfg, phi, theta)
        point.oracle_q_plus = measure_control_x(trace).q_plus
        point.negativity = negativity(trace.final)
        if cfg.total_qubits <= MAX_DISCORD_QUBITS:
            point.discord = discord_control(trace.final)
        return point


    def negativity_scan(self, cfg: ModelConfig, epsilons: Sequence[float]) -> List[ScanRow]:
        """
        Негативность пробного состояния по сетке ε
        """
        bad = [eps for eps in epsilons if not 0.0 <= eps <= 1.0]
        if bad:
            raise ConfigurationError(f"Purity values outside [0, 1]: {bad}")

        def point(eps: float) -> ScanRow:
            shifted = cfg.model_copy(update={"epsilon": float(eps)})
            value = negativity(prepare_probe(shifted))
            return ScanRow.for_config(shifted, "epsilon", eps, ScanKind.negativity, value)

        return sort_rows(run_parallel(point, list(epsilons), workers=self.workers))


def trace_rows(trace: EstimationTrace) -> List[ScanRow]:
    """
    Строки истории адаптивного прогона: θ(r), оценка и круговая дисперсия
    по раундам
    """
    rows = []
    for record in trace.rounds:
        rows.extend([
            ScanRow.for_config(trace.config, "round", record.round_index, ScanKind.theta, record.theta),
            ScanRow.for_config(trace.config, "round", record.round_index, ScanKind.estimate, record.estimate),
            ScanRow.for_config(trace.config, "round", record.round_index,
                               ScanKind.circular_variance, record.circ_variance),
        ])
    return sort_rows(rows)


def benchmark_rows(summary: BenchmarkSummary) -> List[ScanRow]:
    values = {
        ScanKind.mse: summary.mse,
        ScanKind.crb: summary.crb,
        ScanKind.ratio: summary.ratio,
        ScanKind.qfi: summary.qfi,
        ScanKind.circular_variance: summary.mean_circ_variance,
    }
    return sort_rows([
        ScanRow.for_config(summary.config, "total_shots", summary.total_shots, kind, value)
        for kind, value in values.items()
    ])

