import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Sequence

from src.exceptions import ConfigurationError, VerificationError
from src.harness.crosscheck import DEFAULT_MAX_QUBITS, DEFAULT_SAMPLES, CrosscheckService
from src.harness.csv_io import write_rows
from src.harness.scans import ScanService, benchmark_rows, omega_grid, trace_rows
from src.protocol.analytic import (
    heisenberg_fisher,
    max_classical_fisher,
    qfi_binomial_sum,
    qfi_closed_form,
    sql_fisher,
)
from src.protocol.estimator import DEFAULT_GRID_SIZE, DEFAULT_SHOTS_PER_ROUND, AdaptiveEstimator
from src.protocol.schemas import ModelConfig
from src.settings.config import get_settings

Handler = Callable[[ModelConfig, argparse.Namespace], int]


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Expected comma-separated numbers, got {text!r}") from exc


OPTIONS: Dict[str, dict] = {
    "phi": dict(type=float, default=0.5, help="истинная (или опорная) фаза φ, радианы"),
    "theta": dict(type=float, default=0.5, help="фиксированная настройка считывания θ, радианы"),
    "omega-min": dict(type=float, default=-math.pi / 2, help="левая граница скана ω"),
    "omega-max": dict(type=float, default=math.pi / 2, help="правая граница скана ω"),
    "steps": dict(type=int, default=401, help="число точек скана"),
    "rounds": dict(type=int, default=50, help="число адаптивных раундов"),
    "shots": dict(type=int, default=DEFAULT_SHOTS_PER_ROUND, help="измерений в раунде"),
    "total-shots": dict(type=int, default=2000, help="бюджет измерений одного испытания"),
    "trials": dict(type=int, default=200, help="число испытаний Монте-Карло"),
    "seed": dict(type=int, default=0, help="зерно генератора PCG64"),
    "grid-size": dict(type=int, default=DEFAULT_GRID_SIZE, help="размер сетки апостериорного распределения"),
    "max-qubits": dict(type=int, default=DEFAULT_MAX_QUBITS, help="наибольшее число кубитов оракула"),
    "samples": dict(type=int, default=DEFAULT_SAMPLES, help="число случайных проверок оракула"),
    "epsilons": dict(type=_float_list, default=[round(0.1 * i, 1) for i in range(11)],
                     help="список значений ε через запятую"),
    "out": dict(type=Path, default=None, help="файл (или каталог для fig3) вывода"),
}


@dataclass
class Command:
    name: str
    handler: Handler
    help: str
    options: Sequence[str] = field(default_factory=tuple)


class CommandRouter:
    """
    Таблица команд CLI: декоратор command регистрирует обработчик и список
    его опций, build_parser собирает argparse-парсер с подкомандами
    """
    def __init__(self):
        self.commands: Dict[str, Command] = {}

    def command(self, name: str, help: str, options: Sequence[str] = ()):
        def register(handler: Handler) -> Handler:
            self.commands[name] = Command(name=name, handler=handler, help=help, options=tuple(options))
            return handler
        return register

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="dqc1-metrology",
            description="Метрология с одним чистым кубитом: модель, оракул, оценка фазы",
        )
        parser.add_argument("--verbose", action="store_true", help="журнал уровня DEBUG")
        subparsers = parser.add_subparsers(dest="command", required=True)
        for command in self.commands.values():
            sub = subparsers.add_parser(command.name, help=command.help)
            sub.add_argument("--n", type=int, default=0, help="чистые кубиты регистра")
            sub.add_argument("--m", type=int, default=0, help="частично чистые кубиты регистра")
            sub.add_argument("--l", type=int, default=0, help="смешанные кубиты регистра")
            sub.add_argument("--epsilon", type=float, default=0.0, help="чистота ε частично чистых кубитов")
            sub.add_argument("--control-purity", type=float, default=1.0, help="поляризация δ управляющего кубита")
            sub.add_argument("--workers", type=int, default=1, help="число потоков")
            for option in command.options:
                sub.add_argument(f"--{option}", **OPTIONS[option])
        return parser

    def dispatch(self, name: str, cfg: ModelConfig, args: argparse.Namespace) -> int:
        return self.commands[name].handler(cfg, args)


router = CommandRouter()


def _print_json(payload: dict):
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


@router.command("qfi", help="квантовая информация Фишера и опорные пределы")
def qfi(cfg: ModelConfig, args: argparse.Namespace) -> int:
    """
    Печатает F_q двумя путями, SQL, предел Гейзенберга, выигрыш F_q/SQL
    и лучшую точку классического считывания
    """
    closed = qfi_closed_form(cfg)
    best_omega, best_fisher = max_classical_fisher(cfg)
    _print_json({
        "config": cfg.model_dump(),
        "qfi_closed_form": closed,
        "qfi_binomial_sum": qfi_binomial_sum(cfg),
        "sql": sql_fisher(cfg),
        "heisenberg": heisenberg_fisher(cfg),
        "advantage": closed / sql_fisher(cfg),
        "best_readout_omega": best_omega,
        "best_classical_fisher": best_fisher,
    })
    return 0


@router.command("fisher-scan", help="классическая информация Фишера по сетке ω",
                options=("omega-min", "omega-max", "steps", "out"))
def fisher_scan(cfg: ModelConfig, args: argparse.Namespace) -> int:
    rows = ScanService(args.workers).fisher_scan(cfg, args.omega_min, args.omega_max, args.steps)
    write_rows(rows, args.out)
    return 0


@router.command("fig3", help="три кривые F(ω) в CSV", options=("out",))
def fig3(cfg: ModelConfig, args: argparse.Namespace) -> int:
    """
    Конфигурации кривых фиксированы; общие флаги конфигурации игнорируются
    """
    out_dir = args.out or get_settings().output_dir
    ScanService(args.workers).fig3(out_dir)
    return 0


@router.command("simulate", help="один прогон адаптивной байесовской оценки",
                options=("phi", "rounds", "shots", "seed", "grid-size", "out"))
def simulate(cfg: ModelConfig, args: argparse.Namespace) -> int:
    estimator = AdaptiveEstimator(grid_size=args.grid_size, shots_per_round=args.shots)
    trace = estimator.run_adaptive(cfg, args.phi, args.rounds, seed=args.seed)
    comments = [f"seed {trace.seed} prng {trace.prng} phi_true {trace.phi_true:.17g}",
                f"posterior_resets {trace.posterior_resets}"]
    write_rows(trace_rows(trace), args.out, comments)
    return 0


@router.command("benchmark", help="СКО ансамбля против границы Крамера-Рао",
                options=("phi", "total-shots", "shots", "trials", "seed", "grid-size", "out"))
def benchmark(cfg: ModelConfig, args: argparse.Namespace) -> int:
    estimator = AdaptiveEstimator(grid_size=args.grid_size, shots_per_round=args.shots, workers=args.workers)
    summary = estimator.crb_benchmark(cfg, args.phi, args.total_shots, args.trials, seed=args.seed)
    comments = [f"seed {args.seed} trials {summary.trials} low_confidence {summary.low_confidence}"]
    write_rows(benchmark_rows(summary), args.out, comments)
    return 0


@router.command("crosscheck", help="перекрёстная проверка модели и оракула",
                options=("max-qubits", "seed", "samples"))
def crosscheck(cfg: ModelConfig, args: argparse.Namespace) -> int:
    report = CrosscheckService().crosscheck(args.max_qubits, args.seed, args.samples)
    _print_json(report.model_dump())
    if report.failures:
        raise VerificationError(f"{report.failures} crosscheck failures")
    return 0


@router.command("discord-scan", help="дискорд σ₄ и дефект эрмитовости по сетке ω",
                options=("phi", "omega-min", "omega-max", "steps", "out"))
def discord_scan(cfg: ModelConfig, args: argparse.Namespace) -> int:
    omegas = omega_grid(args.omega_min, args.omega_max, args.steps)
    rows = ScanService(args.workers).discord_scan(cfg, omegas, phi=args.phi)
    write_rows(rows, args.out)
    return 0


@router.command("negativity-scan", help="негативность пробного состояния по сетке ε",
                options=("epsilons", "out"))
def negativity_scan(cfg: ModelConfig, args: argparse.Namespace) -> int:
    if not args.epsilons:
        raise ConfigurationError("Empty purity grid")
    rows = ScanService(args.workers).negativity_scan(cfg, args.epsilons)
    write_rows(rows, args.out)
    return 0


@router.command("readout-point", help="q±, дискорд и дефект эрмитовости при фиксированных φ и θ",
                options=("phi", "theta"))
def readout_point(cfg: ModelConfig, args: argparse.Namespace) -> int:
    """
    Печатает замкнутую формулу против оракула в одной точке (φ, θ)
    """
    point = ScanService(args.workers).readout_point(cfg, args.phi, args.theta)
    _print_json(point.model_dump())
    return 0
