"""
Точка входа командной строки.

    python -m shellnls.cli run <config> [--dt DT] [--T T] [--L L]
    python -m shellnls.cli verify [--full]
    python -m shellnls.cli print-config <config>

Коды завершения: 0: успех, 1: ошибка, 2: досрочная остановка.
"""

from __future__ import annotations

import argparse
from typing import List, Optional

from rich.console import Console
from rich.markup import escape

from shellnls.cli.verify import verify
from shellnls.cli.writers import DiagnosticsWriter, SnapshotWriter
from shellnls.core.application import Simulation
from shellnls.core.config import RunConfig, load_config
from shellnls.core.errors import ShellNLSError
from shellnls.logging_config import init_console_logging, init_core_logging, get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EARLY_STOP = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shellnls",
        description="Уравнение Шрёдингера с нелинейностью на единичной сфере",
    )
    parser.add_argument("--verbose", action="store_true", help="Дублировать журнал в консоль")
    parser.add_argument("--log-file", default=None, help="Файл журнала (по умолчанию shellnls.log)")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Прогон сценария")
    run_parser.add_argument("config", help="Файл конфигурации")
    run_parser.add_argument("--dt", type=float, default=None, help="Переопределить шаг")
    run_parser.add_argument("--T", type=float, default=None, help="Переопределить горизонт")
    run_parser.add_argument("--L", type=int, default=None, help="Переопределить полосу")

    verify_parser = commands.add_parser("verify", help="Проверки против эталонов")
    verify_parser.add_argument("--full", action="store_true", help="Включить прогоны и сходимость по dt")
    verify_parser.add_argument("--seed", type=int, default=0, help="Зерно генератора")

    print_parser = commands.add_parser("print-config", help="Разрешённая конфигурация")
    print_parser.add_argument("config", help="Файл конфигурации")
    return parser


def run_scenario(config: RunConfig, console: Optional[Console] = None) -> int:
    """
    Прогон с записью JSONL диагностики и CSV снимков.

    Returns:
        EXIT_OK или EXIT_EARLY_STOP
    """
    console = console or Console()
    simulation = Simulation(config)
    diagnostics = DiagnosticsWriter(config.diagnostics_path)
    simulation.subscribe_to_events(diagnostics)
    if config.snapshots_path and config.snapshot_stride > 0:
        simulation.subscribe_to_events(SnapshotWriter(config.snapshots_path))
    try:
        trajectory = simulation.run()
    finally:
        diagnostics.close()

    if trajectory.early_stop:
        console.print(
            f"[yellow]Досрочная остановка на шаге {trajectory.stop_step}: "
            f"отношение сжатия {trajectory.stop_ratio:.3f}[/yellow]"
        )
        return EXIT_EARLY_STOP
    last = trajectory.records[-1]
    console.print(
        f"[green]Готово[/green]: {len(trajectory.records)} записей, t={last.t:.4g}, "
        f"масса {last.mass:.10g}, энергия {last.energy:.10g} → {config.diagnostics_path}"
    )
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        init_console_logging(log_file=args.log_file)
    else:
        init_core_logging(log_file=args.log_file)
    console = Console()

    try:
        if args.command == "verify":
            return verify("full" if args.full else "fast", args.seed, console)
        config = load_config(args.config)
        for warning in config.warnings:
            console.print(f"[yellow]Предупреждение:[/yellow] {escape(warning)}")
        if args.command == "print-config":
            console.print(config.to_text(), markup=False, highlight=False)
            return EXIT_OK
        config = config.with_overrides(dt=args.dt, T=args.T, L=args.L)
        return run_scenario(config, console)
    except (ShellNLSError, FileNotFoundError, OSError) as e:
        logger.error(f"Ошибка: {e}", exc_info=True)
        console.print(f"[red]Ошибка:[/red] {escape(str(e))}", highlight=False)
        return EXIT_ERROR
