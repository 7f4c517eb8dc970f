"""
Оркестратор прогона: конфигурация → квадратура ядра → начальные данные →
шаги по времени. Результаты передаются подписчикам через события.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, List, Optional, Union

from shellnls.core.config import RunConfig, _validate_config_integrity, load_config
from shellnls.core.domain import InitialData, assemble_initial_state, build_regular_part
from shellnls.core.events import (
    BaseEvent,
    EarlyStopEvent,
    ErrorOccurredEvent,
    RunFinishedEvent,
    RunStartedEvent,
    StepCompletedEvent,
)
from shellnls.core.kernels import (
    KernelQuadrature,
    bound_state_lambda,
    build_kernel_quadrature,
    local_existence_time,
)
from shellnls.core.profiles import create_profile
from shellnls.core.propagator import SolverConfig, run
from shellnls.core.sphgrid import sobolev_norm
from shellnls.core.state import DiagnosticsRecord, SolverState, Trajectory
from shellnls.logging_config import get_logger

logger = get_logger(__name__)


class Simulation:
    """
    Прогон одного сценария.

    Отвечает за:
    - Загрузку и проверку конфигурации
    - Построение квадратуры ядра и начальных данных
    - Шаги по времени и публикацию событий
    """

    def __init__(self, config: Union[RunConfig, str, Path], kernel: Optional[KernelQuadrature] = None):
        """
        Args:
            config: Готовая конфигурация или путь к файлу
            kernel: Заранее построенная квадратура ядра (иначе строится по конфигурации)

        Raises:
            FileNotFoundError: файл конфигурации не найден
            ConfigError: ошибки конфигурации
            ConvergenceError: квадратура ядра или начальные данные не построены
        """
        logger.info("Инициализация Simulation")
        self._config_source = config
        self._event_subscribers: List[Callable[[BaseEvent], None]] = []
        self.config: RunConfig
        self.kernel: Optional[KernelQuadrature] = kernel
        self.data: InitialData

        self._load_config()
        _validate_config_integrity(self.config, {})
        self._build_initial_data()

    def subscribe_to_events(self, callback: Callable[[BaseEvent], None]) -> None:
        if callback not in self._event_subscribers:
            self._event_subscribers.append(callback)

    def unsubscribe_from_events(self, callback: Callable[[BaseEvent], None]) -> None:
        if callback in self._event_subscribers:
            self._event_subscribers.remove(callback)

    def _publish_event(self, event: BaseEvent) -> None:
        logger.debug(f"Публикация события: {type(event).__name__}")
        for callback in self._event_subscribers:
            try:
                callback(event)
            except Exception as e:
                logger.error(f"Ошибка в подписчике {callback}: {e}", exc_info=True)

    def _load_config(self) -> None:
        if isinstance(self._config_source, RunConfig):
            self.config = self._config_source
        else:
            self.config = load_config(self._config_source)

    def _build_initial_data(self) -> None:
        """Квадратура ядра, регулярная часть из профилей и совместность следа."""
        cfg = self.config
        if self.kernel is None:
            self.kernel = build_kernel_quadrature(cfg.L, tau_min=cfg.dt, T_horizon=cfg.T, tol=cfg.kernel_tol)
        profiles = [create_profile(params, cfg.profile_context) for params in cfg.profiles]
        phi0 = build_regular_part(profiles, cfg.L, self.kernel.grid)
        self.data = assemble_initial_state(phi0, cfg.beta, cfg.sigma, cfg.lambda0, cfg.alpha)
        logger.info(
            f"Начальные данные построены: {len(profiles)} профилей, "
            f"узлов частотной сетки {self.kernel.grid.size}"
        )

    @property
    def solver_config(self) -> SolverConfig:
        cfg = self.config
        return SolverConfig(
            dt=cfg.dt, T=cfg.T, L=cfg.L, kernel=self.kernel,
            picard_tol=cfg.picard_tol, picard_max=cfg.picard_max, method=cfg.method,
        )

    def header(self) -> dict:
        """Заголовок результатов: конфигурация и параметры построенных данных."""
        data = self.data
        header = {
            "config": self.config.to_dict(),
            "lambda": data.lam,
            "trace_iterations": data.iterations,
            "trace_residual": data.trace_residual(),
            "kernel": {
                "k_max": self.kernel.k_max,
                "nodes": self.kernel.grid.size,
                "achieved": self.kernel.achieved,
                "tol": self.kernel.tol,
            },
        }
        q0_norm = sobolev_norm(data.q0, 1.5)
        if not data.is_linear and q0_norm > 0:
            header["local_existence_time"] = local_existence_time(q0_norm, data.sigma)
        if data.is_linear and data.alpha < -1.0:
            header["bound_state_lambda"] = bound_state_lambda(data.alpha, 0)
        return header

    def run(self) -> Trajectory:
        """
        Прогон до T. Досрочная остановка не считается ошибкой: возвращается
        частичная траектория с early_stop=True.

        Raises:
            Exception: любая внутренняя ошибка (после публикации ErrorOccurredEvent)
        """
        cfg = self.config
        stride = cfg.snapshot_stride
        self._publish_event(RunStartedEvent(config=cfg, header=self.header()))

        def on_step(state: SolverState, record: Optional[DiagnosticsRecord]) -> None:
            snapshot = state.q.copy() if stride and state.n % stride == 0 else None
            self._publish_event(StepCompletedEvent(record=record, snapshot=snapshot))

        try:
            trajectory = run(self.data, self.solver_config, on_step, cfg.monitor_factor)
        except Exception as e:
            logger.error(f"Ошибка прогона сценария {cfg.scenario}: {e}", exc_info=True)
            self._publish_event(ErrorOccurredEvent(
                title="Ошибка прогона",
                message=f"Сценарий {cfg.scenario}: {e}",
            ))
            raise

        if trajectory.early_stop:
            self._publish_event(EarlyStopEvent(
                step=trajectory.stop_step,
                t=trajectory.stop_step * cfg.dt,
                reason=trajectory.stop_reason,
                ratio=trajectory.stop_ratio,
            ))
        self._publish_event(RunFinishedEvent(trajectory=trajectory))
        return trajectory
