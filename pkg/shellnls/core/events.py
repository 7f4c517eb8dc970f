"""
События прогона, на которые подписываются писатели результатов и отчёты.
"""

from __future__ import annotations

from abc import ABC
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Optional

if TYPE_CHECKING:
    from .sphgrid import ChargeSpectrum
    from .state import DiagnosticsRecord, Trajectory


@dataclass
class BaseEvent(ABC):
    """Базовый класс для всех событий прогона."""
    pass


@dataclass
class RunStartedEvent(BaseEvent):
    """
    Начало прогона.
    header содержит полную разрешённую конфигурацию и параметры данных.
    """
    config: Any = None
    header: dict = field(default_factory=dict)


@dataclass
class StepCompletedEvent(BaseEvent):
    """Принят очередной шаг; snapshot задан только на шагах записи снимков."""
    record: 'DiagnosticsRecord'
    snapshot: Optional['ChargeSpectrum'] = None


@dataclass
class EarlyStopEvent(BaseEvent):
    """Досрочная остановка: итерации Пикара перестали сжимать."""
    step: int
    t: float
    reason: str
    ratio: float


@dataclass
class RunFinishedEvent(BaseEvent):
    """Прогон завершён (полностью или досрочно)."""
    trajectory: 'Trajectory'


@dataclass
class ErrorOccurredEvent(BaseEvent):
    """
    Внутренняя ошибка прогона.
    Публикуется перед повторным возбуждением исключения.
    """
    title: str
    message: str
