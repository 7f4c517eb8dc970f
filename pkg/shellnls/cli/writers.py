"""
Запись результатов прогона: JSONL диагностики и CSV снимков заряда.
Писатели подписываются на события Simulation.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Optional, TextIO

from shellnls.core.events import (
    BaseEvent,
    EarlyStopEvent,
    RunFinishedEvent,
    RunStartedEvent,
    StepCompletedEvent,
)
from shellnls.core.sphgrid import ChargeSpectrum, mode_ells, mode_ms
from shellnls.logging_config import get_logger

logger = get_logger(__name__)


def _clean(value: Any) -> Any:
    """NaN и бесконечности → null; numpy-скаляры → встроенные типы."""
    if isinstance(value, dict):
        return {key: _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item) for item in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, complex):
        return [_clean(value.real), _clean(value.imag)]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def dumps_record(payload: dict) -> str:
    """Детерминированная строка JSON (кратчайшее точное представление float)."""
    return json.dumps(_clean(payload), ensure_ascii=False, allow_nan=False, separators=(", ", ": "))


class DiagnosticsWriter:
    """
    JSONL: строка заголовка {"header": ...}, по строке на шаг с ключами
    DiagnosticsRecord и завершающая строка {"trailer": ...}.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._file: Optional[TextIO] = None
        self._early_stop: Optional[EarlyStopEvent] = None
        self._count = 0

    def __call__(self, event: BaseEvent) -> None:
        if isinstance(event, RunStartedEvent):
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._file = open(self.path, "w", encoding="utf-8")
            self._write({"header": event.header})
            logger.info(f"Диагностика записывается в {self.path}")
        elif isinstance(event, StepCompletedEvent) and event.record is not None:
            self._write(event.record.to_dict())
            self._count += 1
        elif isinstance(event, EarlyStopEvent):
            self._early_stop = event
        elif isinstance(event, RunFinishedEvent):
            trailer = {"records": self._count, "early_stop": event.trajectory.early_stop}
            if self._early_stop is not None:
                trailer.update(
                    stop_step=self._early_stop.step,
                    stop_t=self._early_stop.t,
                    stop_ratio=self._early_stop.ratio,
                    reason=self._early_stop.reason,
                )
            self._write({"trailer": trailer})
            self.close()

    def _write(self, payload: dict) -> None:
        if self._file is None:
            return
        self._file.write(dumps_record(payload) + "\n")
        self._file.flush()

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None


def snapshot_path(base: str | Path, step: int) -> Path:
    """snap.csv → snap_000010.csv для шага 10."""
    base = Path(base)
    return base.with_name(f"{base.stem}_{step:06d}{base.suffix or '.csv'}")


def write_spectrum_csv(path: str | Path, spec: ChargeSpectrum) -> None:
    """CSV с колонками ell,m,re,im."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as file:
        writer = csv.writer(file)
        writer.writerow(["ell", "m", "re", "im"])
        for ell, m, value in zip(mode_ells(spec.L), mode_ms(spec.L), spec.coef):
            writer.writerow([int(ell), int(m), repr(float(value.real)), repr(float(value.imag))])


class SnapshotWriter:
    """Снимки заряда на шагах, кратных snapshot_stride."""

    def __init__(self, base_path: str | Path):
        self.base_path = Path(base_path)
        self.written = []

    def __call__(self, event: BaseEvent) -> None:
        if isinstance(event, StepCompletedEvent) and event.snapshot is not None and event.record is not None:
            path = snapshot_path(self.base_path, event.record.step)
            write_spectrum_csv(path, event.snapshot)
            self.written.append(path)
        elif isinstance(event, RunFinishedEvent) and self.written:
            logger.info(f"Записано снимков заряда: {len(self.written)} ({self.base_path.parent})")
