"""
Состояние решателя уравнения для заряда и записи траектории.
SolverState хранит память оператора Λ: историю ν(q) (прямой метод) и
фазовые аккумуляторы H (частотный метод).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from shellnls.core.sphgrid import ChargeSpectrum


@dataclass
class DiagnosticsRecord:
    """
    Диагностика одного шага. Ключи JSONL совпадают с именами полей.

    Attributes:
        t: Время
        step: Номер шага
        mass: ‖ψ‖² в L²(ℝ³)
        kinetic: ‖∇ψ‖² в L²(ℝ³)
        potential: (β/(σ+1))‖q‖^{2σ+2} в L^{2σ+2}(S²)
        energy: kinetic + potential
        q_h32: ‖q‖ в H^{3/2}(S²)
        q_sup: ‖q‖ в L^∞ (по сетке)
        jump_residual: Невязка условия скачка нормальной производной
        trace_residual: Расхождение следа реконструкции с q
        picard_ratio: Первое отношение сжатия итераций Пикара
        picard_iterations: Число итераций Пикара
        dual_path_gap: max |Λ_direct − Λ_freq| (NaN вне режима both)
        flag_growth: Рост ‖q‖_{H^{3/2}} выше порога монитора
    """
    t: float
    step: int
    mass: float
    kinetic: float
    potential: float
    energy: float
    q_h32: float
    q_sup: float
    jump_residual: float
    trace_residual: float
    picard_ratio: float = 0.0
    picard_iterations: int = 0
    dual_path_gap: float = math.nan
    flag_growth: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolverState:
    """
    Состояние на шаге n.

    Attributes:
        n: Номер шага
        dt: Шаг по времени
        q: Текущий заряд q(t_n)
        nu_hist: Спектры ν(q(t_i)), i = 0..n (прямой метод и начало частотного)
        H: Аккумуляторы H_{ℓm j}(t_n) = ∫₀^{t_n} e^{ik_j²s} ν_{ℓm}(s) ds
        picard_ratio: Отношение сжатия последнего шага
        picard_iterations: Число итераций последнего шага
        dual_path_gap: Расхождение Λ последнего шага
    """
    n: int
    dt: float
    q: ChargeSpectrum
    nu_hist: List[np.ndarray] = field(default_factory=list)
    H: Optional[np.ndarray] = None
    picard_ratio: float = 0.0
    picard_iterations: int = 0
    dual_path_gap: float = math.nan

    @property
    def t(self) -> float:
        return self.n * self.dt

    @property
    def nu_current(self) -> np.ndarray:
        return self.nu_hist[-1]

    @property
    def nu_initial(self) -> np.ndarray:
        return self.nu_hist[0]


@dataclass
class Trajectory:
    """
    Результат прогона.

    Attributes:
        times: Моменты записи
        records: Диагностика по шагам
        early_stop: Прогон остановлен досрочно
        stop_reason: Причина остановки
        stop_step: Шаг, на котором произошла остановка
        stop_ratio: Последнее отношение сжатия перед остановкой
        final_state: Последнее принятое состояние
    """
    times: List[float] = field(default_factory=list)
    records: List[DiagnosticsRecord] = field(default_factory=list)
    early_stop: bool = False
    stop_reason: str = ""
    stop_step: Optional[int] = None
    stop_ratio: float = math.nan
    final_state: Optional[SolverState] = None

    def append(self, record: DiagnosticsRecord) -> None:
        if self.times and record.t <= self.times[-1]:
            raise ValueError(f"Время записи {record.t} не возрастает (последнее {self.times[-1]})")
        self.times.append(record.t)
        self.records.append(record)

    def column(self, name: str) -> np.ndarray:
        """Столбец диагностики по имени поля."""
        return np.array([getattr(record, name) for record in self.records])
