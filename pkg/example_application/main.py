"""
Пример использования shellnls.core без командной строки.

Строит сценарий свободной эволюции, подписывается на события прогона и
сравнивает след поля с замкнутой формой для гауссианы.
"""

import cmath
import math
from pathlib import Path

from shellnls.core import (
    EarlyStopEvent,
    RunStartedEvent,
    Simulation,
    StepCompletedEvent,
    load_config,
)
from shellnls.logging_config import init_core_logging

init_core_logging()

HERE = Path(__file__).parent


class ProgressPrinter:
    """Печатает каждую десятую запись диагностики."""

    def __init__(self, every: int = 10):
        self.every = every

    def __call__(self, event):
        if isinstance(event, RunStartedEvent):
            kernel = event.header["kernel"]
            print(f"Квадратура ядра: k_max={kernel['k_max']:.1f}, узлов {kernel['nodes']}")
        elif isinstance(event, StepCompletedEvent) and event.record.step % self.every == 0:
            record = event.record
            print(f"t={record.t:.3f}  масса={record.mass:.10f}  ‖q‖_3/2={record.q_h32:.6f}")
        elif isinstance(event, EarlyStopEvent):
            print(f"Остановка на шаге {event.step}: {event.reason}")


def free_gaussian_trace(t: float) -> complex:
    z = 1.0 + 2j * t
    return math.sqrt(4.0 * math.pi) * z ** -1.5 * cmath.exp(-0.5 / z)


def main():
    config = load_config(HERE / "free.ini").with_overrides(T=0.2)
    simulation = Simulation(config)
    simulation.subscribe_to_events(ProgressPrinter())
    trajectory = simulation.run()

    state = trajectory.final_state
    exact = free_gaussian_trace(state.t)
    error = abs(state.q[0, 0] - exact) / abs(exact)
    print(f"q₀₀({state.t:.2f}) = {state.q[0, 0]:.8f}, замкнутая форма {exact:.8f}, отн. ошибка {error:.2e}")


if __name__ == "__main__":
    main()
