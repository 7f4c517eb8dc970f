"""
Тесты оркестратора Simulation: последовательность событий, снимки,
досрочная остановка и обработка ошибок подписчиков.
"""

import tempfile
from pathlib import Path

import pytest

from shellnls.core.application import Simulation
from shellnls.core.config import parse_config
from shellnls.core.errors import DomainError
from shellnls.core.events import (
    EarlyStopEvent,
    ErrorOccurredEvent,
    RunFinishedEvent,
    RunStartedEvent,
    StepCompletedEvent,
)
from shellnls.core.kernels import build_kernel_quadrature

CONFIG_TEXT = """
scenario = defocusing

[numerics]
L = 2
dt = 0.01
T = 0.1
kernel_tol = 2e-3
{extra}
"""


class TestSimulation:
    """Прогоны на общей квадратуре ядра."""

    @classmethod
    def setup_class(cls):
        cls.kernel = build_kernel_quadrature(2, tau_min=0.01, T_horizon=0.1, tol=2e-3)

    def setup_method(self):
        """Подготовка к тестам."""
        self.events = []

    def make_simulation(self, extra: str = "") -> Simulation:
        config = parse_config(CONFIG_TEXT.format(extra=extra))
        simulation = Simulation(config, kernel=self.kernel)
        simulation.subscribe_to_events(self.events.append)
        return simulation

    def test_event_sequence(self):
        trajectory = self.make_simulation().run()

        assert isinstance(self.events[0], RunStartedEvent)
        assert isinstance(self.events[-1], RunFinishedEvent)
        steps = [event for event in self.events if isinstance(event, StepCompletedEvent)]
        assert len(steps) == 11
        assert [event.record.step for event in steps] == list(range(11))
        assert all(event.snapshot is None for event in steps)
        assert self.events[-1].trajectory is trajectory
        assert not trajectory.early_stop

    def test_header(self):
        simulation = self.make_simulation()
        header = simulation.header()
        assert header["config"]["scenario"] == "defocusing"
        assert header["lambda"] == 1.0
        assert header["trace_residual"] <= 1e-10
        assert header["kernel"]["nodes"] == self.kernel.grid.size
        assert header["local_existence_time"] > 0
        assert "bound_state_lambda" not in header

    def test_snapshots_with_stride(self):
        simulation = self.make_simulation(
            "\n[output]\nsnapshots = snap.csv\nsnapshot_stride = 5\n"
        )
        simulation.run()
        snapshots = [
            event.record.step
            for event in self.events
            if isinstance(event, StepCompletedEvent) and event.snapshot is not None
        ]
        assert snapshots == [0, 5, 10]

    def test_early_stop_event(self):
        trajectory = self.make_simulation("picard_max = 1\n").run()

        assert trajectory.early_stop
        stops = [event for event in self.events if isinstance(event, EarlyStopEvent)]
        assert len(stops) == 1
        assert stops[0].step == 1
        assert stops[0].t == pytest.approx(0.01)
        assert "Пикара" in stops[0].reason
        assert isinstance(self.events[-1], RunFinishedEvent)

    def test_error_event_and_reraise(self):
        """Горизонт больше сертифицированного: ошибка публикуется и возбуждается снова."""
        config = parse_config(CONFIG_TEXT.format(extra="")).with_overrides(T=0.2)
        simulation = Simulation(config, kernel=self.kernel)
        simulation.subscribe_to_events(self.events.append)

        with pytest.raises(DomainError):
            simulation.run()
        errors = [event for event in self.events if isinstance(event, ErrorOccurredEvent)]
        assert len(errors) == 1
        assert "defocusing" in errors[0].message
        assert not any(isinstance(event, RunFinishedEvent) for event in self.events)

    def test_failing_subscriber_is_isolated(self):
        def broken(event):
            raise RuntimeError("сбой подписчика")

        simulation = self.make_simulation()
        simulation.subscribe_to_events(broken)
        trajectory = simulation.run()
        assert len(trajectory.records) == 11
        assert isinstance(self.events[-1], RunFinishedEvent)

    def test_subscribe_twice_and_unsubscribe(self):
        simulation = self.make_simulation()
        simulation.subscribe_to_events(self.events.append)
        simulation.unsubscribe_from_events(self.events.append)
        simulation.run()
        assert self.events == []

    def test_load_from_file(self):
        temp_file = tempfile.NamedTemporaryFile(mode="w", suffix=".ini", delete=False, encoding="utf-8")
        temp_file.write(CONFIG_TEXT.format(extra=""))
        temp_file.close()
        config_path = Path(temp_file.name)
        try:
            simulation = Simulation(config_path, kernel=self.kernel)
            assert simulation.config.L == 2
            assert simulation.data.beta == 1.0
        finally:
            config_path.unlink()


class TestSingleStep:
    """dt = T: квадратура строится на вырожденном отрезке запаздываний."""

    def test_one_step_run(self):
        text = "scenario = free\n\n[numerics]\nL = 0\ndt = 0.01\nT = 0.01\nkernel_tol = 2e-3\n"
        simulation = Simulation(parse_config(text))
        assert simulation.kernel.tau_min == simulation.kernel.T_horizon == 0.01

        trajectory = simulation.run()
        assert len(trajectory.records) == 2
        assert trajectory.times == pytest.approx([0.0, 0.01])
        assert not trajectory.early_stop


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
