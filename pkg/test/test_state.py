"""
Тесты траектории и записей диагностики.
"""

import math

import numpy as np
import pytest

from shellnls.core.sphgrid import ChargeSpectrum
from shellnls.core.state import DiagnosticsRecord, SolverState, Trajectory


def make_record(t: float, step: int) -> DiagnosticsRecord:
    return DiagnosticsRecord(
        t=t, step=step, mass=2.0, kinetic=1.0, potential=-0.5, energy=0.5,
        q_h32=1.0, q_sup=0.1, jump_residual=0.0, trace_residual=0.0,
    )


class TestTrajectory:

    def test_append_and_column(self):
        trajectory = Trajectory()
        trajectory.append(make_record(0.0, 0))
        trajectory.append(make_record(0.1, 1))
        assert trajectory.times == [0.0, 0.1]
        assert np.array_equal(trajectory.column("step"), [0, 1])
        assert np.allclose(trajectory.column("energy"), 0.5)

    def test_times_must_increase(self):
        trajectory = Trajectory()
        trajectory.append(make_record(0.1, 1))
        with pytest.raises(ValueError, match="не возрастает"):
            trajectory.append(make_record(0.1, 2))

    def test_record_defaults(self):
        data = make_record(0.0, 0).to_dict()
        assert math.isnan(data["dual_path_gap"])
        assert data["flag_growth"] is False
        assert data["picard_iterations"] == 0


class TestSolverState:

    def test_time_and_history(self):
        first = np.zeros(4, dtype=complex)
        last = np.ones(4, dtype=complex)
        state = SolverState(n=3, dt=0.02, q=ChargeSpectrum.zeros(1), nu_hist=[first, last])
        assert state.t == pytest.approx(0.06)
        assert state.nu_initial is first
        assert state.nu_current is last


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
