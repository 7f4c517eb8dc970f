"""
Тесты диагностики: масса, энергия, след реконструкции и скачок
нормальной производной на сфере.
"""

import math

import numpy as np
import pytest

from shellnls.core.domain import assemble_initial_state, build_regular_part, single_layer
from shellnls.core.errors import DomainError
from shellnls.core.hankel import RadialGrid, RadialSpectrum
from shellnls.core.kernels import bound_state_lambda, build_kernel_quadrature
from shellnls.core.observables import (
    DiagnosticsBuilder,
    charge_consistency,
    energy,
    field_trace,
    grid_tail,
    jump_residual,
    kinetic,
    mass,
    normal_jump,
    potential,
    reconstruct_field,
)
from shellnls.core.profiles import BoundStateProfile, GaussianProfile
from shellnls.core.propagator import SolverConfig, run
from shellnls.core.sphgrid import ChargeSpectrum
from shellnls.core.state import SolverState


def initial_state(data, dt=0.01):
    return SolverState(
        n=0,
        dt=dt,
        q=data.q0.copy(),
        nu_hist=[data.nu0.coef.copy()],
        H=np.zeros((data.q0.coef.size, data.grid.size), dtype=complex),
    )


class TestIntegrals:
    """Масса и кинетическая энергия гауссианы e^{−r²/2}."""

    def setup_method(self):
        grid = RadialGrid.composite(14.0, 1.0, 32)
        phi0 = build_regular_part([GaussianProfile({"amplitude": 1.0})], 1, grid)
        self.data = assemble_initial_state(phi0, 0.0, 1.0, 1.0)
        self.psi = self.data.field()

    def test_mass(self):
        assert mass(self.psi) == pytest.approx(math.pi ** 1.5, rel=1e-12)

    def test_kinetic(self):
        assert kinetic(self.psi) == pytest.approx(1.5 * math.pi ** 1.5, rel=1e-12)

    def test_energy_without_nonlinearity(self):
        q = self.data.q0
        assert energy(self.psi, q, 0.0, 1.0) == pytest.approx(kinetic(self.psi))

    def test_reconstruct_initial(self):
        psi = reconstruct_field(initial_state(self.data), self.data)
        assert np.allclose(psi.data, self.psi.data)

    def test_grid_tail(self):
        grid = RadialGrid.composite(100.0, 1.0, 16)
        tail = grid_tail(2, grid)
        assert tail.shape == (3,)
        assert np.all(tail > 0)
        assert tail[0] == pytest.approx(1.0 / (math.pi * 100.0), rel=0.05)


class TestPotential:
    """(β/(σ+1))‖q‖^{2σ+2}_{L^{2σ+2}(S²)}."""

    def test_constant_charge(self):
        c = 0.8 + 0.3j
        q = ChargeSpectrum.single(2, 0, 0, c)
        expected = 0.5 * abs(c) ** 4 / (4.0 * math.pi)
        assert potential(q, 1.0, 1.0) == pytest.approx(expected, rel=1e-12)

    def test_focusing_sign(self):
        q = ChargeSpectrum.single(1, 1, 1, 0.5)
        assert potential(q, -1.0, 0.5) < 0

    def test_zero_beta(self):
        assert potential(ChargeSpectrum.single(1, 0, 0, 1.0), 0.0, 1.0) == 0.0

    def test_invalid_sigma(self):
        with pytest.raises(DomainError, match="σ"):
            potential(ChargeSpectrum.single(1, 0, 0, 1.0), 1.0, -1.0)


class TestTraceAndJump:
    """След и скачок нормальной производной."""

    def setup_method(self):
        self.grid = RadialGrid.composite(40.0, 1.0, 32)

    def test_single_layer_jump(self):
        """−G^λ(ν δ): скачок ∂ᵣ равен ν."""
        nu = ChargeSpectrum.single(2, 1, 0, 0.7)
        layer = single_layer(nu, 1.0, self.grid)
        psi = RadialSpectrum(L=2, grid=self.grid, data=-layer.data)
        jump = normal_jump(psi)
        assert jump[1, 0] == pytest.approx(0.7, abs=1e-4)
        assert np.max(np.abs(np.delete(jump.coef, 2))) < 1e-6
        assert jump_residual(psi, ChargeSpectrum.zeros(2), 0.0, 1.0, nu=nu) < 1e-3

    def test_smooth_field_has_no_jump(self):
        phi0 = build_regular_part([GaussianProfile({"amplitude": 1.0})], 1, self.grid)
        jump = normal_jump(phi0)
        assert np.max(np.abs(jump.coef)) < 1e-5

    def test_jump_offset_range(self):
        psi = RadialSpectrum.zeros(0, self.grid)
        with pytest.raises(DomainError, match="1/4"):
            normal_jump(psi, h=0.3)

    def test_nonlinear_initial_data(self):
        phi0 = build_regular_part([GaussianProfile({"amplitude": 0.3})], 1, self.grid)
        data = assemble_initial_state(phi0, 1.0, 1.0, 1.0)
        psi = data.field()
        assert charge_consistency(psi, data.q0, data.nu0) < 1e-4
        assert jump_residual(psi, data.q0, 1.0, 1.0, lam=data.lam) < 1e-3

    def test_trace_tail_correction(self):
        """Поправка хвоста приближает след поля с сингулярной частью к заряду."""
        phi0 = build_regular_part([GaussianProfile({"amplitude": 0.3})], 1, self.grid)
        data = assemble_initial_state(phi0, 1.0, 1.0, 1.0)
        psi = data.field()
        corrected = np.abs(field_trace(psi, data.nu0).coef - data.q0.coef).max()
        plain = np.abs(field_trace(psi).coef - data.q0.coef).max()
        assert corrected < plain


class TestDiagnosticsBuilder:
    """Запись диагностики по состоянию решателя."""

    def setup_method(self):
        self.grid = RadialGrid.composite(40.0, 1.0, 32)

    def test_invalid_monitor(self):
        phi0 = build_regular_part([GaussianProfile({})], 0, self.grid)
        data = assemble_initial_state(phi0, 0.0, 1.0, 1.0)
        with pytest.raises(DomainError, match="больше 1"):
            DiagnosticsBuilder(data, monitor_factor=1.0)

    def test_initial_record(self):
        phi0 = build_regular_part([GaussianProfile({"amplitude": 0.3})], 1, self.grid)
        data = assemble_initial_state(phi0, 1.0, 1.0, 1.0)
        record = DiagnosticsBuilder(data)(initial_state(data))
        assert record.step == 0
        assert record.t == 0.0
        assert record.energy == pytest.approx(record.kinetic + record.potential)
        assert record.potential > 0
        assert record.q_sup == pytest.approx(abs(data.q0[0, 0]) / math.sqrt(4.0 * math.pi), rel=1e-10)
        assert not record.flag_growth
        assert math.isnan(record.dual_path_gap)

    def test_bound_state_energy(self):
        """Для собственной функции оболочки E = −λ*·‖ψ‖²."""
        profile = BoundStateProfile({"amplitude": 1.0}, {"alpha": -2.0, "lambda": 1.0})
        phi0 = build_regular_part([profile], 0, self.grid)
        data = assemble_initial_state(phi0, 0.0, 1.0, 1.0, alpha=-2.0)
        record = DiagnosticsBuilder(data)(initial_state(data))
        assert record.potential == pytest.approx(-2.0 * abs(data.q0[0, 0]) ** 2)
        assert record.energy / record.mass == pytest.approx(-bound_state_lambda(-2.0), rel=5e-3)

    def test_growth_flag(self):
        phi0 = build_regular_part([GaussianProfile({"amplitude": 0.3})], 0, self.grid)
        data = assemble_initial_state(phi0, 1.0, 1.0, 1.0)
        state = initial_state(data)
        state.q = data.q0.scaled(20.0)
        record = DiagnosticsBuilder(data, monitor_factor=10.0)(state)
        assert record.flag_growth


class TestAfterStepping:
    """След и скачок реконструкции после шагов решателя."""

    @classmethod
    def setup_class(cls):
        cls.kernels = [
            build_kernel_quadrature(1, tau_min=0.01, T_horizon=0.1, tol=2e-3),
            build_kernel_quadrature(1, tau_min=0.01, T_horizon=0.1, tol=2e-3, k_max=80.0),
        ]
        cls.trajectories = []
        for kernel in cls.kernels:
            phi0 = build_regular_part([GaussianProfile({"amplitude": 0.3})], 1, kernel.grid)
            data = assemble_initial_state(phi0, 1.0, 0.5, 1.0)
            config = SolverConfig(dt=0.01, T=0.1, L=1, kernel=kernel)
            cls.trajectories.append(run(data, config))

    def test_doubled_grid(self):
        assert self.kernels[1].k_max >= 2.0 * self.kernels[0].k_max

    def test_trace_matches_charge(self):
        for trajectory in self.trajectories:
            assert len(trajectory.records) == 11
            assert np.max(trajectory.column("trace_residual")) <= 1e-3

    def test_jump_residual_falls_with_k_max(self):
        coarse, fine = (float(t.column("jump_residual")[-1]) for t in self.trajectories)
        assert coarse <= 5e-2
        assert fine < coarse


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
