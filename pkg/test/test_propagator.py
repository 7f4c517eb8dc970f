"""
Тесты шагов по времени: веса интегрирования произведений, источник F₀,
прямой и частотный пути для памяти Λ и итерации Пикара.
"""

import cmath
import math

import numpy as np
import pytest

from shellnls.core.domain import assemble_initial_state, build_regular_part
from shellnls.core.errors import DomainError, GridMismatchError
from shellnls.core.hankel import RadialGrid
from shellnls.core.kernels import bound_state_lambda, build_kernel_quadrature, f2, rho_moments, t_lambda
from shellnls.core.profiles import BoundStateProfile, GaussianProfile
from shellnls.core.propagator import (
    ProductWeights,
    Propagator,
    SolverConfig,
    SourceTerm,
    apply_lambda_direct,
    apply_lambda_freq,
    panel_integrals,
    run,
    source_f0,
    step,
    step_linear,
)
from shellnls.core.state import SolverState
from shellnls.core.sphgrid import ChargeSpectrum

DT = 0.01
T = 0.1
L = 2


def free_gaussian_trace(t):
    z = 1.0 + 2j * t
    return math.sqrt(4.0 * math.pi) * z ** -1.5 * cmath.exp(-0.5 / z)


def gaussian_data(grid, beta, amplitude=0.1, sigma=1.0):
    phi0 = build_regular_part([GaussianProfile({"amplitude": amplitude})], L, grid)
    return assemble_initial_state(phi0, beta, sigma, 1.0)


class TestPanelIntegrals:
    """∫₀¹ e^{−izu} du и ∫₀¹ u e^{−izu} du."""

    def test_zero(self):
        i0, i1 = panel_integrals(np.array([0.0]))
        assert i0[0] == pytest.approx(1.0)
        assert i1[0] == pytest.approx(0.5)

    @pytest.mark.parametrize("z", [0.05, 0.3, 0.49, 0.51, 3.0, 40.0])
    def test_against_closed_form(self, z):
        e = cmath.exp(-1j * z)
        expected0 = (1.0 - e) / (1j * z)
        expected1 = 1j * e / z + (e - 1.0) / z ** 2
        i0, i1 = panel_integrals(np.array([z]))
        assert i0[0] == pytest.approx(expected0, abs=1e-12)
        assert i1[0] == pytest.approx(expected1, abs=1e-12)


class TestProductWeights:
    """Интегрирование произведений с кусочно-линейной ν."""

    def setup_method(self):
        self.weights = ProductWeights.build(2, 0.05, 8)

    def test_panel_sum(self):
        """a_p + b_p = ∫ ρ по панели p."""
        total = self.weights.a[:, 1:] + self.weights.b[:, 1:]
        assert np.allclose(total, np.diff(self.weights.m0, axis=1), atol=1e-14)
        assert self.weights.n_steps == 8

    def test_constant_density(self):
        """ν ≡ c: Λν(t_n) = c·M0(t_n)."""
        c = 0.3 - 0.2j
        nu_hist = np.full((9, 9), c)
        for ell, m in ((0, 0), (2, -1)):
            value = apply_lambda_direct(nu_hist, ell, m, 8, self.weights)
            assert value == pytest.approx(c * self.weights.m0[ell, 8], abs=1e-13)

    def test_linear_density(self):
        """ν(s) = s: Λν(t) = t·M0(t) − M1(t)."""
        times = 0.05 * np.arange(9)
        nu_hist = np.repeat(times[:, None], 9, axis=1).astype(complex)
        m0, m1 = rho_moments(2, times[1:])
        expected = times[-1] * m0[1, -1] - m1[1, -1]
        assert apply_lambda_direct(nu_hist, 1, 0, 8, self.weights) == pytest.approx(expected, abs=1e-12)

    def test_short_history(self):
        with pytest.raises(GridMismatchError, match="История"):
            apply_lambda_direct(np.zeros((3, 9)), 0, 0, 5, self.weights)

    def test_zero_step(self):
        assert apply_lambda_direct(np.zeros((1, 9)), 0, 0, 0, self.weights) == 0j


class TestSolverConfig:
    """Проверка параметров решателя."""

    @classmethod
    def setup_class(cls):
        cls.kernel = build_kernel_quadrature(L, tau_min=DT, T_horizon=T, tol=2e-3)

    def test_valid(self):
        config = SolverConfig(dt=DT, T=T, L=L, kernel=self.kernel)
        assert config.n_steps == 10
        assert config.weights.n_steps == 10

    def test_collects_errors(self):
        with pytest.raises(DomainError, match="Некорректная конфигурация решателя") as excinfo:
            SolverConfig(dt=DT, T=2 * T, L=L + 1, kernel=self.kernel, method="euler")
        message = str(excinfo.value)
        assert "euler" in message
        assert "L=2" in message
        assert "сертифицирована" in message

    def test_dt_below_tau_min(self):
        with pytest.raises(DomainError, match="tau_min"):
            SolverConfig(dt=DT / 2, T=T, L=L, kernel=self.kernel)

    def test_non_positive_dt(self):
        with pytest.raises(DomainError, match="dt"):
            SolverConfig(dt=0.0, T=T, L=L, kernel=self.kernel)


class TestSourceTerm:
    """F₀(t) и быстрый путь f2."""

    def setup_method(self):
        self.grid = RadialGrid.composite(20.0, 1.0, 32)

    def test_free_gaussian(self):
        data = gaussian_data(self.grid, beta=0.0, amplitude=1.0)
        for t in (0.0, 0.25, 0.5):
            value = source_f0(data, t)[0, 0]
            assert value == pytest.approx(free_gaussian_trace(t), rel=1e-6)

    def test_f2_at_zero(self):
        source = SourceTerm(gaussian_data(self.grid, beta=1.0))
        assert np.allclose(source.f2(0.0), [t_lambda(ell, 1.0) for ell in range(L + 1)])

    def test_f2_against_oracle(self):
        source = SourceTerm(gaussian_data(self.grid, beta=1.0))
        fast = source.f2(0.3)
        for ell in (0, 1):
            assert fast[ell] == pytest.approx(f2(0.3, ell, 1.0, tol=1e-4), abs=2e-4)

    def test_negative_time(self):
        source = SourceTerm(gaussian_data(self.grid, beta=0.0))
        with pytest.raises(DomainError, match="неотрицательным"):
            source.at(-0.1)

    def test_indexed_call_requires_weights(self):
        source = SourceTerm(gaussian_data(self.grid, beta=0.0))
        with pytest.raises(DomainError, match="весов"):
            source(1)


class TestPropagator:
    """Прогоны на общей квадратуре ядра."""

    @classmethod
    def setup_class(cls):
        cls.kernel = build_kernel_quadrature(L, tau_min=DT, T_horizon=T, tol=2e-3)

    def config(self, **kwargs):
        return SolverConfig(dt=DT, T=T, L=L, kernel=self.kernel, **kwargs)

    @pytest.mark.parametrize("method", ["freq", "direct"])
    def test_free_evolution_equals_source(self, method):
        """β = 0: q(t) = F₀(t) на каждом шаге."""
        data = gaussian_data(self.kernel.grid, beta=0.0, amplitude=1.0)
        propagator = Propagator(data, self.config(method=method))
        charges = []
        propagator.run(on_step=lambda state, record: charges.append((state.t, state.q.coef.copy())))
        assert len(charges) == 11
        for t, coef in charges:
            assert np.max(np.abs(coef - source_f0(data, t).coef)) < 1e-12

    def test_free_trace_matches_closed_form(self):
        data = gaussian_data(self.kernel.grid, beta=0.0, amplitude=1.0)
        trajectory = Propagator(data, self.config()).run()
        state = trajectory.final_state
        assert state.q[0, 0] == pytest.approx(free_gaussian_trace(state.t), rel=1e-6)

    def test_dual_path_agreement(self):
        data = gaussian_data(self.kernel.grid, beta=1.0)
        propagator = Propagator(data, self.config(method="both"))
        gaps = []
        propagator.run(on_step=lambda state, record: gaps.append(state.dual_path_gap))
        assert math.isnan(gaps[0])
        assert max(gaps[1:]) <= 2.0 * (self.kernel.tol + 1e-6)

    def test_direct_and_freq_close(self):
        data = gaussian_data(self.kernel.grid, beta=-0.5)
        direct = Propagator(data, self.config(method="direct")).run().final_state.q.coef
        freq = Propagator(data, self.config(method="freq")).run().final_state.q.coef
        assert np.max(np.abs(direct - freq)) <= 1e-2 * np.max(np.abs(direct))

    def test_picard_statistics(self):
        data = gaussian_data(self.kernel.grid, beta=1.0)
        propagator = Propagator(data, self.config())
        state = propagator.step(propagator.initial_state())
        assert state.n == 1
        assert state.t == pytest.approx(DT)
        assert 1 < state.picard_iterations < 50
        assert 0.0 <= state.picard_ratio < 1.0

    def test_non_contraction_stops_early(self):
        data = gaussian_data(self.kernel.grid, beta=1.0)
        trajectory = Propagator(data, self.config(picard_max=1)).run(
            diagnostics=lambda state: None
        )
        assert trajectory.early_stop
        assert trajectory.stop_step == 1
        assert "Пикара" in trajectory.stop_reason
        assert trajectory.final_state.n == 0

    def test_band_mismatch(self):
        phi0 = build_regular_part([GaussianProfile({})], 1, self.kernel.grid)
        data = assemble_initial_state(phi0, 0.0, 1.0, 1.0)
        with pytest.raises(GridMismatchError, match="Полоса"):
            Propagator(data, self.config())
        other = gaussian_data(RadialGrid.composite(5.0, 1.0, 8), beta=0.0)
        with pytest.raises(GridMismatchError, match="сетке"):
            Propagator(other, self.config())

    def test_bound_state_rotates(self):
        """Связанное состояние оболочки: q(t) = q₀ e^{iλ*t}."""
        profile = BoundStateProfile({"amplitude": 1.0}, {"alpha": -2.0, "lambda": 1.0})
        phi0 = build_regular_part([profile], L, self.kernel.grid)
        data = assemble_initial_state(phi0, 0.0, 1.0, 1.0, alpha=-2.0)
        trajectory = Propagator(data, self.config()).run()
        q0 = data.q0[0, 0]
        qT = trajectory.final_state.q[0, 0]
        lam_star = bound_state_lambda(-2.0)
        assert abs(qT) == pytest.approx(abs(q0), rel=2e-2)
        assert cmath.phase(qT / q0) == pytest.approx(lam_star * T, abs=1e-2)

    def test_module_functions(self):
        data = gaussian_data(self.kernel.grid, beta=1.0)
        config = self.config()
        trajectory = run(data, config)
        assert len(trajectory.records) == config.n_steps + 1
        assert np.all(np.diff(trajectory.times) > 0)
        first = step(Propagator(data, config).initial_state(), data, config)
        assert first.n == 1

    def test_apply_lambda_freq_matches_history(self):
        """Λν по аккумуляторам согласуется с прямым путём на том же состоянии."""
        data = gaussian_data(self.kernel.grid, beta=1.0)
        config = self.config(method="direct")
        propagator = Propagator(data, config)
        state = propagator.initial_state()
        for _ in range(3):
            state = propagator.step(state)
        freq = apply_lambda_freq(state, self.kernel, 0, 0)
        direct = apply_lambda_direct(np.asarray(state.nu_hist), 0, 0, state.n, config.weights)
        assert freq == pytest.approx(direct, abs=2.0 * (self.kernel.tol + 1e-6) * max(abs(direct), 1.0))

    def test_apply_lambda_freq_without_accumulators(self):
        state = SolverState(n=0, dt=DT, q=ChargeSpectrum.zeros(L))
        assert apply_lambda_freq(state, self.kernel, 0, 0) == 0j


class TestRefinementAndSymmetry:
    """Поведение при измельчении шага, калибровочная ковариантность, линейная оболочка."""

    @classmethod
    def setup_class(cls):
        # одна квадратура для dt и dt/2: разница прогонов только в шаге
        cls.kernel = build_kernel_quadrature(L, tau_min=DT / 2, T_horizon=T, tol=2e-3)

    def config(self, dt=DT, **kwargs):
        return SolverConfig(dt=dt, T=T, L=L, kernel=self.kernel, **kwargs)

    @staticmethod
    def drift(values):
        return float(np.max(np.abs(values - values[0])) / abs(values[0]))

    def test_conservation_drift_falls_with_dt(self):
        data = gaussian_data(self.kernel.grid, beta=1.0)
        coarse = run(data, self.config(DT))
        fine = run(data, self.config(DT / 2))
        for column in ("mass", "energy"):
            drift_coarse = self.drift(coarse.column(column))
            drift_fine = self.drift(fine.column(column))
            assert drift_fine < drift_coarse
            assert drift_fine < 1e-3

    def test_picard_ratio_falls_with_dt(self):
        data = gaussian_data(self.kernel.grid, beta=1.0)
        ratios = []
        for dt in (DT, DT / 2):
            propagator = Propagator(data, self.config(dt))
            ratios.append(propagator.step(propagator.initial_state()).picard_ratio)
        assert 0.0 < ratios[1] < ratios[0] < 1.0

    def test_gauge_covariance(self):
        """ψ₀ → e^{iθ}ψ₀: q(t) → e^{iθ}q(t)."""
        rotation = cmath.exp(0.7j)
        plain = Propagator(gaussian_data(self.kernel.grid, beta=1.0), self.config()).run()
        rotated = Propagator(
            gaussian_data(self.kernel.grid, beta=1.0, amplitude=0.1 * rotation), self.config()
        ).run()
        q_plain = plain.final_state.q.coef
        q_rotated = rotated.final_state.q.coef
        assert np.max(np.abs(q_rotated - rotation * q_plain)) <= 1e-10 * np.max(np.abs(q_plain))

    def test_linear_shell_modes_decouple(self):
        """Линейная оболочка: данные в одной моде (1, 0) не возбуждают другие."""
        phi0 = build_regular_part([GaussianProfile({"amplitude": 0.5, "ell": 1, "m": 0})], L, self.kernel.grid)
        data = assemble_initial_state(phi0, 0.0, 1.0, 1.0, alpha=-0.5)
        config = self.config()
        propagator = Propagator(data, config)
        state = propagator.initial_state()
        for _ in range(5):
            state = propagator.step_linear(state, -0.5)
        others = np.delete(state.q.coef, 2)
        assert abs(state.q[1, 0]) > 1e-3
        assert np.max(np.abs(others)) < 1e-14
        again = step_linear(state, -0.5, config, data)
        assert again.n == state.n + 1
        assert np.max(np.abs(np.delete(again.q.coef, 2))) < 1e-14


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
