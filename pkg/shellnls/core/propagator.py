"""
Шаги по времени для уравнения заряда q(t) + iΛν(q)(t) = F₀(t).

Память Λν(t) = ∫₀ᵗ ρ(t−s,ℓ) ν(s) ds вычисляется двумя независимыми путями:
  - direct: интегрирование произведений с ν, кусочно-линейной по времени;
    веса выражаются через моменты ∫ s^p ρ ds по панелям;
  - freq:   частотные аккумуляторы H_j(t) = ∫₀ᵗ e^{ik_j²s} ν(s) ds, точные
    по фазе, плюс аналитический остаток за k_max.
Неявный член последней панели решается итерациями Пикара.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np

from shellnls.core.domain import InitialData, mode_shells
from shellnls.core.errors import DomainError, GridMismatchError, NonContractionError
from shellnls.core.kernels import (
    KernelQuadrature,
    inverse_quartic_tail,
    rho_moments,
    t_lambda,
)
from shellnls.core.observables import DiagnosticsBuilder
from shellnls.core.sphgrid import ChargeSpectrum, mode_ells, mode_index, sobolev_norm
from shellnls.core.state import DiagnosticsRecord, SolverState, Trajectory
from shellnls.logging_config import get_logger

logger = get_logger(__name__)

METHODS = ("direct", "freq", "both")

# Порог z = k²dt, ниже которого интегралы панели берутся рядом Тейлора
_TAYLOR_SWITCH = 0.5
_TAYLOR_TERMS = 20


@dataclass
class ProductWeights:
    """
    Веса интегрирования произведений a_p, b_p (панель p = 1..N) и
    моменты M0(p·dt).

    Attributes:
        dt: Шаг
        a: Вес ν на левом конце панели, форма (L+1, N+1)
        b: Вес ν на правом конце панели, форма (L+1, N+1)
        m0: M0(p·dt), m0[:, 0] = 0
    """
    dt: float
    a: np.ndarray
    b: np.ndarray
    m0: np.ndarray

    @classmethod
    def build(cls, L: int, dt: float, n_steps: int) -> "ProductWeights":
        taus = dt * np.arange(1, n_steps + 1)
        m0, m1 = rho_moments(L, taus)
        zero = np.zeros((L + 1, 1), dtype=complex)
        m0 = np.concatenate([zero, m0], axis=1)
        m1 = np.concatenate([zero, m1], axis=1)
        d0 = np.diff(m0, axis=1)
        d1 = np.diff(m1, axis=1)
        p = np.arange(1, n_steps + 1)
        a = np.zeros((L + 1, n_steps + 1), dtype=complex)
        b = np.zeros((L + 1, n_steps + 1), dtype=complex)
        a[:, 1:] = (d1 - (p - 1) * dt * d0) / dt
        b[:, 1:] = (p * dt * d0 - d1) / dt
        logger.debug(f"Веса интегрирования произведений: {n_steps} панелей, |b_1|≤{np.abs(b[:, 1]).max():.3e}")
        return cls(dt=dt, a=a, b=b, m0=m0)

    @property
    def n_steps(self) -> int:
        return self.a.shape[1] - 1


def panel_integrals(z) -> Tuple[np.ndarray, np.ndarray]:
    """∫₀¹ e^{−izu} du и ∫₀¹ u e^{−izu} du для z ≥ 0."""
    z = np.asarray(z, dtype=float)
    i0 = np.empty(z.shape, dtype=complex)
    i1 = np.empty(z.shape, dtype=complex)
    small = z < _TAYLOR_SWITCH
    zs = z[small]
    term = np.ones(zs.shape, dtype=complex)
    s0 = np.zeros(zs.shape, dtype=complex)
    s1 = np.zeros(zs.shape, dtype=complex)
    for m in range(_TAYLOR_TERMS):
        # term = (−iz)^m / m!
        s0 += term / (m + 1)
        s1 += term / (m + 2)
        term = term * (-1j * zs) / (m + 1)
    i0[small] = s0
    i1[small] = s1
    zl = z[~small]
    e = np.exp(-1j * zl)
    i0[~small] = (1.0 - e) / (1j * zl)
    i1[~small] = 1j * e / zl + (e - 1.0) / zl ** 2
    return i0, i1


@dataclass
class SolverConfig:
    """
    Параметры шагов по времени.

    Attributes:
        dt: Шаг
        T: Горизонт
        L: Полоса
        kernel: Сертифицированная квадратура ядра
        picard_tol: Относительный допуск итераций Пикара
        picard_max: Предел итераций Пикара
        method: direct | freq | both
    """
    dt: float
    T: float
    L: int
    kernel: KernelQuadrature
    picard_tol: float = 1e-12
    picard_max: int = 50
    method: str = "freq"

    def __post_init__(self):
        errors = []
        if not self.dt > 0:
            errors.append(f"dt должен быть положительным (получено {self.dt})")
        elif self.T < self.dt:
            errors.append(f"T={self.T} меньше dt={self.dt}")
        if self.method not in METHODS:
            errors.append(f"неизвестный метод '{self.method}' (доступны: {', '.join(METHODS)})")
        if self.kernel.L < self.L:
            errors.append(f"квадратура ядра построена для L={self.kernel.L} < {self.L}")
        if self.dt > 0 and self.kernel.tau_min > self.dt * (1.0 + 1e-12):
            errors.append(f"tau_min={self.kernel.tau_min} квадратуры ядра больше dt={self.dt}")
        if self.kernel.T_horizon < self.T * (1.0 - 1e-12):
            errors.append(f"квадратура ядра сертифицирована до {self.kernel.T_horizon} < T={self.T}")
        if self.picard_max < 1 or not self.picard_tol > 0:
            errors.append("picard_max ≥ 1 и picard_tol > 0 обязательны")
        if errors:
            raise DomainError("Некорректная конфигурация решателя:\n- " + "\n- ".join(errors))

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @cached_property
    def weights(self) -> ProductWeights:
        return ProductWeights.build(self.L, self.dt, self.n_steps)


class SourceTerm:
    """
    F₀(t)_{ℓm} = Σ_j w k² shell(ℓ,k) φ̃₀ e^{−ik²t} − f2(t,ℓ,λ)·ν(q₀)_{ℓm},
    где f2 = T^λ − i M0(t) + g2(t), g2: по сетке плюс хвост k^{−4}.
    """

    def __init__(self, data: InitialData, weights: Optional[ProductWeights] = None):
        self.data = data
        self.weights = weights
        grid = data.grid
        k = grid.nodes
        L = data.L
        self.L = L
        self.ells = mode_ells(L)
        self.k_sq = k ** 2
        self.k_max = grid.k_max
        self.lam = data.lam
        self.regular = grid.weights * self.k_sq * mode_shells(L, grid) * data.phi0.data
        shells = mode_shells(L, grid)[[mode_index(ell, 0) for ell in range(L + 1)]]
        jsq = shells ** 2 * k
        self.g2_weights = -self.lam * grid.weights * jsq / (k * (self.k_sq + self.lam))
        self.t_values = np.array([t_lambda(ell, self.lam) for ell in range(L + 1)])
        self.nu0 = data.nu0.coef

    def f2(self, t: float, m0: Optional[np.ndarray] = None) -> np.ndarray:
        """f_{2,ℓ}(t) для всех ℓ ≤ L (быстрый путь)."""
        if t == 0:
            return self.t_values.astype(complex)
        if m0 is None:
            m0 = rho_moments(self.L, [t])[0][:, 0]
        phase = np.exp(-1j * self.k_sq * t)
        K = self.k_max
        tail = -(self.lam / math.pi) * (inverse_quartic_tail(K, t) - 1.0 / (3.0 * K ** 3))
        g2 = self.g2_weights @ (phase - 1.0) + tail
        return self.t_values - 1j * m0 + g2

    def at(self, t: float, m0: Optional[np.ndarray] = None) -> ChargeSpectrum:
        if t < 0:
            raise DomainError(f"Время источника должно быть неотрицательным, получено {t}")
        phase = np.exp(-1j * self.k_sq * t)
        regular = self.regular @ phase
        return ChargeSpectrum(L=self.L, coef=regular - self.f2(t, m0)[self.ells] * self.nu0)

    def __call__(self, n: int) -> ChargeSpectrum:
        """F₀(t_n) с моментами из весов интегрирования."""
        if self.weights is None:
            raise DomainError("Индексный вызов источника требует весов интегрирования")
        return self.at(n * self.weights.dt, self.weights.m0[:, n])


def source_f0(data: InitialData, t: float) -> ChargeSpectrum:
    """F₀(t) для произвольного t ≥ 0."""
    return SourceTerm(data).at(t)


def lambda_history_direct(nu_arr: np.ndarray, a_modes: np.ndarray, b_modes: np.ndarray, n_next: int) -> np.ndarray:
    """
    Λν(t_{n_next}) без неявного члена b_1·ν_{n_next}.

    Args:
        nu_arr: ν_0..ν_{n_next−1}, форма (n_next, M) (допускается длиннее)
        a_modes, b_modes: Веса по модам, форма (M, N+1)
    """
    N = n_next
    hist = np.einsum("mp,pm->m", a_modes[:, 1:N + 1], nu_arr[N - 1::-1])
    if N >= 2:
        hist = hist + np.einsum("mp,pm->m", b_modes[:, 2:N + 1], nu_arr[N - 1:0:-1])
    return hist


def apply_lambda_direct(nu_hist, ell: int, m: int, n: int, weights: ProductWeights) -> complex:
    """
    Λν_{ℓm}(t_n) по истории ν_0..ν_n прямым интегрированием произведений.
    """
    nu_arr = np.asarray(nu_hist)
    if n == 0:
        return 0j
    if nu_arr.shape[0] < n + 1:
        raise GridMismatchError(f"История ν содержит {nu_arr.shape[0]} точек, нужно {n + 1}")
    idx = mode_index(ell, m)
    series = nu_arr[:n + 1, idx][:, None]
    a = weights.a[ell][None, :]
    b = weights.b[ell][None, :]
    hist = lambda_history_direct(series, a, b, n)[0]
    return complex(hist + weights.b[ell, 1] * series[n, 0])


def apply_lambda_freq(state: SolverState, kernel: KernelQuadrature, ell: int, m: int) -> complex:
    """
    Λν_{ℓm}(t_n) = Σ_j w k J² e^{−ik²t_n} H_j(t_n) − i·tail_ℓ·ν(t_n) + i·E_ℓ(t_n)·ν(0).
    """
    if state.H is None:
        return 0j
    idx = mode_index(ell, m)
    t = state.t
    grid_part = kernel.weights[ell] @ (np.exp(-1j * kernel.nodes ** 2 * t) * state.H[idx])
    remainder = kernel.remainder(t)[ell]
    return complex(
        grid_part
        - 1j * kernel.tail[ell] * state.nu_current[idx]
        + 1j * remainder * state.nu_initial[idx]
    )


class Propagator:
    """
    Шаги по времени для заданных начальных данных и конфигурации.
    Весовые таблицы строятся один раз.
    """

    def __init__(self, data: InitialData, config: SolverConfig, source: Optional[SourceTerm] = None):
        if data.L != config.L:
            raise GridMismatchError(f"Полоса данных L={data.L} не совпадает с конфигурацией L={config.L}")
        kernel = config.kernel
        if data.grid.size != kernel.grid.size:
            raise GridMismatchError("Начальные данные заданы не на сетке квадратуры ядра")
        self.data = data
        self.config = config
        self.dt = config.dt
        L = config.L
        self.ells = mode_ells(L)
        weights = config.weights
        self.a_modes = weights.a[self.ells]
        self.b_modes = weights.b[self.ells]
        self.direct_implicit = weights.b[self.ells, 1]

        self.k_sq = kernel.nodes ** 2
        i0, i1 = panel_integrals(self.k_sq * self.dt)
        self.freq_a = self.dt * i1
        self.freq_b = self.dt * (i0 - i1)
        w_ell = kernel.weights[:L + 1]
        self.W_modes = w_ell[self.ells]
        tail = kernel.tail[:L + 1]
        self.freq_implicit = (w_ell @ self.freq_b - 1j * tail)[self.ells]
        times = self.dt * np.arange(config.n_steps + 1)
        self.remainders = kernel.remainder(times)[:L + 1][self.ells]
        self.source = source or SourceTerm(data, weights)

    def initial_state(self) -> SolverState:
        M = self.ells.size
        return SolverState(
            n=0,
            dt=self.dt,
            q=self.data.q0.copy(),
            nu_hist=[self.data.nu0.coef.copy()],
            H=np.zeros((M, self.k_sq.size), dtype=complex),
        )

    def _nu(self, coef: np.ndarray) -> np.ndarray:
        q = ChargeSpectrum(L=self.config.L, coef=coef)
        return self.data.nu_of(q).coef

    def _direct_history(self, state: SolverState) -> np.ndarray:
        return lambda_history_direct(np.asarray(state.nu_hist), self.a_modes, self.b_modes, state.n + 1)

    def _freq_history(self, state: SolverState) -> np.ndarray:
        n1 = state.n + 1
        phase = np.exp(-1j * self.k_sq * n1 * self.dt)
        inner = state.H * phase + self.freq_a * state.nu_current[:, None]
        hist = np.sum(self.W_modes * inner, axis=1)
        return hist + 1j * state.nu_initial * self.remainders[:, n1]

    def _history(self, state: SolverState) -> Tuple[np.ndarray, np.ndarray]:
        if self.config.method == "freq":
            return self._freq_history(state), self.freq_implicit
        return self._direct_history(state), self.direct_implicit

    def _advance(self, state: SolverState, q_new: np.ndarray, nu_new: np.ndarray,
                 iterations: int, ratio: float, gap: float) -> SolverState:
        n1 = state.n + 1
        phase = np.exp(1j * self.k_sq * n1 * self.dt)
        H = state.H + phase * (self.freq_a * state.nu_current[:, None] + self.freq_b * nu_new[:, None])
        if self.config.method == "freq":
            nu_hist = [state.nu_initial, nu_new]
        else:
            nu_hist = state.nu_hist + [nu_new]
        return SolverState(
            n=n1,
            dt=self.dt,
            q=ChargeSpectrum(L=self.config.L, coef=q_new),
            nu_hist=nu_hist,
            H=H,
            picard_ratio=ratio,
            picard_iterations=iterations,
            dual_path_gap=gap,
        )

    def _dual_gap(self, state: SolverState, hist: np.ndarray, nu_new: np.ndarray) -> float:
        if self.config.method != "both":
            return math.nan
        direct = hist + self.direct_implicit * nu_new
        freq = self._freq_history(state) + self.freq_implicit * nu_new
        return float(np.max(np.abs(direct - freq)))

    def step(self, state: SolverState) -> SolverState:
        """
        Шаг t_n → t_{n+1}: q = F₀ − i(Λ_hist + B·ν(q)) итерациями Пикара.

        Raises:
            NonContractionError: превышен picard_max
        """
        if self.data.is_linear:
            return self.step_linear(state, self.data.alpha)
        n1 = state.n + 1
        forcing = self.source(n1).coef
        hist, implicit = self._history(state)
        cfg = self.config

        if self.data.beta == 0.0:
            q = forcing - 1j * hist
            nu_new = np.zeros_like(q)
            return self._advance(state, q, nu_new, 1, 0.0, self._dual_gap(state, hist, nu_new))

        q = state.q.coef.copy()
        deltas = []
        for iteration in range(1, cfg.picard_max + 1):
            q_next = forcing - 1j * (hist + implicit * self._nu(q))
            scale = sobolev_norm(ChargeSpectrum(L=cfg.L, coef=q_next), 1.5)
            change = sobolev_norm(ChargeSpectrum(L=cfg.L, coef=q_next - q), 1.5)
            deltas.append(change / scale if scale > 0 else change)
            q = q_next
            if deltas[-1] <= cfg.picard_tol:
                break
        else:
            ratio = deltas[-1] / deltas[-2] if len(deltas) > 1 and deltas[-2] > 0 else math.nan
            raise NonContractionError(
                f"Итерации Пикара не сошлись за {cfg.picard_max} на шаге {n1} "
                f"(последнее отношение сжатия {ratio:.3f})",
                ratio=ratio,
                step=n1,
                achieved=deltas[-1],
            )
        ratio = deltas[1] / deltas[0] if len(deltas) > 1 and deltas[0] > 0 else 0.0
        nu_new = self._nu(q)
        logger.debug(f"Шаг {n1}: итераций Пикара {len(deltas)}, отношение {ratio:.3e}")
        return self._advance(state, q, nu_new, len(deltas), ratio, self._dual_gap(state, hist, nu_new))

    def step_linear(self, state: SolverState, alpha: float) -> SolverState:
        """Линейная оболочка ν = αq: q = (F₀ − iΛ_hist)/(1 + iαB) по модам."""
        n1 = state.n + 1
        forcing = self.source(n1).coef
        hist, implicit = self._history(state)
        q = (forcing - 1j * hist) / (1.0 + 1j * alpha * implicit)
        nu_new = alpha * q
        return self._advance(state, q, nu_new, 1, 0.0, self._dual_gap(state, hist, nu_new))

    def run(
        self,
        diagnostics: Optional[Callable[[SolverState], DiagnosticsRecord]] = None,
        on_step: Optional[Callable[[SolverState, Optional[DiagnosticsRecord]], None]] = None,
    ) -> Trajectory:
        """
        Шаги от 0 до T. Для начального и каждого принятого состояния
        строится запись диагностики (если задан diagnostics) и вызывается
        on_step(state, record). Досрочная остановка по отсутствию сжатия
        возвращает частичную траекторию.
        """
        trajectory = Trajectory()

        def accept(state: SolverState) -> None:
            record = diagnostics(state) if diagnostics is not None else None
            if record is not None:
                trajectory.append(record)
            if on_step is not None:
                on_step(state, record)

        state = self.initial_state()
        accept(state)
        for _ in range(self.config.n_steps):
            try:
                state = self.step(state)
            except NonContractionError as e:
                logger.warning(f"Досрочная остановка на шаге {e.step}: {e}")
                trajectory.early_stop = True
                trajectory.stop_reason = str(e)
                trajectory.stop_step = e.step
                trajectory.stop_ratio = e.ratio
                break
            accept(state)
        trajectory.final_state = state
        logger.info(
            f"Прогон завершён: {state.n} из {self.config.n_steps} шагов, метод {self.config.method}"
        )
        return trajectory


def step(state: SolverState, data: InitialData, config: SolverConfig) -> SolverState:
    """Один шаг нелинейной задачи (таблицы весов строятся заново)."""
    return Propagator(data, config).step(state)


def step_linear(state: SolverState, alpha: float, config: SolverConfig, data: InitialData) -> SolverState:
    """Один шаг линейной оболочки силы α."""
    return Propagator(data, config).step_linear(state, alpha)


def run(
    data: InitialData,
    config: SolverConfig,
    on_step: Optional[Callable[[SolverState, Optional[DiagnosticsRecord]], None]] = None,
    monitor_factor: float = 10.0,
) -> Trajectory:
    """
    Прогон от 0 до T с диагностикой на каждом шаге.

    Returns:
        Траектория; при отсутствии сжатия early_stop=True и данные до остановки
    """
    propagator = Propagator(data, config)
    return propagator.run(DiagnosticsBuilder(data, monitor_factor), on_step)
