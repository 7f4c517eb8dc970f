"""
Реконструкция поля в ганкелевом представлении и физическая диагностика:
масса, энергия, условие скачка и согласованность следа с зарядом.
Все интегралы по ℝ³ берутся в частотной области.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from shellnls.core.domain import InitialData, green_radial_profile, mode_shells, trace_on_sphere
from shellnls.core.errors import DomainError
from shellnls.core.hankel import RadialGrid, RadialSpectrum, hankel_inverse, plancherel_l2
from shellnls.core.sphgrid import (
    ChargeSpectrum,
    SphereGrid,
    dealiased_nu,
    dealiasing_band,
    lp_norm,
    sht_synthesis,
    sobolev_norm,
)
from shellnls.core.state import DiagnosticsRecord, SolverState
from shellnls.logging_config import get_logger

logger = get_logger(__name__)

JUMP_OFFSET = 1e-3


def reconstruct_field(state: SolverState, data: InitialData) -> RadialSpectrum:
    """
    ψ̃(t_n, k) = e^{−ik²t_n}[ψ̃₀(k) − i·shell(ℓ,k)·H(t_n, k)].

    Args:
        state: Состояние с актуальными аккумуляторами H
        data: Начальные данные

    Returns:
        Ганкелево представление поля на сетке данных
    """
    grid = data.grid
    psi0 = data.field().data
    if state.H is None or state.n == 0:
        return RadialSpectrum(L=data.L, grid=grid, data=psi0)
    phase = np.exp(-1j * grid.nodes ** 2 * state.t)
    shells = mode_shells(data.L, grid)
    return RadialSpectrum(L=data.L, grid=grid, data=phase * (psi0 - 1j * shells * state.H))


def mass(psi: RadialSpectrum) -> float:
    return plancherel_l2(psi) ** 2


def grid_tail(L: int, grid: RadialGrid) -> np.ndarray:
    """∫_K^∞ J²_{ℓ+1/2}(k)/k dk для ℓ ≤ L: 1/(2ℓ+1) минус сумма по сетке."""
    k = grid.nodes
    shells = mode_shells(L, grid)[[ell * ell + ell for ell in range(L + 1)]]
    head = shells ** 2 @ grid.weights
    return 1.0 / (2.0 * np.arange(L + 1) + 1.0) - head


def kinetic(psi: RadialSpectrum, nu: Optional[ChargeSpectrum] = None) -> float:
    """
    ‖∇ψ‖² = Σ w k⁴ |ψ̃|². При заданной плотности ν добавляется хвост
    сингулярной части за k_max: |ν_{ℓm}|²·∫_K^∞ J²/k dk.
    """
    grid = psi.grid
    k_sq = grid.nodes ** 2
    value = float(np.sum(grid.weights * k_sq * k_sq * np.abs(psi.data) ** 2))
    if nu is not None:
        tail = grid_tail(psi.L, grid)[nu.ells]
        value += float(np.sum(tail * np.abs(nu.coef) ** 2))
    return value


def potential(q: ChargeSpectrum, beta: float, sigma: float) -> float:
    """(β/(σ+1))‖q‖^{2σ+2} в L^{2σ+2}(S²) на передискретизированной сетке."""
    if beta == 0.0:
        return 0.0
    if sigma <= 0:
        raise DomainError(f"Показатель σ должен быть положительным, получено {sigma}")
    grid = SphereGrid.for_band_limit(dealiasing_band(q.L, sigma))
    p = 2.0 * sigma + 2.0
    return beta / (sigma + 1.0) * lp_norm(sht_synthesis(q, grid), p) ** p


def energy(
    psi: RadialSpectrum,
    q: ChargeSpectrum,
    beta: float,
    sigma: float,
    nu: Optional[ChargeSpectrum] = None,
) -> float:
    """Σ w k⁴|ψ̃|² + (β/(σ+1))‖q‖^{2σ+2}_{L^{2σ+2}(S²)}."""
    return kinetic(psi, nu) + potential(q, beta, sigma)


def field_trace(psi: RadialSpectrum, nu: Optional[ChargeSpectrum] = None) -> ChargeSpectrum:
    """
    След реконструкции на S². Вклад частот за k_max приближается
    сингулярной асимптотикой ψ̃ ≈ −shell·ν/k²: −ν_{ℓm}·∫_K^∞ J²/k dk.
    """
    trace = trace_on_sphere(psi)
    if nu is None:
        return trace
    tail = grid_tail(psi.L, psi.grid)[trace.ells]
    return ChargeSpectrum(L=trace.L, coef=trace.coef - tail * nu.coef)


def charge_consistency(psi: RadialSpectrum, q: ChargeSpectrum, nu: Optional[ChargeSpectrum] = None) -> float:
    """‖tr ψ − q‖_{L²(S²)} / ‖q‖_{L²(S²)} (абсолютная при q = 0)."""
    diff = field_trace(psi, nu).coef - q.coef
    norm = float(np.linalg.norm(q.coef))
    value = float(np.linalg.norm(diff))
    return value / norm if norm > 0 else value


def _one_sided_jump(values: np.ndarray, h: float) -> np.ndarray:
    """(∂ᵣ⁺ − ∂ᵣ⁻)u при r = 1 по значениям в 1−2h, 1−h, 1, 1+h, 1+2h."""
    inner2, inner1, center, outer1, outer2 = (values[..., i] for i in range(5))
    outer = (-3.0 * center + 4.0 * outer1 - outer2) / (2.0 * h)
    inner = (3.0 * center - 4.0 * inner1 + inner2) / (2.0 * h)
    return outer - inner


def normal_jump(psi: RadialSpectrum, lam: float = 1.0, h: float = JUMP_OFFSET) -> ChargeSpectrum:
    """
    Скачок нормальной производной радиальных профилей на S².

    Профиль разделяется на потенциал простого слоя плотности d (подгонка
    ψ̃ ≈ −shell·d/(k²+λ) на [k_max/2, k_max], профиль в замкнутой форме)
    и гладкий остаток, который синтезируется квадратурой по сетке.
    """
    if not 0 < h < 0.25:
        raise DomainError(f"Смещение разностной схемы должно лежать в (0, 1/4), получено {h}")
    grid = psi.grid
    k = grid.nodes
    L = psi.L
    green = mode_shells(L, grid) / (k ** 2 + lam)
    high = k >= 0.5 * grid.k_max
    fit_w = (grid.weights * k ** 2)[high]
    g_high = green[:, high]
    density = -np.sum(fit_w * g_high * psi.data[:, high], axis=1) / np.sum(fit_w * g_high ** 2, axis=1)
    remainder = psi.data + green * density[:, None]

    offsets = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * h
    r = 1.0 + offsets
    points = RadialGrid(nodes=r, weights=np.ones_like(r), panels=np.array([r[0], r[-1]]))
    jump = np.zeros(psi.data.shape[0], dtype=complex)
    for ell in range(L + 1):
        rows = slice(ell * ell, (ell + 1) * (ell + 1))
        smooth = hankel_inverse(remainder[rows], grid, ell, points)
        layer = -np.outer(density[rows], green_radial_profile(ell, lam, r))
        jump[rows] = _one_sided_jump(smooth + layer, h)
    return ChargeSpectrum(L=L, coef=jump)


def jump_residual(
    psi: RadialSpectrum,
    q: ChargeSpectrum,
    beta: float,
    sigma: float,
    nu: Optional[ChargeSpectrum] = None,
    lam: float = 1.0,
    h: float = JUMP_OFFSET,
) -> float:
    """
    ‖(∂ᵣ⁺ − ∂ᵣ⁻)u − ν(q)‖_{L²(S²)} / ‖ν(q)‖_{L²(S²)} (абсолютная при ν(q) = 0).

    Args:
        nu: Готовая плотность скачка (линейная оболочка); иначе ν(q)
        lam: Параметр простого слоя для разделения профиля
    """
    if nu is None:
        nu = dealiased_nu(q, beta, sigma)
    diff = normal_jump(psi, lam, h).coef - nu.coef
    norm = float(np.linalg.norm(nu.coef))
    value = float(np.linalg.norm(diff))
    return value / norm if norm > 0 else value


class DiagnosticsBuilder:
    """
    Строит DiagnosticsRecord по состоянию решателя.
    Монитор роста отмечает ‖q‖_{H^{3/2}} > monitor_factor·‖q₀‖_{H^{3/2}}.
    """

    def __init__(self, data: InitialData, monitor_factor: float = 10.0):
        if monitor_factor <= 1.0:
            raise DomainError(f"Порог монитора роста должен быть больше 1, получено {monitor_factor}")
        self.data = data
        self.monitor_factor = monitor_factor
        self.q0_h32 = sobolev_norm(data.q0, 1.5)
        self.sup_grid = SphereGrid.for_band_limit(dealiasing_band(data.L, data.sigma))
        self._flagged = False

    def _potential(self, q: ChargeSpectrum) -> float:
        if self.data.is_linear:
            return self.data.alpha * float(np.sum(np.abs(q.coef) ** 2))
        return potential(q, self.data.beta, self.data.sigma)

    def __call__(self, state: SolverState) -> DiagnosticsRecord:
        data = self.data
        q = state.q
        nu = ChargeSpectrum(L=data.L, coef=state.nu_current)
        psi = reconstruct_field(state, data)
        kin = kinetic(psi, nu)
        pot = self._potential(q)
        q_h32 = sobolev_norm(q, 1.5)
        flag = q_h32 > self.monitor_factor * self.q0_h32 if self.q0_h32 > 0 else False
        if flag and not self._flagged:
            logger.warning(
                f"Рост ‖q‖_{{3/2}}: {q_h32:.3e} превышает {self.monitor_factor}·‖q₀‖ на шаге {state.n}"
            )
        self._flagged = self._flagged or flag
        return DiagnosticsRecord(
            t=state.t,
            step=state.n,
            mass=mass(psi),
            kinetic=kin,
            potential=pot,
            energy=kin + pot,
            q_h32=q_h32,
            q_sup=lp_norm(sht_synthesis(q, self.sup_grid), math.inf),
            jump_residual=jump_residual(psi, q, data.beta, data.sigma, nu=nu, lam=data.lam),
            trace_residual=charge_consistency(psi, q, nu),
            picard_ratio=state.picard_ratio,
            picard_iterations=state.picard_iterations,
            dual_path_gap=state.dual_path_gap,
            flag_growth=bool(flag),
        )
