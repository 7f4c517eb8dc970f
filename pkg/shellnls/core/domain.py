"""
Допустимые начальные данные ψ₀ = φ₀^λ − G^λ ν(q₀) из области оператора:
ганкелево представление регулярной части, след на сфере и неподвижная
точка условия совместности следа q + T^λ ν(q) = η.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from shellnls.core.errors import BandLimitError, DomainError, NonContractionError
from shellnls.core.hankel import RadialGrid, RadialSpectrum, shell_table
from shellnls.core.kernels import t_lambda
from shellnls.core.profiles import BaseRadialProfile
from shellnls.core.specfun import bessel_ik_product
from shellnls.core.sphgrid import ChargeSpectrum, dealiased_nu, mode_ells, mode_index, sobolev_norm
from shellnls.logging_config import get_logger

logger = get_logger(__name__)

TRACE_TOL = 1e-10
MAX_ITERATIONS = 200
MAX_DOUBLINGS = 20
SLOW_CONTRACTION = 0.9


def green_kernel(x_dist, lam: float):
    """
    Функция Грина e^{−√λ|x|}/(4π|x|).

    Raises:
        DomainError: |x| ≤ 0 или λ ≤ 0
    """
    dist = np.asarray(x_dist, dtype=float)
    if np.any(dist <= 0):
        raise DomainError("Функция Грина не определена на диагонали (|x| = 0)")
    if lam <= 0:
        raise DomainError(f"Параметр λ должен быть положительным, получено {lam}")
    value = np.exp(-math.sqrt(lam) * dist) / (4.0 * math.pi * dist)
    return float(value) if value.ndim == 0 else value


def green_radial_profile(ell: int, lam: float, r):
    """
    Радиальный профиль потенциала G^λ(Y_{ℓm}δ_{S²}):
    I_{ℓ+1/2}(√λ r_<) K_{ℓ+1/2}(√λ r_>) / √r.
    """
    if lam <= 0:
        raise DomainError(f"Параметр λ должен быть положительным, получено {lam}")
    r = np.asarray(r, dtype=float)
    root = math.sqrt(lam)
    value = bessel_ik_product(ell, root * np.minimum(r, 1.0), root * np.maximum(r, 1.0)) / np.sqrt(r)
    return float(value) if np.ndim(value) == 0 else value


@dataclass
class GreenShell:
    """
    Ганкелев профиль (k²+λ)^{−1}·J_{ℓ+1/2}(k)/√k потенциала единичной
    плотности Y_{ℓm} на сфере.

    Attributes:
        lam: Параметр λ
        L: Полоса
        grid: Частотная сетка
        profile: Массив формы (L+1, grid.size)
    """
    lam: float
    L: int
    grid: RadialGrid
    profile: np.ndarray


def green_shell(lam: float, grid: RadialGrid, L: int) -> GreenShell:
    if lam <= 0:
        raise DomainError(f"Параметр λ должен быть положительным, получено {lam}")
    k = grid.nodes
    return GreenShell(lam=lam, L=L, grid=grid, profile=shell_table(L, k) / (k ** 2 + lam))


def green_shell_trace(shell: GreenShell, ell: int) -> float:
    """
    След потенциала плотности Y_{ℓm}: Σ w k² shell·profile плюс хвост
    (1/π)∫_K^∞ dk/(k²+λ); должен совпасть с T^λ_ℓ.
    """
    k = shell.grid.nodes
    shells = shell_table(ell, k)[ell]
    head = float(np.sum(shell.grid.weights * k ** 2 * shells * shell.profile[ell]))
    root = math.sqrt(shell.lam)
    tail = (0.5 * math.pi - math.atan(shell.grid.k_max / root)) / (math.pi * root)
    return head + tail


def mode_shells(L: int, grid: RadialGrid) -> np.ndarray:
    """J_{ℓ+1/2}(k)/√k для каждой упакованной моды, форма ((L+1)², n)."""
    return shell_table(L, grid.nodes)[mode_ells(L)]


def trace_on_sphere(spec: RadialSpectrum) -> ChargeSpectrum:
    """η_{ℓm} = Σ_j w_j k_j² shell(ℓ,k_j) ũ_{ℓm}(k_j): след поля на S²."""
    grid = spec.grid
    weights = grid.weights * grid.nodes ** 2 * mode_shells(spec.L, grid)
    return ChargeSpectrum(L=spec.L, coef=np.sum(weights * spec.data, axis=1))


def single_layer(density: ChargeSpectrum, lam: float, grid: RadialGrid) -> RadialSpectrum:
    """Ганкелево представление G^λ(h δ_{S²}) для плотности h."""
    k = grid.nodes
    profile = mode_shells(density.L, grid) / (k ** 2 + lam)
    return RadialSpectrum(L=density.L, grid=grid, data=profile * density.coef[:, None])


def build_regular_part(profiles: Iterable[BaseRadialProfile], L: int, grid: RadialGrid) -> RadialSpectrum:
    """
    Сумма радиальных профилей в ганкелевом представлении.

    Raises:
        BandLimitError: ℓ профиля превышает полосу L
    """
    spec = RadialSpectrum.zeros(L, grid)
    for profile in profiles:
        if profile.ell > L:
            raise BandLimitError(f"Профиль моды ℓ={profile.ell} выходит за полосу L={L}")
        spec.data[mode_index(profile.ell, profile.m)] += profile.spectrum(grid.nodes)
    return spec


def _t_diagonal(L: int, lam: float) -> np.ndarray:
    values = np.array([t_lambda(ell, lam) for ell in range(L + 1)])
    return values[mode_ells(L)]


def _trace_residual(q: ChargeSpectrum, eta: ChargeSpectrum, t_diag, beta, sigma) -> float:
    nu = dealiased_nu(q, beta, sigma)
    return sobolev_norm(ChargeSpectrum(L=q.L, coef=q.coef + t_diag * nu.coef - eta.coef), 1.5)


def solve_trace_compatibility(
    eta: ChargeSpectrum,
    beta: float,
    sigma: float,
    lambda0: float,
    tol: float = TRACE_TOL,
) -> Tuple[ChargeSpectrum, float, int]:
    """
    Неподвижная точка q = η − T^λ ν(q) с диагональным T^λ.

    λ удваивается, если итерация сжимает медленно (отношение > 0.9),
    не сходится за 200 итераций или нарушает ‖q‖ ≤ 2‖η‖ в H^{3/2}.

    Returns:
        (q₀, λ_used, число итераций при λ_used)

    Raises:
        NonContractionError: после 20 удвоений λ
    """
    if lambda0 <= 0:
        raise DomainError(f"Параметр λ0 должен быть положительным, получено {lambda0}")
    eta_norm = sobolev_norm(eta, 1.5)
    if beta == 0.0 or eta_norm == 0.0:
        return eta.copy(), lambda0, 1

    lam = lambda0
    last_ratio = math.nan
    for doubling in range(MAX_DOUBLINGS + 1):
        t_diag = _t_diagonal(eta.L, lam)
        q = eta.copy()
        previous = math.inf
        failure = None
        for iteration in range(1, MAX_ITERATIONS + 1):
            nu = dealiased_nu(q, beta, sigma)
            updated = ChargeSpectrum(L=eta.L, coef=eta.coef - t_diag * nu.coef)
            delta = sobolev_norm(ChargeSpectrum(L=eta.L, coef=updated.coef - q.coef), 1.5)
            q = updated
            if sobolev_norm(q, 1.5) > 2.0 * eta_norm:
                failure = "норма заряда превысила 2‖η‖"
                break
            if delta <= tol * eta_norm:
                residual = _trace_residual(q, eta, t_diag, beta, sigma)
                logger.debug(
                    f"Совместность следа: λ={lam}, итераций {iteration}, невязка {residual / eta_norm:.2e}"
                )
                return q, lam, iteration
            if math.isfinite(previous) and previous > 0:
                last_ratio = delta / previous
                if iteration > 3 and last_ratio > SLOW_CONTRACTION:
                    failure = f"медленное сжатие (отношение {last_ratio:.3f})"
                    break
            previous = delta
        else:
            failure = f"нет сходимости за {MAX_ITERATIONS} итераций"
        logger.warning(f"Совместность следа при λ={lam}: {failure}; λ удваивается")
        lam *= 2.0
    raise NonContractionError(
        f"Условие совместности следа не решено после {MAX_DOUBLINGS} удвоений λ "
        f"(данные слишком велики для режима сжатия)",
        ratio=last_ratio,
        step=None,
    )


def solve_linear_trace(eta: ChargeSpectrum, alpha: float, lam: float) -> ChargeSpectrum:
    """
    Совместность следа линейной оболочки: q = η / (1 + α T^λ_ℓ) по модам.

    Raises:
        DomainError: 1 + α T^λ_ℓ = 0 (λ совпадает с собственным значением)
    """
    denom = 1.0 + alpha * _t_diagonal(eta.L, lam)
    if np.any(np.abs(denom) < 1e-14):
        raise DomainError(f"Параметр λ={lam} совпадает с собственным значением оболочки α={alpha}")
    return ChargeSpectrum(L=eta.L, coef=eta.coef / denom)


@dataclass
class InitialData:
    """
    Начальные данные в области оператора.

    Attributes:
        lam: Параметр разложения λ
        beta: Сила нелинейности β
        sigma: Показатель σ
        phi0: Регулярная часть φ₀^λ (ганкелево представление)
        q0: Начальный заряд
        eta: След регулярной части на S²
        alpha: Сила линейной оболочки (None для нелинейной модели)
        iterations: Число итераций совместности следа
    """
    lam: float
    beta: float
    sigma: float
    phi0: RadialSpectrum
    q0: ChargeSpectrum
    eta: ChargeSpectrum
    alpha: Optional[float] = None
    iterations: int = 0

    @property
    def L(self) -> int:
        return self.q0.L

    @property
    def grid(self) -> RadialGrid:
        return self.phi0.grid

    @property
    def is_linear(self) -> bool:
        return self.alpha is not None

    def nu_of(self, q: ChargeSpectrum) -> ChargeSpectrum:
        """Плотность скачка: α q для линейной оболочки, иначе ν(q)."""
        if self.is_linear:
            return q.scaled(self.alpha)
        return dealiased_nu(q, self.beta, self.sigma)

    @property
    def nu0(self) -> ChargeSpectrum:
        return self.nu_of(self.q0)

    def trace_residual(self) -> float:
        """‖q₀ + T^λ ν(q₀) − η‖_{H^{3/2}} / ‖η‖_{H^{3/2}} (абсолютная при η = 0)."""
        t_diag = _t_diagonal(self.L, self.lam)
        diff = self.q0.coef + t_diag * self.nu0.coef - self.eta.coef
        norm = sobolev_norm(self.eta, 1.5)
        value = sobolev_norm(ChargeSpectrum(L=self.L, coef=diff), 1.5)
        return value / norm if norm > 0 else value

    def field(self) -> RadialSpectrum:
        """ψ̃₀ = φ̃₀ − G^λ ν(q₀) в ганкелевом представлении."""
        singular = single_layer(self.nu0, self.lam, self.grid)
        return RadialSpectrum(L=self.L, grid=self.grid, data=self.phi0.data - singular.data)


def assemble_initial_state(
    phi0: RadialSpectrum,
    beta: float,
    sigma: float,
    lambda0: float,
    alpha: Optional[float] = None,
) -> InitialData:
    """
    Начальные данные по регулярной части: след η, затем q₀ из условия
    совместности (нелинейного или линейного при заданном α).

    Raises:
        NonContractionError: условие совместности не решено
    """
    if sigma <= 0:
        raise DomainError(f"Показатель σ должен быть положительным, получено {sigma}")
    eta = trace_on_sphere(phi0)
    if alpha is not None:
        q0 = solve_linear_trace(eta, alpha, lambda0)
        lam, iterations = lambda0, 1
    else:
        q0, lam, iterations = solve_trace_compatibility(eta, beta, sigma, lambda0)
        if lam != lambda0:
            logger.warning(f"Совместность следа достигнута при увеличенном λ={lam} (запрошено {lambda0})")
    logger.info(
        f"Начальные данные: λ={lam}, ‖η‖_{{3/2}}={sobolev_norm(eta, 1.5):.6e}, "
        f"‖q₀‖_{{3/2}}={sobolev_norm(q0, 1.5):.6e}"
    )
    return InitialData(
        lam=lam, beta=beta, sigma=sigma, phi0=phi0, q0=q0, eta=eta,
        alpha=alpha, iterations=iterations,
    )


def change_lambda(data: InitialData, lam: float) -> InitialData:
    """
    Те же ψ₀ в разложении с другим λ: φ₀' = ψ₀ + G^{λ'} ν(q₀), затем
    совместность следа решается заново.

    Raises:
        DomainError: λ не положителен
    """
    if not lam > 0:
        raise DomainError(f"Параметр λ должен быть положительным, получено {lam}")
    field = data.field()
    singular = single_layer(data.nu0, lam, data.grid)
    phi0 = RadialSpectrum(L=data.L, grid=data.grid, data=field.data + singular.data)
    return assemble_initial_state(phi0, data.beta, data.sigma, lam, data.alpha)
