"""
Анализ/синтез по сферическим гармоникам на сетке Гаусса-Лежандра,
коэффициентные нормы Соболева, нормы Lᵖ и поточечная нелинейность ν.

Коэффициенты хранятся упакованно: индекс (ℓ, m) = ℓ(ℓ+1) + m, |m| ≤ ℓ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from shellnls.core.errors import BandLimitError, DomainError, GridMismatchError
from shellnls.core.specfun import legendre_index, legendre_table
from shellnls.logging_config import get_logger

logger = get_logger(__name__)


def mode_index(ell: int, m: int) -> int:
    """Упакованный индекс коэффициента (ℓ, m)."""
    if abs(m) > ell:
        raise DomainError(f"Индекс |m|={abs(m)} превышает ℓ={ell}")
    return ell * (ell + 1) + m


def mode_count(L: int) -> int:
    return (L + 1) ** 2


@lru_cache(maxsize=64)
def mode_ells(L: int) -> np.ndarray:
    """Массив ℓ для каждого упакованного индекса."""
    ells = np.concatenate([np.full(2 * ell + 1, ell) for ell in range(L + 1)])
    ells.setflags(write=False)
    return ells


@lru_cache(maxsize=64)
def mode_ms(L: int) -> np.ndarray:
    """Массив m для каждого упакованного индекса."""
    ms = np.concatenate([np.arange(-ell, ell + 1) for ell in range(L + 1)])
    ms.setflags(write=False)
    return ms


def japanese_bracket(ell) -> np.ndarray:
    """⟨ℓ⟩ = √(1 + ℓ²)."""
    return np.sqrt(1.0 + np.asarray(ell, dtype=float) ** 2)


@dataclass
class SphereGrid:
    """
    Квадратурная сетка на S²: узлы Гаусса-Лежандра по cos θ и
    равномерные долготы.

    Attributes:
        n_theta: Число узлов по коширине (≥ L_grid + 1)
        n_phi: Число долгот (≥ 2 L_grid + 1)
        L_grid: Степень точности
    """
    n_theta: int
    n_phi: int
    L_grid: int
    theta: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    phi: np.ndarray = field(init=False, repr=False)
    plm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_theta < self.L_grid + 1 or self.n_phi < 2 * self.L_grid + 1:
            raise BandLimitError(
                f"Сетка {self.n_theta}×{self.n_phi} не обеспечивает точность L={self.L_grid}"
            )
        x, w = np.polynomial.legendre.leggauss(self.n_theta)
        self.theta = np.arccos(x)
        self.weights = w
        self.phi = 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi
        self.plm = legendre_table(self.L_grid, x)

    @classmethod
    def for_band_limit(cls, L: int) -> "SphereGrid":
        """Минимальная точная сетка для полосы L (кешируется)."""
        return _cached_grid(L)

    @property
    def dphi(self) -> float:
        return 2.0 * np.pi / self.n_phi

    @property
    def cell_weights(self) -> np.ndarray:
        """Веса w_i · 2π/n_phi формы (n_theta, 1)."""
        return (self.weights * self.dphi)[:, None]


@lru_cache(maxsize=32)
def _cached_grid(L: int) -> SphereGrid:
    logger.debug(f"Создание сетки сферы для L={L}")
    return SphereGrid(n_theta=L + 1, n_phi=2 * L + 1, L_grid=L)


@dataclass
class SphereField:
    """Комплексные значения на сетке формы (n_theta, n_phi)."""
    values: np.ndarray
    grid: SphereGrid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_theta, self.grid.n_phi):
            raise GridMismatchError(
                f"Форма поля {self.values.shape} не совпадает с сеткой "
                f"({self.grid.n_theta}, {self.grid.n_phi})"
            )

    @classmethod
    def from_function(cls, grid: SphereGrid, func) -> "SphereField":
        """Поле из функции func(theta, phi) на узлах сетки."""
        theta, phi = np.meshgrid(grid.theta, grid.phi, indexing="ij")
        return cls(values=func(theta, phi), grid=grid)


@dataclass
class ChargeSpectrum:
    """
    Коэффициенты q_{ℓm}, ℓ ≤ L, в упакованном виде.

    Attributes:
        L: Полоса
        coef: Комплексный массив длины (L+1)²
    """
    L: int
    coef: np.ndarray

    def __post_init__(self):
        self.coef = np.asarray(self.coef, dtype=complex)
        if self.coef.shape != (mode_count(self.L),):
            raise GridMismatchError(
                f"Ожидалось {mode_count(self.L)} коэффициентов, получено {self.coef.shape}"
            )

    @classmethod
    def zeros(cls, L: int) -> "ChargeSpectrum":
        return cls(L=L, coef=np.zeros(mode_count(L), dtype=complex))

    @classmethod
    def single(cls, L: int, ell: int, m: int, value: complex = 1.0) -> "ChargeSpectrum":
        spec = cls.zeros(L)
        spec.coef[mode_index(ell, m)] = value
        return spec

    def __getitem__(self, key) -> complex:
        ell, m = key
        return complex(self.coef[mode_index(ell, m)])

    def copy(self) -> "ChargeSpectrum":
        return ChargeSpectrum(L=self.L, coef=self.coef.copy())

    def scaled(self, factor: complex) -> "ChargeSpectrum":
        return ChargeSpectrum(L=self.L, coef=self.coef * factor)

    def resized(self, L: int) -> "ChargeSpectrum":
        """Обрезка или дополнение нулями до полосы L."""
        out = ChargeSpectrum.zeros(L)
        n = mode_count(min(L, self.L))
        out.coef[:n] = self.coef[:n]
        return out

    @property
    def ells(self) -> np.ndarray:
        return mode_ells(self.L)


def sht_analysis(field: SphereField, L: int) -> ChargeSpectrum:
    """
    coef_{ℓm} = Σ w_i (2π/n_phi) conj(Y_{ℓm}) g: квадратура ∫ Ȳ g dS.

    Raises:
        BandLimitError: L > L_grid
    """
    grid = field.grid
    if L > grid.L_grid:
        raise BandLimitError(f"Полоса L={L} превышает точность сетки L_grid={grid.L_grid}")
    # fourier[i, m mod n_phi] = Σ_j v_ij e^{-i m φ_j} · 2π/n_phi
    fourier = np.fft.fft(field.values, axis=1) * grid.dphi
    weighted = fourier * grid.weights[:, None]
    coef = np.zeros(mode_count(L), dtype=complex)
    for ell in range(L + 1):
        for m in range(0, ell + 1):
            p = grid.plm[legendre_index(ell, m)]
            coef[mode_index(ell, m)] = p @ weighted[:, m]
            if m > 0:
                coef[mode_index(ell, -m)] = (-1) ** m * (p @ weighted[:, grid.n_phi - m])
    return ChargeSpectrum(L=L, coef=coef)


def sht_synthesis(spec: ChargeSpectrum, grid: SphereGrid) -> SphereField:
    """
    Поточечная сумма Σ coef_{ℓm} Y_{ℓm} на узлах сетки.

    Raises:
        BandLimitError: spec.L > grid.L_grid
    """
    if spec.L > grid.L_grid:
        raise BandLimitError(f"Полоса L={spec.L} превышает точность сетки L_grid={grid.L_grid}")
    modes = np.zeros((grid.n_theta, grid.n_phi), dtype=complex)
    for m in range(0, spec.L + 1):
        pos = np.zeros(grid.n_theta, dtype=complex)
        neg = np.zeros(grid.n_theta, dtype=complex)
        for ell in range(m, spec.L + 1):
            p = grid.plm[legendre_index(ell, m)]
            pos += spec.coef[mode_index(ell, m)] * p
            if m > 0:
                neg += (-1) ** m * spec.coef[mode_index(ell, -m)] * p
        modes[:, m] += pos
        if m > 0:
            modes[:, grid.n_phi - m] += neg
    values = np.fft.ifft(modes, axis=1) * grid.n_phi
    return SphereField(values=values, grid=grid)


def sobolev_norm(spec: ChargeSpectrum, mu: float) -> float:
    """√(Σ ⟨ℓ⟩^{2μ} |coef_{ℓm}|²)."""
    weights = japanese_bracket(spec.ells) ** (2.0 * mu)
    return float(np.sqrt(np.sum(weights * np.abs(spec.coef) ** 2)))


def lp_norm(field: SphereField, p: float) -> float:
    """
    Норма Lᵖ(S²) по квадратуре сетки; p = inf даёт максимум по узлам.

    Raises:
        DomainError: p < 1
    """
    if p < 1:
        raise DomainError(f"Показатель нормы должен быть ≥ 1, получено {p}")
    modulus = np.abs(field.values)
    if math.isinf(p):
        return float(modulus.max())
    return float(np.sum(field.grid.cell_weights * modulus ** p) ** (1.0 / p))


def apply_nu(field: SphereField, beta: float, sigma: float) -> SphereField:
    """
    Поточечная нелинейность ν(z) = β|z|^{2σ} z.

    Raises:
        DomainError: σ ≤ 0
    """
    if sigma <= 0:
        raise DomainError(f"Показатель σ должен быть положительным, получено {sigma}")
    z = field.values
    return SphereField(values=beta * np.abs(z) ** (2.0 * sigma) * z, grid=field.grid)


def dealiasing_band(L: int, sigma: float) -> int:
    """Полоса передискретизированной сетки ceil(2σ+2)·L."""
    return max(int(math.ceil(2.0 * sigma + 2.0)) * L, 1)


def dealiased_nu(spec: ChargeSpectrum, beta: float, sigma: float) -> ChargeSpectrum:
    """Спектр ν(q): синтез на передискретизированной сетке, ν, анализ на полосе L."""
    if beta == 0.0:
        return ChargeSpectrum.zeros(spec.L)
    grid = SphereGrid.for_band_limit(dealiasing_band(spec.L, sigma))
    return sht_analysis(apply_nu(sht_synthesis(spec, grid), beta, sigma), spec.L)


# Граница отношения Шаудера для случайных полей полосы L ≤ 16
SCHAUDER_CAP = 10.0


def schauder_ratio(spec: ChargeSpectrum, sigma: float = 0.5) -> float:
    """
    Отношение ‖ν(g)‖_{H^{3/2}} / (‖g‖_∞^{2σ} ‖g‖_{H^{3/2}}) при β = 1.

    Поточечно |ν(g)| ≤ ‖g‖_∞^{2σ}|g|, поэтому отношение не превосходит
    ⟨L⟩^{3/2}‖g‖_{L²}/‖g‖_{H^{3/2}} при любом σ.
    """
    grid = SphereGrid.for_band_limit(dealiasing_band(spec.L, sigma))
    values = sht_synthesis(spec, grid)
    nu_spec = sht_analysis(apply_nu(values, 1.0, sigma), spec.L)
    denom = lp_norm(values, math.inf) ** (2.0 * sigma) * sobolev_norm(spec, 1.5)
    if denom == 0.0:
        return 0.0
    return sobolev_norm(nu_spec, 1.5) / denom


def random_band_limited(L: int, rng: np.random.Generator, real: bool = False) -> ChargeSpectrum:
    """Случайный спектр полосы L (для проверок); real=True даёт вещественное поле."""
    coef = rng.standard_normal(mode_count(L)) + 1j * rng.standard_normal(mode_count(L))
    spec = ChargeSpectrum(L=L, coef=coef)
    if real:
        for ell in range(L + 1):
            spec.coef[mode_index(ell, 0)] = spec.coef[mode_index(ell, 0)].real
            for m in range(1, ell + 1):
                spec.coef[mode_index(ell, -m)] = (-1) ** m * np.conj(spec.coef[mode_index(ell, m)])
    return spec
