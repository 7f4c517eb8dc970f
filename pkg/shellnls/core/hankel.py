"""
Радиальное преобразование Бесселя-Фурье (Ганкеля) по каждой угловой моде.

ũ(k) = ∫₀^∞ J_{ℓ+1/2}(k r)/√(k r) · r² u(r) dr: вещественное ядро,
инволютивное и унитарное на L²(r² dr). Фаза (−i)^ℓ остаётся вызывающим.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from shellnls.core.errors import DomainError, GridMismatchError
from shellnls.core.specfun import bessel_j_half, bessel_j_half_table
from shellnls.core.sphgrid import mode_count
from shellnls.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_K_MAX = 200.0
DEFAULT_R_MAX = 40.0
DEFAULT_PANEL_ORDER = 64

# число узлов k, обрабатываемых за один проход матрицы ядра
_CHUNK = 256


@dataclass
class RadialGrid:
    """
    Составная квадратура Гаусса-Лежандра на [0, k_max].

    Attributes:
        nodes: Узлы (строго возрастают, положительны)
        weights: Веса (положительны)
        panels: Точки разбиения панелей
    """
    nodes: np.ndarray
    weights: np.ndarray
    panels: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.nodes.shape != self.weights.shape:
            raise GridMismatchError("Число узлов и весов радиальной сетки не совпадает")

    @property
    def k_max(self) -> float:
        return float(self.panels[-1])

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @classmethod
    def from_breakpoints(cls, breakpoints, order: int) -> "RadialGrid":
        """Квадратура порядка order на каждой панели [b_i, b_{i+1}]."""
        breakpoints = np.asarray(breakpoints, dtype=float)
        if breakpoints[0] < 0 or np.any(np.diff(breakpoints) <= 0):
            raise DomainError("Точки разбиения должны строго возрастать от неотрицательного начала")
        x, w = np.polynomial.legendre.leggauss(order)
        left = breakpoints[:-1, None]
        half = 0.5 * np.diff(breakpoints)[:, None]
        nodes = left + half * (x[None, :] + 1.0)
        weights = half * w[None, :]
        return cls(nodes=nodes.ravel(), weights=weights.ravel(), panels=breakpoints)

    @classmethod
    def composite(
        cls,
        k_max: float = DEFAULT_K_MAX,
        panel_width: float = 1.0,
        order: int = DEFAULT_PANEL_ORDER,
    ) -> "RadialGrid":
        """Равномерные панели ширины ≤ panel_width на [0, k_max]."""
        if k_max <= 0:
            raise DomainError(f"Граница сетки должна быть положительной, получено {k_max}")
        n_panels = max(int(np.ceil(k_max / panel_width)), 1)
        return cls.from_breakpoints(np.linspace(0.0, k_max, n_panels + 1), order)

    @classmethod
    def phase_resolving(cls, k_max: float, horizon: float, order: int = 12) -> "RadialGrid":
        """
        Панели, на которых фаза e^{−ik²τ} при τ ≤ horizon меняется
        не более чем на 2π: k_{i+1} = min(k_i + 1, √(k_i² + 2π/horizon)).
        """
        if k_max <= 0 or horizon <= 0:
            raise DomainError("Требуются k_max > 0 и horizon > 0")
        step = 2.0 * np.pi / horizon
        points = [0.0]
        while points[-1] < k_max:
            k = points[-1]
            points.append(min(k + 1.0, np.sqrt(k * k + step), k_max))
        return cls.from_breakpoints(np.array(points), order)


@dataclass
class RadialSpectrum:
    """
    Частотные профили всех мод (ℓ, m), ℓ ≤ L, на узлах RadialGrid.

    Attributes:
        L: Полоса
        grid: Частотная сетка
        data: Комплексный массив формы ((L+1)², grid.size)
    """
    L: int
    grid: RadialGrid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        expected = (mode_count(self.L), self.grid.size)
        if self.data.shape != expected:
            raise GridMismatchError(f"Форма спектра {self.data.shape}, ожидалось {expected}")

    @classmethod
    def zeros(cls, L: int, grid: RadialGrid) -> "RadialSpectrum":
        return cls(L=L, grid=grid, data=np.zeros((mode_count(L), grid.size), dtype=complex))

    def scaled(self, factor: complex) -> "RadialSpectrum":
        return RadialSpectrum(L=self.L, grid=self.grid, data=self.data * factor)


def _hankel_apply(values: np.ndarray, src: RadialGrid, ell: int, dst_nodes: np.ndarray) -> np.ndarray:
    """Σ_i w_i s_i² J(t s_i)/√(t s_i) v_i для всех t из dst_nodes."""
    values = np.asarray(values)
    if values.shape[-1] != src.size:
        raise GridMismatchError(
            f"Длина профиля {values.shape[-1]} не совпадает с сеткой ({src.size})"
        )
    weighted = values * (src.weights * src.nodes ** 2)
    out = np.zeros(values.shape[:-1] + (dst_nodes.size,), dtype=np.result_type(values, float))
    for start in range(0, dst_nodes.size, _CHUNK):
        t = dst_nodes[start:start + _CHUNK]
        x = np.outer(t, src.nodes)
        kernel = bessel_j_half_table(ell, x)[ell] / np.sqrt(x)
        out[..., start:start + _CHUNK] = weighted @ kernel.T
    return out


def hankel_forward(profile, r_grid: RadialGrid, ell: int, k_grid: RadialGrid) -> np.ndarray:
    """
    Прямое преобразование радиального профиля моды ℓ.

    Args:
        profile: Значения u(r) на узлах r_grid (последняя ось)
        r_grid: Радиальная сетка
        ell: Угловой порядок
        k_grid: Частотная сетка

    Returns:
        ũ(k_j) на узлах k_grid

    Raises:
        GridMismatchError: длина профиля не совпадает с r_grid
    """
    return _hankel_apply(profile, r_grid, ell, k_grid.nodes)


def hankel_inverse(spectrum, k_grid: RadialGrid, ell: int, r_grid: RadialGrid) -> np.ndarray:
    """Обратное преобразование (то же ядро: преобразование инволютивно)."""
    return _hankel_apply(spectrum, k_grid, ell, r_grid.nodes)


def shell_transform(ell: int, k):
    """
    Символ поверхностной меры на единичной сфере: J_{ℓ+1/2}(k)/√k.

    Raises:
        DomainError: k ≤ 0
    """
    value = bessel_j_half(ell, k)
    return value / np.sqrt(k)


def shell_table(L: int, k: np.ndarray) -> np.ndarray:
    """Таблица J_{ℓ+1/2}(k)/√k формы (L+1, k.size)."""
    return bessel_j_half_table(L, k) / np.sqrt(k)


def plancherel_l2(spec: RadialSpectrum) -> float:
    """√(Σ_{ℓm} Σ_j w_j k_j² |data|²): норма поля в L²(ℝ³)."""
    w = spec.grid.weights * spec.grid.nodes ** 2
    return float(np.sqrt(np.sum(w * np.abs(spec.data) ** 2)))


def radial_l2(profile, r_grid: RadialGrid) -> float:
    """Норма профиля в L²(r² dr)."""
    return float(np.sqrt(np.sum(r_grid.weights * r_grid.nodes ** 2 * np.abs(profile) ** 2)))


def default_r_grid(r_max: Optional[float] = None) -> RadialGrid:
    """Радиальная сетка по умолчанию: 64 узла на единичную панель до r_max."""
    return RadialGrid.composite(r_max or DEFAULT_R_MAX, 1.0, DEFAULT_PANEL_ORDER)
