"""
Радиальные профили регулярной части начальных данных.

Профиль задаёт вклад u_{ℓm}(r) = √(4π)·a·g(r) в моду (ℓ, m); при ℓ = 0
значение поля в ℝ³ равно a·g(r). Новые типы регистрируются в PROFILE_MAP.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Dict, Optional, Type

import numpy as np

from shellnls.core.errors import ConfigError, DomainError
from shellnls.core.hankel import RadialGrid, hankel_forward, shell_transform
from shellnls.core.kernels import bound_state_lambda
from shellnls.core.specfun import bessel_ik_product
from shellnls.logging_config import get_logger

logger = get_logger(__name__)

# Порог exp(−_DECAY_EXPONENT), ниже которого выборки считаются пренебрежимыми
_DECAY_EXPONENT = 40.0


class BaseRadialProfile(ABC):
    """
    Базовый класс радиальных профилей.
    Наследники реализуют radial(); spectrum() по умолчанию считается
    численным преобразованием Ганкеля.
    """

    type_name = "base"

    def __init__(self, params: dict, context: Optional[dict] = None):
        """
        Args:
            params: Параметры профиля (amplitude, width, center, ell, m, ...)
            context: Физический контекст (lambda, alpha)
        """
        self.params = params
        self.context = context or {}
        self.amplitude = complex(params.get("amplitude", 1.0))
        self.width = float(params.get("width", 1.0))
        self.center = float(params.get("center", 0.0))
        self.ell = int(params.get("ell", 0))
        self.m = int(params.get("m", 0))
        if self.width <= 0:
            raise DomainError(f"Ширина профиля должна быть положительной, получено {self.width}")
        if abs(self.m) > self.ell:
            raise DomainError(f"Профиль: |m|={abs(self.m)} превышает ℓ={self.ell}")

    @property
    def coefficient(self) -> complex:
        return math.sqrt(4.0 * math.pi) * self.amplitude

    @abstractmethod
    def radial(self, r: np.ndarray) -> np.ndarray:
        """Форма g(r) без амплитуды."""

    def radial_extent(self) -> float:
        """Радиус, за которым g(r) пренебрежимо мала."""
        return self.center + math.sqrt(2.0 * _DECAY_EXPONENT) * self.width + 1.0

    def bandwidth(self) -> float:
        """Частота, за которой ĝ(k) пренебрежимо мала."""
        return math.sqrt(2.0 * _DECAY_EXPONENT) / self.width + 1.0

    def transform(self, k: np.ndarray) -> np.ndarray:
        """ĝ(k): преобразование Ганкеля формы g (численно)."""
        k = np.asarray(k, dtype=float)
        r_grid = RadialGrid.composite(self.radial_extent(), 1.0, 64)
        values = self.radial(r_grid.nodes)
        k_grid = RadialGrid(nodes=k, weights=np.ones_like(k), panels=np.array([0.0, float(k.max())]))
        return hankel_forward(values, r_grid, self.ell, k_grid)

    def spectrum(self, k: np.ndarray) -> np.ndarray:
        """Вклад в ũ_{ℓm}(k) с учётом амплитуды; ноль выше bandwidth()."""
        k = np.asarray(k, dtype=float)
        out = np.zeros(k.shape, dtype=complex)
        inside = k <= self.bandwidth()
        if np.any(inside):
            out[inside] = self.coefficient * self.transform(k[inside])
        return out


class GaussianProfile(BaseRadialProfile):
    """g(r) = exp(−(r−c)²/(2w²)); при c = 0, ℓ = 0 преобразование в замкнутой форме."""

    type_name = "gaussian"

    @property
    def b(self) -> float:
        return 0.5 / self.width ** 2

    def radial(self, r):
        return np.exp(-self.b * (np.asarray(r, dtype=float) - self.center) ** 2)

    def transform(self, k):
        if self.center == 0.0 and self.ell == 0:
            k = np.asarray(k, dtype=float)
            return (2.0 * self.b) ** -1.5 * np.exp(-k ** 2 / (4.0 * self.b))
        return super().transform(k)


class PolyGaussianProfile(GaussianProfile):
    """g(r) = r^n exp(−r²/(2w²)); при n = ℓ преобразование k^ℓ(2b)^{−(ℓ+3/2)}e^{−k²/(4b)}."""

    type_name = "poly_gaussian"

    def __init__(self, params: dict, context: Optional[dict] = None):
        super().__init__(params, context)
        self.power = int(params.get("power", self.ell))
        if self.power < 0:
            raise DomainError(f"Степень полинома должна быть неотрицательной, получено {self.power}")
        self.center = 0.0

    def radial_extent(self) -> float:
        return math.sqrt(2.0 * (_DECAY_EXPONENT + 2 * self.power)) * self.width + 1.0

    def bandwidth(self) -> float:
        return math.sqrt(4.0 * self.b * (_DECAY_EXPONENT + 2 * self.power)) + 1.0

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return r ** self.power * np.exp(-self.b * r ** 2)

    def transform(self, k):
        if self.power == self.ell:
            k = np.asarray(k, dtype=float)
            two_b = 2.0 * self.b
            return k ** self.ell * two_b ** -(self.ell + 1.5) * np.exp(-k ** 2 / (2.0 * two_b))
        return BaseRadialProfile.transform(self, k)


class BoundStateProfile(BaseRadialProfile):
    """
    Регулярная часть собственной функции линейной оболочки силы α.

    ψ* = G^{λ*}(h Y_{ℓm}δ) с 1 + α T^{λ*}_ℓ = 0; при разложении с параметром λ
    регулярная часть равна G^{λ*}h − G^λ h, в частотах
    h·shell(ℓ,k)·(λ − λ*)/((k²+λ*)(k²+λ)).
    """

    type_name = "bound_state"

    def __init__(self, params: dict, context: Optional[dict] = None):
        super().__init__(params, context)
        alpha = self.context.get("alpha")
        if alpha is None:
            raise ConfigError("Профиль bound_state требует параметр alpha в секции [physics]",
                              key="alpha")
        self.lam = float(self.context.get("lambda", 1.0))
        self.lam_star = bound_state_lambda(float(alpha), self.ell)
        if abs(self.lam - self.lam_star) < 1e-12:
            raise DomainError("Параметр разложения λ совпадает с λ* связанного состояния")

    @property
    def coefficient(self) -> complex:
        return self.amplitude

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        r_in = np.minimum(r, 1.0)
        r_out = np.maximum(r, 1.0)
        star = bessel_ik_product(self.ell, math.sqrt(self.lam_star) * r_in, math.sqrt(self.lam_star) * r_out)
        plain = bessel_ik_product(self.ell, math.sqrt(self.lam) * r_in, math.sqrt(self.lam) * r_out)
        return (star - plain) / np.sqrt(r)

    def bandwidth(self) -> float:
        return math.inf

    def transform(self, k):
        k = np.asarray(k, dtype=float)
        k2 = k ** 2
        return shell_transform(self.ell, k) * (self.lam - self.lam_star) / ((k2 + self.lam_star) * (k2 + self.lam))


PROFILE_MAP: Dict[str, Type[BaseRadialProfile]] = {
    GaussianProfile.type_name: GaussianProfile,
    PolyGaussianProfile.type_name: PolyGaussianProfile,
    BoundStateProfile.type_name: BoundStateProfile,
}


def create_profile(params: dict, context: Optional[dict] = None) -> BaseRadialProfile:
    """
    Создаёт профиль по полю params["type"].

    Raises:
        ConfigError: неизвестный тип
    """
    type_name = params.get("type", "gaussian")
    profile_class = PROFILE_MAP.get(type_name)
    if profile_class is None:
        raise ConfigError(
            f"Неизвестный тип профиля '{type_name}'. Доступные: {', '.join(sorted(PROFILE_MAP))}",
            key="type",
        )
    logger.debug(f"Создание профиля {type_name} для моды ({params.get('ell', 0)}, {params.get('m', 0)})")
    return profile_class(params, context)
