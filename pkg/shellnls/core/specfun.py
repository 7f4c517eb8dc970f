"""
Специальные функции полуцелого порядка и сферические гармоники.

Функции Бесселя J_{ℓ+1/2} вычисляются через сферические функции j_ℓ:
восходящая рекурсия там, где ℓ ≤ x, и нисходящая (цепная дробь Миллера
для отношений j_ℓ/j_{ℓ-1}) выше точки поворота. Модифицированные функции
I, K берутся из scipy.special в масштабированной форме (ive, kve), так что
слитое произведение I·K не переполняется. Присоединённые функции
Лежандра нормированы "на лету".

Все функции чистые и детерминированные.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.special import gammaln, ive, kve

from shellnls.core.errors import DomainError, OrderError
from shellnls.logging_config import get_logger

logger = get_logger(__name__)

# Жёсткий предел порядка ℓ
L_MAX_SUPPORTED = 256

# Запас индексов для старта нисходящей рекурсии
_MILLER_MARGIN = 60


@dataclass(frozen=True)
class HalfIntOrder:
    """
    Полуцелый порядок ν = ℓ + 1/2.

    Attributes:
        ell: Неотрицательное целое ℓ (ℓ ≤ L_MAX_SUPPORTED)
    """
    ell: int

    def __post_init__(self):
        _check_order(self.ell)

    @property
    def nu(self) -> float:
        return self.ell + 0.5


OrderLike = Union[int, HalfIntOrder]


def _ell_of(order: OrderLike) -> int:
    if isinstance(order, HalfIntOrder):
        return order.ell
    ell = int(order)
    if ell != order:
        raise OrderError(f"Порядок ℓ должен быть целым, получено {order}")
    _check_order(ell)
    return ell


def _check_order(ell: int) -> None:
    if ell < 0:
        raise OrderError(f"Порядок ℓ должен быть неотрицательным, получено {ell}")
    if ell > L_MAX_SUPPORTED:
        raise OrderError(f"Порядок ℓ={ell} превышает предел {L_MAX_SUPPORTED}")


def _positive_argument(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"Аргумент {name} должен быть конечным")
    if np.any(arr <= 0.0):
        raise DomainError(f"Аргумент {name} должен быть положительным")
    return arr


# ---------------------------------------------------------------------------
# Сферические функции Бесселя j_ℓ и J_{ℓ+1/2}
# ---------------------------------------------------------------------------

def _jn_ratios(ell_max: int, x: np.ndarray, n_start: int) -> np.ndarray:
    """
    Отношения r_ℓ = j_ℓ(x)/j_{ℓ-1}(x), ℓ = 1..ell_max, цепной дробью
    r_ℓ = x / (2ℓ+1 - x r_{ℓ+1}) со старта r_{n_start+1} = 0.
    """
    ratios = np.empty((ell_max,) + x.shape)
    r = np.zeros_like(x)
    with np.errstate(all="ignore"):
        for k in range(n_start, 0, -1):
            r = x / (2 * k + 1 - x * r)
            if k <= ell_max:
                ratios[k - 1] = r
    return ratios


def spherical_jn_table(ell_max: int, x) -> np.ndarray:
    """
    Таблица j_ℓ(x) для всех ℓ = 0..ell_max.

    Args:
        ell_max: Максимальный порядок
        x: Положительные аргументы (скаляр или массив)

    Returns:
        Массив формы (ell_max+1, *x.shape)
    """
    _check_order(ell_max)
    x = _positive_argument(x)
    out = np.zeros((ell_max + 1,) + x.shape)
    with np.errstate(all="ignore"):
        out[0] = np.sin(x) / x
        if ell_max == 0:
            return out

        # ℓ ≤ anchor: восходящая рекурсия устойчива
        anchor = np.minimum(np.floor(x), ell_max).astype(int)
        j1 = np.sin(x) / x ** 2 - np.cos(x) / x
        out[1] = np.where(anchor >= 1, j1, 0.0)
        for ell in range(1, ell_max):
            upward = (2 * ell + 1) / x * out[ell] - out[ell - 1]
            out[ell + 1] = np.where(anchor >= ell + 1, upward, 0.0)
        if np.all(anchor >= ell_max):
            return out

        ratios = _jn_ratios(ell_max, x, ell_max + _MILLER_MARGIN)
        for ell in range(1, ell_max + 1):
            below = anchor < ell
            out[ell] = np.where(below, out[ell - 1] * ratios[ell - 1], out[ell])
    return out


def spherical_jn_upward(ell_max: int, x) -> np.ndarray:
    """Таблица j_ℓ(x) только восходящей рекурсией (для проверки перекрытия)."""
    x = _positive_argument(x)
    out = np.zeros((ell_max + 1,) + x.shape)
    with np.errstate(all="ignore"):
        out[0] = np.sin(x) / x
        if ell_max >= 1:
            out[1] = np.sin(x) / x ** 2 - np.cos(x) / x
        for ell in range(1, ell_max):
            out[ell + 1] = (2 * ell + 1) / x * out[ell] - out[ell - 1]
    return out


def spherical_jn_downward(ell_max: int, x) -> np.ndarray:
    """
    Таблица j_ℓ(x) только нисходящей рекурсией Миллера.
    Нормировка по j_0 или j_1 (по большему модулю).
    """
    x = _positive_argument(x)
    n_start = int(max(ell_max, 1.5 * float(np.max(x)))) + _MILLER_MARGIN
    ratios = _jn_ratios(max(ell_max, 1), x, n_start)
    out = np.zeros((ell_max + 1,) + x.shape)
    with np.errstate(all="ignore"):
        j0 = np.sin(x) / x
        j1_closed = np.sin(x) / x ** 2 - np.cos(x) / x
        use_j1 = (np.abs(j1_closed) > np.abs(j0)) & (x >= 1.0)
        j1 = np.where(use_j1, j1_closed, j0 * ratios[0])
        out[0] = np.where(use_j1, j1_closed / ratios[0], j0)
        if ell_max >= 1:
            out[1] = j1
        for ell in range(2, ell_max + 1):
            out[ell] = out[ell - 1] * ratios[ell - 1]
    return out


def bessel_j_half_table(ell_max: int, x) -> np.ndarray:
    """
    Таблица J_{ℓ+1/2}(x) = √(2x/π) j_ℓ(x) для ℓ = 0..ell_max.

    Returns:
        Массив формы (ell_max+1, *x.shape)
    """
    x = _positive_argument(x)
    return np.sqrt(2.0 * x / np.pi) * spherical_jn_table(ell_max, x)


def bessel_j_half(order: OrderLike, x):
    """
    Функция Бесселя первого рода J_{ℓ+1/2}(x).

    Args:
        order: ℓ или HalfIntOrder
        x: Положительный конечный аргумент (скаляр или массив)

    Returns:
        J_{ℓ+1/2}(x) той же формы, что и x

    Raises:
        DomainError: x ≤ 0 или не конечен
        OrderError: ℓ вне [0, L_MAX_SUPPORTED]
    """
    ell = _ell_of(order)
    arr = _positive_argument(x)
    value = bessel_j_half_table(ell, arr)[ell]
    return float(value) if np.ndim(x) == 0 else value


def bessel_j_half_series(order: OrderLike, x: float, terms: int = 30) -> float:
    """Восходящий ряд J_ν(x) = Σ (-1)^k (x/2)^{2k+ν} / (k! Γ(k+ν+1))."""
    nu = _ell_of(order) + 0.5
    x = float(_positive_argument(x))
    total = 0.0
    for k in range(terms):
        log_term = (2 * k + nu) * math.log(x / 2.0) - gammaln(k + 1) - gammaln(k + nu + 1)
        total += (-1) ** k * math.exp(log_term)
    return total


# ---------------------------------------------------------------------------
# Модифицированные функции I_{ℓ+1/2}, K_{ℓ+1/2}
# ---------------------------------------------------------------------------

def _check_representable(values: np.ndarray, what: str, ell: int) -> None:
    if not np.all(np.isfinite(values)):
        raise OverflowError(f"{what} порядка {ell + 0.5} выходит за диапазон double")


def log_bessel_k_half(order: OrderLike, z):
    """
    ln K_{ℓ+1/2}(z) = ln kve(ν, z) − z.

    Raises:
        DomainError: z ≤ 0
        OverflowError: масштабированное K не представимо (малые z при больших ℓ)
    """
    ell = _ell_of(order)
    arr = _positive_argument(z, "z")
    scaled = kve(ell + 0.5, arr)
    _check_representable(np.asarray(scaled), "K", ell)
    log_k = np.log(scaled) - arr
    return float(log_k) if np.ndim(z) == 0 else log_k


def bessel_ik_product(order: OrderLike, z_in, z_out=None):
    """
    Слитое произведение I_{ℓ+1/2}(z_in)·K_{ℓ+1/2}(z_out), z_in ≤ z_out.

    Считается как ive(ν, z_in)·kve(ν, z_out)·e^{z_in − z_out}: множитель
    e^{z_in − z_out} ≤ 1, поэтому большие аргументы не переполняются.

    Raises:
        DomainError: z ≤ 0 или z_in > z_out
        OverflowError: масштабированные I или K не представимы
    """
    ell = _ell_of(order)
    zi = _positive_argument(z_in, "z")
    scalar = np.ndim(z_in) == 0 and (z_out is None or np.ndim(z_out) == 0)
    zo = zi if z_out is None else _positive_argument(z_out, "z")
    if np.any(zi > zo):
        raise DomainError("Требуется z_in ≤ z_out для слитого произведения I·K")
    with np.errstate(all="ignore"):
        product = ive(ell + 0.5, zi) * kve(ell + 0.5, zo) * np.exp(zi - zo)
    _check_representable(np.asarray(product), "Произведение I·K", ell)
    return float(product) if scalar else product


def bessel_ik_half(order: OrderLike, z) -> Tuple[float, float]:
    """
    Пара (I_{ℓ+1/2}(z), K_{ℓ+1/2}(z)).

    Raises:
        DomainError: z ≤ 0
        OverflowError: I или K не представимы в double (используйте bessel_ik_product)
    """
    ell = _ell_of(order)
    z_val = float(_positive_argument(z, "z"))
    nu = ell + 0.5
    i_scaled = float(ive(nu, z_val))
    k_scaled = float(kve(nu, z_val))
    log_i = math.log(i_scaled) + z_val if i_scaled > 0 else -math.inf
    log_k = math.log(k_scaled) - z_val if math.isfinite(k_scaled) else math.inf
    limit = math.log(np.finfo(float).max)
    if not -limit < log_i < limit or not -limit < log_k < limit:
        raise OverflowError(
            f"I/K порядка {nu} при z={z_val} выходят за диапазон double; "
            f"используйте bessel_ik_product"
        )
    return math.exp(log_i), math.exp(log_k)


# ---------------------------------------------------------------------------
# Лежандр и сферические гармоники
# ---------------------------------------------------------------------------

def legendre_index(ell: int, m: int) -> int:
    """Индекс (ℓ, m ≥ 0) в упакованной таблице Лежандра."""
    return ell * (ell + 1) // 2 + m


def legendre_table(L: int, x) -> np.ndarray:
    """
    Нормированные P̄_{ℓm}(x), 0 ≤ m ≤ ℓ ≤ L, так что
    Y_{ℓm}(θ, φ) = P̄_{ℓm}(cos θ) e^{imφ} (с фазой Кондона-Шортли).

    Args:
        L: Максимальная степень
        x: cos θ (массив)

    Returns:
        Массив формы ((L+1)(L+2)/2, *x.shape)
    """
    _check_order(L)
    x = np.asarray(x, dtype=float)
    sx = np.sqrt(np.clip(1.0 - x ** 2, 0.0, None))
    table = np.zeros(((L + 1) * (L + 2) // 2,) + x.shape)

    table[0] = 1.0
    if L >= 1:
        table[legendre_index(1, 0)] = x
    for ell in range(2, L + 1):
        table[legendre_index(ell, 0)] = (
            (2 * ell - 1) * x * table[legendre_index(ell - 1, 0)]
            - (ell - 1) * table[legendre_index(ell - 2, 0)]
        ) / ell
    for m in range(1, L + 1):
        table[legendre_index(m, m)] = (
            -math.sqrt(1.0 - 1.0 / (2 * m)) * sx * table[legendre_index(m - 1, m - 1)]
        )
    for m in range(1, L):
        table[legendre_index(m + 1, m)] = math.sqrt(2 * m + 1.0) * x * table[legendre_index(m, m)]
    for m in range(1, L - 1):
        for ell in range(m + 2, L + 1):
            fact1 = math.sqrt((ell - m) / (ell + m))
            fact2 = math.sqrt((ell - m - 1.0) / (ell + m - 1.0))
            table[legendre_index(ell, m)] = (
                (2 * ell - 1) * x * table[legendre_index(ell - 1, m)]
                - (ell + m - 1) * fact2 * table[legendre_index(ell - 2, m)]
            ) * fact1 / (ell - m)

    for ell in range(L + 1):
        norm = math.sqrt((2 * ell + 1) / (4.0 * math.pi))
        start = legendre_index(ell, 0)
        table[start:start + ell + 1] *= norm
    return table


def sph_harm(ell: int, m: int, theta, phi):
    """
    Сферическая гармоника Y_{ℓm}(θ, φ), θ: коширота, φ: долгота.

    Raises:
        DomainError: |m| > ℓ
    """
    _check_order(ell)
    if abs(m) > ell:
        raise DomainError(f"Индекс |m|={abs(m)} превышает ℓ={ell}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    plm = legendre_table(ell, np.cos(theta))[legendre_index(ell, abs(m))]
    value = plm * np.exp(1j * abs(m) * phi)
    if m < 0:
        value = (-1) ** abs(m) * np.conj(value)
    return complex(value) if value.ndim == 0 else value
