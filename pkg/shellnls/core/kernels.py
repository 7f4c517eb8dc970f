"""
Скалярные ядра модели: символ ρ(τ,ℓ) сужения свободного пропагатора на
сферу, сопряжённое ядро O_ℓ(τ), действие T^λ_ℓ потенциала Грина, функции
источника f2/g2, показатель δ(p), моменты ∫ s^p ρ ds, а также частотное
представление ядра (KernelQuadrature) для быстрого пропагатора.

Каждая величина имеет быстрый замкнутый путь и независимый квадратурный
оракул (затухание e^{−εu} + экстраполяция Ричардсона по ε).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize, special

from shellnls.core import specfun
from shellnls.core.errors import ConvergenceError, DomainError
from shellnls.core.hankel import RadialGrid
from shellnls.core.specfun import bessel_ik_product, bessel_j_half, bessel_j_half_table
from shellnls.logging_config import get_logger

logger = get_logger(__name__)

# Лестница затуханий (в единицах min(τ², 1)) для оракулов
EPS_LADDER = (1e-2, 1e-3, 1e-4)

# Число узлов Гаусса-Лежандра на панель в интегралах моментов
_MOMENT_ORDER = 16

# Предельное число членов асимптотического ряда хвоста
_SERIES_MAX = 200


def _check_lag(tau) -> np.ndarray:
    arr = np.asarray(tau, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"Запаздывание τ должно быть положительным и конечным, получено {tau}")
    return arr


def _check_lambda(lam) -> None:
    arr = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"Параметр λ должен быть положительным, получено {lam}")


def symbol_phase(ell: int) -> complex:
    """(−i)^{ℓ+3/2} = e^{−i(ℓ+3/2)π/2}."""
    return complex(np.exp(-0.5j * np.pi * (ell + 1.5)))


# ---------------------------------------------------------------------------
# Символ ρ и ядро O_ℓ
# ---------------------------------------------------------------------------

def rho_symbol(tau, ell: int):
    """
    Символ ρ(τ,ℓ) = (−i)^{ℓ+3/2} e^{i/(2τ)} J_{ℓ+1/2}(1/(2τ)) / (2τ).

    Совпадает с ∫₀^∞ k J²_{ℓ+1/2}(k) e^{−ik²τ} dk.

    Raises:
        DomainError: τ ≤ 0
    """
    x = 0.5 / _check_lag(tau)
    value = symbol_phase(ell) * np.exp(1j * x) * bessel_j_half(ell, x) * x
    return complex(value) if np.ndim(tau) == 0 else value


def o_ell(tau, ell: int):
    """
    O_ℓ(τ) = e^{i(ℓ+3/2)π/2} e^{−i/(2τ)} J_{ℓ+1/2}(1/(2τ)) / (2τ) = ∫ k J² e^{ik²τ} dk.

    Raises:
        DomainError: τ ≤ 0
    """
    x = 0.5 / _check_lag(tau)
    lead = complex(np.exp(0.5j * np.pi * (ell + 1.5)))
    value = lead * np.exp(-1j * x) * bessel_j_half(ell, x) * x
    return complex(value) if np.ndim(tau) == 0 else value


def _jsq_of_u(ell: int) -> Callable[[float], float]:
    """u ↦ J²_{ℓ+1/2}(√u) через scipy (независимо от specfun)."""
    def jsq(u: float) -> float:
        if u <= 0.0:
            return 0.0
        k = math.sqrt(u)
        return 2.0 * k / math.pi * special.spherical_jn(ell, k) ** 2
    return jsq


def _fourier_half_line(func, omega: float, epsabs: float, split: float) -> complex:
    """
    ∫₀^∞ func(u) e^{iωu} du: QAWO на [0, split] и QAWF на [split, ∞).
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        parts = []
        for weight in ("cos", "sin"):
            head = integrate.quad(func, 0.0, split, weight=weight, wvar=omega,
                                  epsabs=epsabs, limit=500)[0]
            tail = integrate.quad(func, split, np.inf, weight=weight, wvar=omega,
                                  epsabs=epsabs, limlst=200, limit=500)[0]
            parts.append(head + tail)
    for item in caught:
        logger.debug(f"Предупреждение квадратуры: {item.message}")
    return complex(parts[0], parts[1])


def _extrapolate_to_zero(eps: Sequence[float], values: Sequence[complex]) -> Tuple[complex, float]:
    """
    Квадратичная экстраполяция Лагранжа в ε = 0; оценка ошибки:
    расхождение с линейной экстраполяцией по двум младшим ε.
    """
    e1, e2, e3 = eps
    v1, v2, v3 = values
    quadratic = (
        v1 * e2 * e3 / ((e1 - e2) * (e1 - e3))
        + v2 * e1 * e3 / ((e2 - e1) * (e2 - e3))
        + v3 * e1 * e2 / ((e3 - e1) * (e3 - e2))
    )
    linear = (v2 * e3 - v3 * e2) / (e3 - e2)
    return quadratic, abs(quadratic - linear)


def _damped_oracle(
    name: str,
    integrand: Callable[[float, float], float],
    omega: float,
    scale: float,
    tol: float,
    epsabs: float,
) -> complex:
    """Значения с затуханиями ε·scale из EPS_LADDER и экстраполяция в ε = 0."""
    eps = [e * scale for e in EPS_LADDER]
    split = max(4.0 / min(omega, 1.0) ** 2, 50.0)
    values = [
        _fourier_half_line(lambda u, e=e: integrand(u, e), omega, epsabs, split)
        for e in eps
    ]
    value, error = _extrapolate_to_zero(eps, values)
    logger.debug(f"{name}: экстраполяция по ε, оценка ошибки {error:.3e}")
    if error > tol:
        raise ConvergenceError(
            f"{name}: экстраполяция по затуханию не сошлась (ошибка {error:.3e} > {tol:.1e})",
            achieved=error,
        )
    return value


def o_ell_bruteforce(
    tau: float,
    ell: int,
    eps: Optional[float] = None,
    tol: float = 1e-5,
    epsabs: float = 1e-11,
) -> complex:
    """
    Квадратурный оракул ∫₀^∞ k J²_{ℓ+1/2}(k) e^{ik²τ} e^{−εk²} dk.

    После замены u = k² интеграл ½∫ J²(√u) e^{−εu} e^{iτu} du берётся
    адаптивной квадратурой с весом cos/sin.

    Args:
        tau: Запаздывание τ > 0
        ell: Угловой порядок
        eps: Фиксированное затухание; None: экстраполяция ε → 0
        tol: Допуск согласования экстраполяции
        epsabs: Абсолютная точность квадратур

    Raises:
        DomainError: τ ≤ 0 или ε ≤ 0
        ConvergenceError: экстраполяция не согласуется в пределах tol
    """
    tau = float(_check_lag(tau))
    jsq = _jsq_of_u(ell)

    def integrand(u: float, damping: float) -> float:
        return 0.5 * jsq(u) * math.exp(-damping * u)

    if eps is not None:
        if eps <= 0:
            raise DomainError(f"Затухание должно быть положительным, получено {eps}")
        split = max(4.0 / min(tau, 1.0) ** 2, 50.0)
        return _fourier_half_line(lambda u: integrand(u, eps), tau, epsabs, split)
    return _damped_oracle("o_ell_bruteforce", integrand, tau, min(tau * tau, 1.0), tol, epsabs)


# ---------------------------------------------------------------------------
# Действие T^λ и функции источника
# ---------------------------------------------------------------------------

def t_lambda(ell: int, lam):
    """
    T^λ_ℓ = ∫₀^∞ k J²_{ℓ+1/2}(k)/(k²+λ) dk = I_{ℓ+1/2}(√λ)·K_{ℓ+1/2}(√λ).

    Raises:
        DomainError: λ ≤ 0
    """
    _check_lambda(lam)
    return bessel_ik_product(ell, np.sqrt(lam))


def t_lambda_quadrature(ell: int, lam: float, k_cut: float = 1000.0 * math.pi) -> float:
    """
    Прямая квадратура интеграла T^λ_ℓ: панели ширины π/2 по 20 узлов
    на [0, k_cut] и хвост по асимптотике k J² ≈ 1/π.

    k_cut кратно π, поэтому осциллирующая часть хвоста исчезает в главном порядке.
    """
    _check_lambda(lam)
    grid = RadialGrid.composite(k_cut, 0.5 * math.pi, 20)
    k = grid.nodes
    head = float(np.sum(grid.weights * k * bessel_j_half(ell, k) ** 2 / (k * k + lam)))
    root = math.sqrt(lam)
    tail = (0.5 * math.pi - math.atan(k_cut / root)) / (math.pi * root)
    return head + tail


def f2(
    t: float,
    ell: int,
    lam: float,
    tol: float = 1e-6,
    epsabs: float = 1e-11,
) -> complex:
    """
    Оракул f_{2,ℓ}(t) = ∫₀^∞ r e^{−itr²} J²_{ℓ+1/2}(r)/(r²+λ) dr.

    При t = 0 совпадает с T^λ_ℓ. |f2| ≤ T^λ_ℓ.

    Raises:
        DomainError: λ ≤ 0 или t < 0
        ConvergenceError: экстраполяция по затуханию не сошлась
    """
    _check_lambda(lam)
    if t < 0:
        raise DomainError(f"Время t должно быть неотрицательным, получено {t}")
    if t == 0:
        return complex(t_lambda(ell, lam))
    jsq = _jsq_of_u(ell)

    def integrand(u: float, damping: float) -> float:
        return 0.5 * jsq(u) / (u + lam) * math.exp(-damping * u)

    # e^{−itu} = conj(e^{itu}) при вещественной подынтегральной функции
    value = _damped_oracle("f2", integrand, t, min(t * t, 1.0), tol, epsabs)
    return value.conjugate()


def g2(t: float, ell: int, lam: float, epsabs: float = 1e-12) -> complex:
    """
    Оракул g_{2,ℓ}(t) = −λ ∫₀^∞ J²_{ℓ+1/2}(r)/(r(r²+λ)) (e^{−itr²} − 1) dr.

    После замены u = r²: −(λ/2) ∫ J²(√u)/(u(u+λ)) (e^{−itu} − 1) du;
    [0, 1]: обычная квадратура, [1, ∞): QAWF для экспоненты и
    обычная квадратура для единицы.

    Raises:
        DomainError: λ ≤ 0 или t < 0
    """
    _check_lambda(lam)
    if t < 0:
        raise DomainError(f"Время t должно быть неотрицательным, получено {t}")
    if t == 0:
        return 0j
    jsq = _jsq_of_u(ell)

    def base(u: float) -> float:
        return jsq(u) / (u * (u + lam)) if u > 0 else 0.0

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        head_re = integrate.quad(lambda u: base(u) * (math.cos(t * u) - 1.0), 0.0, 1.0,
                                 epsabs=epsabs, limit=200)[0]
        head_im = integrate.quad(lambda u: -base(u) * math.sin(t * u), 0.0, 1.0,
                                 epsabs=epsabs, limit=200)[0]
        tail_cos = integrate.quad(base, 1.0, np.inf, weight="cos", wvar=t,
                                  epsabs=epsabs, limlst=200)[0]
        tail_sin = integrate.quad(base, 1.0, np.inf, weight="sin", wvar=t,
                                  epsabs=epsabs, limlst=200)[0]
        tail_one = integrate.quad(base, 1.0, np.inf, epsabs=epsabs, limit=200)[0]
    for item in caught:
        logger.debug(f"g2: предупреждение квадратуры: {item.message}")
    total = complex(head_re + tail_cos - tail_one, head_im - tail_sin)
    return -0.5 * lam * total


def delta_exponent(p: float) -> float:
    """
    Показатель δ(p) = 5/(3p) − 1/6 оценки ядра в L^p → L^{p'}.

    Raises:
        DomainError: p вне [1, 2]
    """
    if not 1.0 <= p <= 2.0:
        raise DomainError(f"Показатель p должен лежать в [1, 2], получено {p}")
    return 5.0 / (3.0 * p) - 1.0 / 6.0


# ---------------------------------------------------------------------------
# Моменты M_p(τ) = ∫₀^τ s^p ρ(s) ds
# ---------------------------------------------------------------------------

def _tail_start(L: int) -> float:
    return max(40.0, (L + 1) ** 2 + 20.0)


def _hankel_coefficients(ell: int) -> np.ndarray:
    """c_k = (ℓ+k)! / (k! (ℓ−k)!), k = 0..ℓ."""
    c = np.empty(ell + 1)
    c[0] = 1.0
    for k in range(ell):
        c[k + 1] = c[k] * (ell + k + 1) * (ell - k) / (k + 1)
    return c


def _oscillatory_power_tail(s: float, X: float) -> complex:
    """∫_X^∞ x^{−s} e^{2ix} dx асимптотическим рядом до наименьшего члена."""
    z = 1.0 / (2j * X)
    total = 0j
    term = 1.0 + 0j
    for j in range(_SERIES_MAX):
        total += term
        nxt = term * (s + j) * z
        if abs(nxt) >= abs(term) or abs(nxt) < 1e-17 * abs(total):
            break
        term = nxt
    return 0.5j * np.exp(2j * X) * X ** (-s) * total


def _moment_tail(L: int, p: int, X: float) -> np.ndarray:
    """
    ∫_X^∞ e^{ix} J_{ℓ+1/2}(x) (2x)^{−1−p} dx для ℓ ≤ L через конечное
    разложение Ганкеля J_{ℓ+1/2}.
    """
    out = np.zeros(L + 1, dtype=complex)
    prefactor = math.sqrt(2.0 / math.pi) * 2.0 ** (-2 - p)
    for ell in range(L + 1):
        c = _hankel_coefficients(ell)
        acc = 0j
        for k in range(ell + 1):
            s = 1.5 + p + k
            oscillating = (-1j) ** (ell + 1) * 1j ** k * _oscillatory_power_tail(s, X)
            flat = 1j ** (ell + 1) * (-1j) ** k * X ** (1.0 - s) / (s - 1.0)
            acc += c[k] * 2.0 ** (-k) * (oscillating + flat)
        out[ell] = prefactor * acc
    return out


def _graded_breakpoints(a: float, b: float) -> np.ndarray:
    """Панели ширины min(1, x) от a до b (сгущение к нулю)."""
    points = [a]
    while points[-1] < b:
        x = points[-1]
        points.append(min(b, x + min(1.0, x)))
    return np.array(points)


def _moment_segment(L: int, a: float, b: float) -> Tuple[np.ndarray, np.ndarray]:
    grid = RadialGrid.from_breakpoints(_graded_breakpoints(a, b), _MOMENT_ORDER)
    if grid.size == 0:
        return np.zeros(L + 1, dtype=complex), np.zeros(L + 1, dtype=complex)
    x = grid.nodes
    base = np.exp(1j * x) * bessel_j_half_table(L, x) / (2.0 * x)
    seg0 = base @ grid.weights
    seg1 = (base / (2.0 * x)) @ grid.weights
    return seg0, seg1


def rho_moments(L: int, taus) -> Tuple[np.ndarray, np.ndarray]:
    """
    Моменты M0(τ) = ∫₀^τ ρ(s,ℓ) ds и M1(τ) = ∫₀^τ s ρ(s,ℓ) ds.

    Замена x = 1/(2s) переводит их в ∫_X^∞ e^{ix}J(x)(2x)^{−1−p} dx, X = 1/(2τ):
    конечная часть: квадратура Гаусса-Лежандра, хвост: точное
    разложение Ганкеля. Интегралы накапливаются по возрастающим τ.

    Args:
        L: Максимальный порядок
        taus: Строго возрастающие положительные τ

    Returns:
        (M0, M1): массивы формы (L+1, len(taus))

    Raises:
        DomainError: τ ≤ 0 или не возрастают
    """
    taus = np.atleast_1d(_check_lag(taus))
    if np.any(np.diff(taus) <= 0):
        raise DomainError("Значения τ для моментов должны строго возрастать")
    x_start = _tail_start(L)
    phase = np.exp(-0.5j * np.pi * (np.arange(L + 1) + 1.5))[:, None]

    m0 = np.empty((L + 1, taus.size), dtype=complex)
    m1 = np.empty((L + 1, taus.size), dtype=complex)
    acc0 = _moment_tail(L, 0, x_start)
    acc1 = _moment_tail(L, 1, x_start)
    upper = x_start
    for i, X in enumerate(0.5 / taus):
        if X >= x_start:
            m0[:, i] = _moment_tail(L, 0, X)
            m1[:, i] = _moment_tail(L, 1, X)
            continue
        seg0, seg1 = _moment_segment(L, X, upper)
        acc0 = acc0 + seg0
        acc1 = acc1 + seg1
        upper = X
        m0[:, i] = acc0
        m1[:, i] = acc1
    return phase * m0, phase * m1


def rho_integral(tau: float, ell: int) -> complex:
    """M0(τ, ℓ) = ∫₀^τ ρ(s,ℓ) ds."""
    m0, _ = rho_moments(ell, [tau])
    return complex(m0[ell, 0])


# ---------------------------------------------------------------------------
# Хвосты ∫_K^∞ k^{−2n} e^{−ik²t} dk в замкнутой форме
# ---------------------------------------------------------------------------

def fresnel_tail(K: float, t) -> np.ndarray:
    """
    F(K,t) = ∫_K^∞ e^{−ik²t} dk = Φ(K√t)/√t через интегралы Френеля.

    При t = 0 интеграл расходится; возвращаемое значение не используется
    (все вызывающие умножают его на t).
    """
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0.0, t, 1.0)
    z = K * np.sqrt(safe) * math.sqrt(2.0 / math.pi)
    s, c = special.fresnel(z)
    return math.sqrt(0.5 * math.pi) * ((0.5 - c) - 1j * (0.5 - s)) / np.sqrt(safe)


def inverse_square_tail(K: float, t) -> np.ndarray:
    """∫_K^∞ k^{−2} e^{−ik²t} dk = e^{−iK²t}/K − 2it·F(K,t)."""
    t = np.asarray(t, dtype=float)
    return np.exp(-1j * K * K * t) / K - 2j * t * fresnel_tail(K, t)


def inverse_quartic_tail(K: float, t) -> np.ndarray:
    """∫_K^∞ k^{−4} e^{−ik²t} dk = e^{−iK²t}/(3K³) − (2it/3)·I₂(K,t)."""
    t = np.asarray(t, dtype=float)
    return np.exp(-1j * K * K * t) / (3.0 * K ** 3) - (2j * t / 3.0) * inverse_square_tail(K, t)


# ---------------------------------------------------------------------------
# Точный хвост ∫_K^∞ k^p (2/π) j_ℓ(k)² e^{−ik²t} dk в комплексной плоскости
# ---------------------------------------------------------------------------

# (2/π) j_ℓ² = (1/2π)[(−1)^{ℓ+1}(e^{2ik}P₊² + e^{−2ik}P₋²) + 2P₊P₋]/k²,
# P± = Σ_m c_m (±i/(2k))^m. Каждое слагаемое интегрируется по лучам
# наискорейшего спуска; при Kt < 1 слагаемое e^{2ik} проходит через седло k = 1/t.

_RAY_ORDER = 16
_RAY_DECAY = 40.0
_DOWN = complex(math.cos(-0.25 * math.pi), math.sin(-0.25 * math.pi))
_UP_LEFT = -_DOWN


def _hankel_matrix(L: int) -> np.ndarray:
    """C[ℓ, m] = c_m(ℓ), нули при m > ℓ."""
    C = np.zeros((L + 1, L + 1))
    for ell in range(L + 1):
        C[ell, :ell + 1] = _hankel_coefficients(ell)
    return C


def _tail_amplitude(C: np.ndarray, k: np.ndarray, power: int, sigma: int) -> np.ndarray:
    """Амплитуда при e^{2iσk}, форма (L+1, n)."""
    L = C.shape[0] - 1
    powers = np.arange(L + 1)[:, None]
    z = 0.5j / k
    scale = k ** (power - 2) / (2.0 * math.pi)
    if sigma == 0:
        return 2.0 * (C @ z[None, :] ** powers) * (C @ (-z)[None, :] ** powers) * scale
    sign = (-1.0) ** (np.arange(L + 1) + 1)[:, None]
    return sign * (C @ (sigma * z)[None, :] ** powers) ** 2 * scale


def _ray(start: float, direction: complex, t: float, sigma: int, C: np.ndarray, power: int) -> np.ndarray:
    """
    ∫ A_σ(k) e^{iσ²/t − it(k − σ/t)²} dk по лучу k = start + direction·s, s ≥ 0.

    direction² = −i, поэтому показатель равен const + b·s − t·s² с Re b ≤ 0.
    """
    centre = sigma / t
    b = -2j * t * (start - centre) * direction
    a = max(-b.real, 0.0)
    span = 2.0 * _RAY_DECAY / (a + math.sqrt(a * a + 4.0 * t * _RAY_DECAY))
    width = 1.5 / max(a, math.sqrt(t))
    n_panels = max(int(math.ceil(span / width)), 1)
    grid = RadialGrid.from_breakpoints(np.linspace(0.0, span, n_panels + 1), _RAY_ORDER)
    k = start + direction * grid.nodes
    exponent = 1j * sigma * sigma / t - 1j * t * (k - centre) ** 2
    amplitude = _tail_amplitude(C, k, power, sigma)
    return direction * (amplitude @ (grid.weights * np.exp(exponent)))


def bessel_tail(L: int, K: float, t: float, power: int = 0, C: Optional[np.ndarray] = None) -> np.ndarray:
    """
    ∫_K^∞ k^{power−1} J²_{ℓ+1/2}(k) e^{−ik²t} dk для всех ℓ ≤ L при t > 0.

    power = 0 даёт хвост ∫ J²/k e^{−ik²t}, power = 2 даёт хвост ρ(t,ℓ).
    Включает осциллирующую часть J², в том числе вклад седла k = 1/t > K.

    Raises:
        DomainError: t ≤ 0 или K ≤ 0
    """
    if not t > 0.0 or not K > 0.0:
        raise DomainError(f"Требуются t > 0 и K > 0, получено t={t}, K={K}")
    C = _hankel_matrix(L) if C is None else C
    total = _ray(K, _DOWN, t, 0, C, power) + _ray(K, _DOWN, t, -1, C, power)
    if K * t >= 1.0:
        total = total + _ray(K, _DOWN, t, 1, C, power)
    else:
        saddle = 1.0 / t
        total = (total + _ray(K, _UP_LEFT, t, 1, C, power)
                 - _ray(saddle, _UP_LEFT, t, 1, C, power)
                 + _ray(saddle, _DOWN, t, 1, C, power))
    return total


# ---------------------------------------------------------------------------
# Частотное представление ядра
# ---------------------------------------------------------------------------

@dataclass
class KernelQuadrature:
    """
    Квадратура ρ(τ,ℓ) ≈ Σ_j w_j k_j J²_{ℓ+1/2}(k_j) e^{−ik_j²τ} с
    точным остатком за k_max.

    Attributes:
        grid: Фазоразрешающая сетка по k
        jsq: J²_{ℓ+1/2}(k_j), форма (L+1, n)
        L: Полоса
        tau_min: Наименьшее сертифицированное запаздывание
        T_horizon: Горизонт сертификации
        tol: Запрошенная точность
        achieved: Достигнутая ошибка сертификации (ρ и M0)
    """
    grid: RadialGrid
    jsq: np.ndarray
    L: int
    tau_min: float
    T_horizon: float
    tol: float
    achieved: float = math.nan
    weights: np.ndarray = field(init=False, repr=False)
    inverse_weights: np.ndarray = field(init=False, repr=False)
    tail: np.ndarray = field(init=False, repr=False)
    hankel: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = self.grid.nodes
        w = self.grid.weights
        self.weights = w * k * self.jsq
        self.inverse_weights = w * self.jsq / k
        ells = np.arange(self.L + 1)
        # ∫_K^∞ J²/k dk = 1/(2ℓ+1) − сумма по сетке
        self.tail = 1.0 / (2.0 * ells + 1.0) - self.inverse_weights.sum(axis=1)
        self.hankel = _hankel_matrix(self.L)

    @property
    def k_max(self) -> float:
        return self.grid.k_max

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def remainder(self, t) -> np.ndarray:
        """
        E_ℓ(t) = ∫_K^∞ J²/k e^{−ik²t} dk, E_ℓ(0) = tail_ℓ.

        Returns:
            Массив формы (L+1,) для скалярного t или (L+1, len(t))
        """
        t_arr = np.asarray(t, dtype=float)
        times = np.atleast_1d(t_arr)
        out = np.empty((self.L + 1, times.size), dtype=complex)
        for i, value in enumerate(times):
            if value == 0.0:
                out[:, i] = self.tail
            else:
                out[:, i] = bessel_tail(self.L, self.k_max, float(value), 0, self.hankel)
        return out[:, 0] if t_arr.ndim == 0 else out

    def moment0(self, tau: float) -> np.ndarray:
        """M0(τ, ℓ) для всех ℓ ≤ L по частотному представлению."""
        phase = np.exp(-1j * self.nodes ** 2 * tau)
        grid_part = self.inverse_weights @ (1.0 - phase)
        return -1j * (grid_part + self.tail - self.remainder(tau))

    def rho_modes(self, tau: float) -> np.ndarray:
        """ρ(τ,ℓ) для всех ℓ ≤ L: сумма по сетке плюс хвост за k_max."""
        _check_lag(tau)
        grid_part = self.weights @ np.exp(-1j * self.nodes ** 2 * tau)
        return grid_part + bessel_tail(self.L, self.k_max, float(tau), 2, self.hankel)

    def rho(self, tau: float, ell: int) -> complex:
        """Поточечное ρ(τ,ℓ)."""
        return complex(self.rho_modes(tau)[ell])


def _tau_grid(tau_min: float, T_horizon: float, count: int = 64) -> np.ndarray:
    if tau_min == T_horizon:
        return np.array([tau_min])
    return np.geomspace(tau_min, T_horizon, count)


def build_kernel_quadrature(
    L: int,
    tau_min: float,
    T_horizon: float,
    tol: float = 2e-4,
    node_budget: int = 2_000_000,
    order: int = 12,
    k_max: Optional[float] = None,
) -> KernelQuadrature:
    """
    Строит и сертифицирует частотную квадратуру ядра.

    На 64 точках логарифмической сетки τ ∈ [tau_min, T_horizon] и всех
    ℓ ≤ L сравниваются поточечное ρ с rho_symbol и проинтегрированное ядро
    M0 с замкнутой формой моментов. k_max стартует с 4/√tau_min (или с
    заданного значения, если оно больше) и растёт в 1.5 раза до
    сертификации. При tau_min = T_horizon сетка τ вырождается в одну точку.

    Raises:
        DomainError: неверные параметры (tau_min > T_horizon, tol ≤ 0)
        ConvergenceError: точность недостижима в пределах бюджета узлов
    """
    if not 0.0 < tau_min <= T_horizon:
        raise DomainError(
            f"Требуется 0 < tau_min ≤ T_horizon, получено tau_min={tau_min}, T_horizon={T_horizon}"
        )
    if tol <= 0:
        raise DomainError(f"Допуск должен быть положительным, получено {tol}")

    taus = _tau_grid(tau_min, T_horizon)
    exact_m0, _ = rho_moments(L, taus)
    exact_rho = np.array([rho_symbol(taus, ell) for ell in range(L + 1)])
    k_max = max(4.0 / math.sqrt(tau_min), k_max or 0.0)
    best = math.inf
    while True:
        grid = RadialGrid.phase_resolving(k_max, T_horizon, order)
        if grid.size > node_budget:
            raise ConvergenceError(
                f"Квадратура ядра не сертифицирована в пределах {node_budget} узлов: "
                f"достигнуто {best:.3e}, требуется {tol:.1e}",
                achieved=best,
            )
        jsq = bessel_j_half_table(L, grid.nodes) ** 2
        quadrature = KernelQuadrature(grid, jsq, L, tau_min, T_horizon, tol)
        rho_error = 0.0
        m0_error = 0.0
        for i, tau in enumerate(taus):
            rho_error = max(rho_error, float(np.max(np.abs(quadrature.rho_modes(tau) - exact_rho[:, i]))))
            m0_error = max(m0_error, float(np.max(np.abs(quadrature.moment0(tau) - exact_m0[:, i]))))
        error = max(rho_error, m0_error)
        best = min(best, error)
        logger.info(
            f"Квадратура ядра: k_max={k_max:.1f}, узлов {grid.size}, "
            f"ошибка ρ {rho_error:.3e}, ошибка моментов {m0_error:.3e}"
        )
        if error <= tol:
            quadrature.achieved = error
            return quadrature
        k_max *= 1.5


# ---------------------------------------------------------------------------
# Дополнительные величины: связанное состояние, время существования, оценки
# ---------------------------------------------------------------------------

def bound_state_lambda(alpha: float, ell: int = 0) -> float:
    """
    Корень λ* уравнения 1 + α·T^λ_ℓ = 0 (связанное состояние оболочки).

    Raises:
        DomainError: α ≥ −(2ℓ+1): связанного состояния нет
    """
    if alpha >= -(2 * ell + 1):
        raise DomainError(
            f"Связанное состояние моды ℓ={ell} существует только при α < {-(2 * ell + 1)}, "
            f"получено α={alpha}"
        )

    def equation(log_lam: float) -> float:
        return 1.0 + alpha * t_lambda(ell, math.exp(log_lam))

    lo, hi = math.log(1e-14), math.log(max(alpha * alpha, 1.0))
    while equation(hi) < 0:
        hi += math.log(4.0)
    if equation(lo) > 0:
        raise DomainError(f"Корень λ* для α={alpha} меньше 1e-14")
    return math.exp(optimize.brentq(equation, lo, hi, xtol=1e-14, rtol=1e-14))


def local_existence_time(f0_norm: float, sigma: float) -> float:
    """Достаточное время существования 2^{−6σ}‖F₀‖^{−6σ} (не навязывается)."""
    if f0_norm <= 0:
        return math.inf
    return 2.0 ** (-6.0 * sigma) * f0_norm ** (-6.0 * sigma)


def sharpness_sequence(n_values: Sequence[int], a: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Последовательность t_n = 1/(2(n+½+a(n+½)^{1/3})) и величины
    t_n^{2/3}·sup_{ℓ≤2n}|ρ(t_n,ℓ)|; ℓ ограничен сверху L_MAX_SUPPORTED.

    Returns:
        (t_n, floor_n)
    """
    n_arr = np.asarray(n_values, dtype=float)
    times = 1.0 / (2.0 * (n_arr + 0.5 + a * (n_arr + 0.5) ** (1.0 / 3.0)))
    floors = np.empty_like(times)
    for i, (n, t) in enumerate(zip(n_arr, times)):
        ell_top = min(int(2 * n), specfun.L_MAX_SUPPORTED)
        x = 0.5 / t
        # |ρ(t,ℓ)| = x |J_{ℓ+1/2}(x)|
        sup = float(np.max(np.abs(bessel_j_half_table(ell_top, x)))) * x
        floors[i] = t ** (2.0 / 3.0) * sup
    return times, floors


def landau_sweep(
    ell_max: int = 64,
    n_x: int = 10_000,
    x_min: float = 1e-3,
    x_max: float = 1e4,
) -> Tuple[float, float]:
    """
    Огибающие max x^{1/3}|J_{ℓ+1/2}(x)| и max (ℓ+½)^{1/3}|J_{ℓ+1/2}(x)|
    по логарифмической сетке x и ℓ ≤ ell_max.
    """
    x = np.geomspace(x_min, x_max, n_x)
    table = np.abs(bessel_j_half_table(ell_max, x))
    orders = np.arange(ell_max + 1) + 0.5
    by_argument = float(np.max(table * x ** (1.0 / 3.0)))
    by_order = float(np.max(table * orders[:, None] ** (1.0 / 3.0)))
    return by_argument, by_order
