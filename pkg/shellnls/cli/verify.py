"""
Наборы проверок против независимых эталонов: тождество для O_ℓ,
оценки Ландау, замкнутые формы T^λ, преобразования, совместность следа,
независимость от λ, свободная и связанная эволюции, сохранение массы и
энергии, реконструкция поля.

Уровень fast выполняется за секунды; full добавляет прогоны решателя и
исследования сходимости по dt.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from rich.console import Console
from rich.markup import escape
from rich.table import Table
from scipy import optimize

from shellnls.core.application import Simulation
from shellnls.core.config import parse_config
from shellnls.core.domain import assemble_initial_state, build_regular_part, change_lambda
from shellnls.core.hankel import (
    RadialGrid,
    RadialSpectrum,
    hankel_forward,
    hankel_inverse,
    plancherel_l2,
    radial_l2,
)
from shellnls.core.kernels import (
    KernelQuadrature,
    bound_state_lambda,
    build_kernel_quadrature,
    landau_sweep,
    o_ell,
    o_ell_bruteforce,
    rho_symbol,
    sharpness_sequence,
    t_lambda,
    t_lambda_quadrature,
)
from shellnls.core.profiles import create_profile
from shellnls.core.propagator import Propagator, source_f0
from shellnls.core.sphgrid import (
    SCHAUDER_CAP,
    SphereGrid,
    lp_norm,
    random_band_limited,
    schauder_ratio,
    sht_analysis,
    sht_synthesis,
)
from shellnls.core.state import Trajectory
from shellnls.logging_config import get_logger

logger = get_logger(__name__)

LEVELS = ("fast", "full")

LANDAU_ARGUMENT_CAP = 0.786
LANDAU_ORDER_CAP = 0.675
BOUND_STATE_LAMBDA = 0.63490
# min t_n^{2/3}·sup|ρ| по n ∈ [10, 200]; предел Эйри 0.675·2^{−2/3} ≈ 0.425
SHARPNESS_FLOOR = 0.40
ROUNDOFF_DRIFT = 1e-13


@dataclass
class OracleResult:
    """
    Результат одной проверки.

    Attributes:
        name: Название
        measured: Измеренная величина (ошибка или значение)
        limit: Порог
        passed: Проверка пройдена
        detail: Пояснение
        seconds: Время выполнения
    """
    name: str
    measured: float
    limit: float
    passed: bool
    detail: str = ""
    seconds: float = 0.0


def _result(name: str, measured: float, limit: float, detail: str = "") -> OracleResult:
    return OracleResult(name=name, measured=measured, limit=limit,
                        passed=bool(measured <= limit), detail=detail)


# ---------------------------------------------------------------------------
# Быстрые проверки
# ---------------------------------------------------------------------------

def check_kernel_identity(level: str) -> OracleResult:
    ells = (0, 1, 2) if level == "fast" else (0, 1, 2, 5, 10, 20)
    taus = (0.2, 1.0) if level == "fast" else (0.05, 0.2, 1.0, 5.0)
    error = max(abs(o_ell_bruteforce(tau, ell) - o_ell(tau, ell)) for ell in ells for tau in taus)
    return _result("O_ℓ: квадратура против замкнутой формы", error, 1e-4,
                   f"ℓ∈{ells}, τ∈{taus}")


def check_symbol_conjugacy(rng: np.random.Generator) -> OracleResult:
    taus = rng.uniform(0.01, 5.0, 50)
    ells = rng.integers(0, 40, 50)
    error = max(abs(rho_symbol(tau, int(ell)) - np.conj(o_ell(tau, int(ell)))) for tau, ell in zip(taus, ells))
    return _result("ρ = conj(O_ℓ)", error, 1e-14, "50 случайных пар")


def check_landau(level: str) -> List[OracleResult]:
    n_x = 2000 if level == "fast" else 10_000
    by_argument, by_order = landau_sweep(ell_max=64, n_x=n_x)
    return [
        _result("Ландау: x^{1/3}|J|", by_argument, LANDAU_ARGUMENT_CAP, f"ℓ≤64, {n_x} точек x"),
        _result("Ландау: (ℓ+½)^{1/3}|J|", by_order, LANDAU_ORDER_CAP, f"ℓ≤64, {n_x} точек x"),
    ]


def check_sharpness(level: str) -> OracleResult:
    n_values = np.arange(10, 201, 10 if level == "fast" else 1)
    _, floors = sharpness_sequence(n_values)
    floor = float(floors.min())
    limit = 0.9 * SHARPNESS_FLOOR
    return OracleResult(
        name="Точность порядка t^{−2/3}: нижняя граница",
        measured=floor,
        limit=limit,
        passed=floor >= limit,
        detail=f"опорное значение {SHARPNESS_FLOOR}, max = {float(floors.max()):.3f}, n∈[10, 200]",
    )


def check_t_lambda(level: str) -> List[OracleResult]:
    ells = range(0, 11) if level == "full" else (0, 3, 10)
    lams = (0.5, 1.0, 2.0, 10.0)
    error = max(abs(t_lambda(ell, lam) - t_lambda_quadrature(ell, lam)) for ell in ells for lam in lams)
    exact = abs(t_lambda(0, 1.0) - 0.5 * (1.0 - math.exp(-2.0)))
    return [
        _result("T^λ: I·K против квадратуры", error, 1e-8, f"λ∈{lams}"),
        _result("T^1_0 = (1−e^{−2})/2", exact, 1e-12),
    ]


def check_transforms(rng: np.random.Generator) -> List[OracleResult]:
    L = 16
    spec = random_band_limited(L, rng)
    grid = SphereGrid.for_band_limit(L)
    back = sht_analysis(sht_synthesis(spec, grid), L)
    sht_error = float(np.max(np.abs(back.coef - spec.coef)))
    plancherel_sphere = abs(lp_norm(sht_synthesis(spec, grid), 2) - float(np.linalg.norm(spec.coef)))

    r_grid = RadialGrid.composite(12.0, 1.0, 32)
    k_grid = RadialGrid.composite(12.0, 1.0, 32)
    profile = np.exp(-0.5 * r_grid.nodes ** 2)
    forward = hankel_forward(profile, r_grid, 0, k_grid)
    involution = float(np.max(np.abs(hankel_inverse(forward, k_grid, 0, r_grid) - profile)))
    radial = abs(
        math.sqrt(np.sum(k_grid.weights * k_grid.nodes ** 2 * np.abs(forward) ** 2)) - radial_l2(profile, r_grid)
    )
    return [
        _result("SHT: анализ∘синтез", sht_error, 1e-12, f"L={L}"),
        _result("SHT: Планшерель", plancherel_sphere, 1e-10),
        _result("Ганкель: инволюция гауссианы", involution, 1e-6),
        _result("Ганкель: Планшерель", radial, 1e-6),
    ]


def check_schauder(rng: np.random.Generator) -> OracleResult:
    bands = rng.integers(1, 17, 100)
    worst = max(schauder_ratio(random_band_limited(int(L), rng), 0.5) for L in bands)
    return _result("Отношение Шаудера при σ = 1/2", worst, SCHAUDER_CAP, "100 случайных полей, L ≤ 16")


def check_trace_compatibility(rng: np.random.Generator) -> OracleResult:
    grid = RadialGrid.composite(14.0, 1.0, 32)
    worst = 0.0
    for _ in range(20):
        amplitude = complex(*rng.uniform(-0.2, 0.2, 2))
        ell = int(rng.integers(0, 3))
        profile = create_profile({"type": "gaussian", "amplitude": amplitude, "width": 1.0, "ell": ell})
        phi0 = build_regular_part([profile], 2, grid)
        data = assemble_initial_state(phi0, beta=1.0, sigma=0.5, lambda0=1.0)
        worst = max(worst, data.trace_residual())
    return _result("Совместность следа: невязка", worst, 1e-10, "20 случайных малых данных")


def check_lambda_independence() -> List[OracleResult]:
    """ψ₀ = φ₀^λ − G^λ ν(q₀) не зависит от λ: сборка при λ = 1 и λ = 4."""
    grid = RadialGrid.composite(40.0, 1.0, 32)
    profiles = [
        create_profile({"type": "gaussian", "amplitude": 0.1, "width": 1.0}),
        create_profile({"type": "gaussian", "amplitude": 0.05j, "width": 0.8, "ell": 1, "m": 1}),
    ]
    data = assemble_initial_state(build_regular_part(profiles, 2, grid), beta=1.0, sigma=0.5, lambda0=1.0)
    rebased = change_lambda(data, 4.0)
    field = data.field()
    diff = RadialSpectrum(L=data.L, grid=grid, data=rebased.field().data - field.data)
    field_error = plancherel_l2(diff) / plancherel_l2(field)
    charge_error = float(np.linalg.norm(rebased.q0.coef - data.q0.coef) / np.linalg.norm(data.q0.coef))
    return [
        _result("Независимость ψ₀ от λ: поле в L²", field_error, 1e-6, "λ = 1 и λ = 4"),
        _result("Независимость ψ₀ от λ: заряд q₀", charge_error, 1e-6),
    ]


def free_gaussian_trace(t: float) -> complex:
    """След свободной эволюции e^{−r²/2}: √(4π)(1+2it)^{−3/2}e^{−1/(2(1+2it))}."""
    z = 1.0 + 2j * t
    return math.sqrt(4.0 * math.pi) * z ** -1.5 * cmath.exp(-0.5 / z)


def check_free_gaussian() -> OracleResult:
    grid = RadialGrid.composite(14.0, 1.0, 32)
    profile = create_profile({"type": "gaussian", "amplitude": 1.0, "width": 1.0})
    data = assemble_initial_state(build_regular_part([profile], 0, grid), beta=0.0, sigma=0.5, lambda0=1.0)
    error = 0.0
    for t in (0.0, 0.25, 0.5, 1.0):
        exact = free_gaussian_trace(t)
        error = max(error, abs(source_f0(data, t)[0, 0] - exact) / abs(exact))
    return _result("Свободная гауссиана: след F₀(t)", error, 1e-6, "t∈{0, 0.25, 0.5, 1}")


def check_bound_state_root() -> List[OracleResult]:
    z_star = optimize.brentq(lambda z: z - 1.0 + math.exp(-2.0 * z), 0.1, 2.0, xtol=1e-15)
    lam = bound_state_lambda(-2.0, 0)
    return [
        _result("λ* связанного состояния: корень z = 1 − e^{−2z}", abs(lam - z_star ** 2), 1e-10,
                f"λ* = {lam:.6f}"),
        _result("λ* связанного состояния: опорное значение", abs(lam - BOUND_STATE_LAMBDA), 2e-5),
    ]


# ---------------------------------------------------------------------------
# Прогоны решателя (уровень full)
# ---------------------------------------------------------------------------

_SCENARIO_TEMPLATE = """
scenario = {scenario}

[numerics]
L = {L}
dt = {dt}
T = {T}
method = {method}
kernel_tol = {kernel_tol}
{extra}
"""


class _KernelCache:
    """Квадратуры ядра по (L, dt, T, tol, k_max): общие для прогонов одного уровня."""

    def __init__(self):
        self._store: Dict[Tuple[int, float, float, float, Optional[float]], KernelQuadrature] = {}

    def get(self, L: int, dt: float, T: float, tol: float, k_max: Optional[float] = None) -> KernelQuadrature:
        key = (L, dt, T, tol, k_max)
        if key not in self._store:
            self._store[key] = build_kernel_quadrature(L, tau_min=dt, T_horizon=T, tol=tol, k_max=k_max)
        return self._store[key]


def _simulation(cache: _KernelCache, scenario: str, L: int, dt: float, T: float,
                method: str = "freq", extra: str = "", kernel_tol: float = 2e-3,
                k_max: Optional[float] = None) -> Simulation:
    text = _SCENARIO_TEMPLATE.format(scenario=scenario, L=L, dt=dt, T=T, method=method,
                                     kernel_tol=kernel_tol, extra=extra)
    config = parse_config(text)
    return Simulation(config, kernel=cache.get(L, dt, T, kernel_tol, k_max))


def _run(cache: _KernelCache, scenario: str, L: int, dt: float, T: float,
         method: str = "freq", extra: str = "", kernel_tol: float = 2e-3,
         k_max: Optional[float] = None) -> Tuple[Simulation, Trajectory]:
    simulation = _simulation(cache, scenario, L, dt, T, method, extra, kernel_tol, k_max)
    return simulation, simulation.run()


def _relative_drift(values: np.ndarray) -> float:
    return float(np.max(np.abs(values - values[0])) / abs(values[0]))


def _drift_ratio(name: str, coarse: float, fine: float) -> OracleResult:
    # дрейф на уровне округления не сравнивается
    factor = coarse / fine if fine > ROUNDOFF_DRIFT else math.inf
    return OracleResult(
        name=name,
        measured=factor,
        limit=3.0,
        passed=factor >= 3.0,
        detail=f"dt=4e-3: {coarse:.2e}, dt=2e-3: {fine:.2e}",
    )


def check_conservation(cache: _KernelCache) -> List[OracleResult]:
    results = []
    for scenario in ("defocusing", "focusing"):
        drifts = []
        for dt in (4e-3, 2e-3):
            _, trajectory = _run(cache, scenario, L=4, dt=dt, T=1.0)
            drifts.append((_relative_drift(trajectory.column("mass")),
                           _relative_drift(trajectory.column("energy"))))
        (mass_coarse, energy_coarse), (mass_fine, energy_fine) = drifts
        results += [
            _result(f"{scenario}: дрейф массы", mass_fine, 1e-6, "T=1, dt=2e-3"),
            _result(f"{scenario}: дрейф энергии", energy_fine, 1e-4, "T=1, dt=2e-3"),
            _drift_ratio(f"{scenario}: дрейф массы, dt против dt/2", mass_coarse, mass_fine),
            _drift_ratio(f"{scenario}: дрейф энергии, dt против dt/2", energy_coarse, energy_fine),
        ]
    return results


def check_dual_path(cache: _KernelCache) -> OracleResult:
    simulation, trajectory = _run(cache, "defocusing", L=4, dt=4e-3, T=0.2, method="both")
    gaps = trajectory.column("dual_path_gap")[1:]
    limit = 2.0 * (simulation.kernel.tol + 1e-6)
    return _result("Λ: прямой путь против частотного", float(np.nanmax(gaps)), limit,
                   f"{gaps.size} шагов")


def check_linear_free(cache: _KernelCache) -> OracleResult:
    simulation, trajectory = _run(cache, "free", L=2, dt=4e-3, T=0.2)
    state = trajectory.final_state
    forcing = source_f0(simulation.data, state.t)
    error = float(np.max(np.abs(state.q.coef - forcing.coef)))
    return _result("β=0: q(t) = F₀(t)", error, 1e-12, f"t={state.t:.3f}")


def check_bound_state_rotation(cache: _KernelCache) -> List[OracleResult]:
    simulation = _simulation(cache, "bound-state", L=0, dt=5e-4, T=1.0)
    lam_star = bound_state_lambda(-2.0, 0)
    charges = []
    Propagator(simulation.data, simulation.solver_config).run(
        on_step=lambda state, record: charges.append(state.q[0, 0])
    )
    # Заряд связанного состояния вращается: q(t) = q₀ e^{iλ*t}
    values = np.array(charges)
    phases = np.unwrap(np.angle(values / values[0]))
    times = simulation.config.dt * np.arange(values.size)
    rate = float(np.polyfit(times, phases, 1)[0])
    return [
        _result("Связанное состояние: |q₀₀| постоянен", _relative_drift(np.abs(values)), 1e-3),
        _result("Связанное состояние: скорость фазы", abs(rate - lam_star) / lam_star, 1e-2,
                f"измерено {rate:.5f}, λ* = {lam_star:.5f}"),
    ]


def check_reconstruction(cache: _KernelCache) -> List[OracleResult]:
    """
    Реконструкция поля на дефокусирующем прогоне: след на S² совпадает
    с зарядом, невязка скачка убывает при удвоении k_max.
    """
    simulation, trajectory = _run(cache, "defocusing", L=2, dt=4e-3, T=0.2)
    k_max = simulation.kernel.k_max
    _, refined = _run(cache, "defocusing", L=2, dt=4e-3, T=0.2, k_max=2.0 * k_max)
    trace_error = float(np.max(trajectory.column("trace_residual")))
    jump = float(trajectory.column("jump_residual")[-1])
    jump_refined = float(refined.column("jump_residual")[-1])
    return [
        _result("Реконструкция: след против q", trace_error, 1e-3, f"{len(trajectory.records)} записей"),
        _result("Реконструкция: невязка скачка", jump, 5e-2, f"k_max = {k_max:.1f}"),
        OracleResult(
            name="Реконструкция: скачок при удвоении k_max",
            measured=jump_refined,
            limit=jump,
            passed=jump_refined < jump,
            detail=f"k_max = {2.0 * k_max:.1f}",
        ),
    ]


def check_gauge(cache: _KernelCache) -> OracleResult:
    theta = 0.7
    rotation = cmath.exp(1j * theta)
    base = "\n[initial.main]\ntype = gaussian\nwidth = 1.0\namplitude = {amp}\n"
    _, plain = _run(cache, "defocusing", L=4, dt=4e-3, T=0.2, extra=base.format(amp="0.1+0j"))
    amp = 0.1 * rotation
    _, rotated = _run(cache, "defocusing", L=4, dt=4e-3, T=0.2,
                      extra=base.format(amp=f"{amp.real!r}{amp.imag:+}j"))
    q_plain = plain.final_state.q.coef
    q_rot = rotated.final_state.q.coef
    error = float(np.max(np.abs(q_rot - rotation * q_plain)) / np.max(np.abs(q_plain)))
    return _result("Калибровочная ковариантность", error, 1e-10, f"θ = {theta}")


def check_refinement(cache: _KernelCache) -> OracleResult:
    finals = {}
    for dt in (8e-3, 4e-3, 2e-3):
        _, trajectory = _run(cache, "defocusing", L=2, dt=dt, T=0.2)
        finals[dt] = trajectory.final_state.q.coef
    coarse = np.max(np.abs(finals[8e-3] - finals[4e-3]))
    fine = np.max(np.abs(finals[4e-3] - finals[2e-3]))
    factor = float(coarse / fine) if fine > 0 else math.inf
    return OracleResult(
        name="Сходимость по dt: отношение ошибок",
        measured=factor,
        limit=3.0,
        passed=factor >= 3.0,
        detail=f"наблюдаемый порядок {math.log2(factor):.2f}" if math.isfinite(factor) else "",
    )


def _timed(func: Callable[[], object]) -> List[OracleResult]:
    start = time.perf_counter()
    try:
        outcome = func()
    except Exception as e:
        logger.error(f"Проверка завершилась с ошибкой: {e}", exc_info=True)
        name = getattr(func, "__name__", "проверка")
        outcome = OracleResult(name=name, measured=math.nan, limit=math.nan, passed=False, detail=str(e))
    results = outcome if isinstance(outcome, list) else [outcome]
    elapsed = time.perf_counter() - start
    for result in results:
        result.seconds = elapsed / len(results)
    return results


def run_suites(level: str = "fast", seed: int = 0) -> List[OracleResult]:
    """
    Выполняет наборы проверок уровня level.

    Raises:
        ValueError: неизвестный уровень
    """
    if level not in LEVELS:
        raise ValueError(f"Неизвестный уровень проверок '{level}' (доступны: {', '.join(LEVELS)})")
    rng = np.random.default_rng(seed)
    checks: List[Callable[[], object]] = [
        lambda: check_symbol_conjugacy(rng),
        lambda: check_kernel_identity(level),
        lambda: check_landau(level),
        lambda: check_sharpness(level),
        lambda: check_t_lambda(level),
        lambda: check_transforms(rng),
        lambda: check_schauder(rng),
        lambda: check_trace_compatibility(rng),
        check_lambda_independence,
        check_free_gaussian,
        check_bound_state_root,
    ]
    if level == "full":
        cache = _KernelCache()
        checks += [
            lambda: check_linear_free(cache),
            lambda: check_dual_path(cache),
            lambda: check_bound_state_rotation(cache),
            lambda: check_gauge(cache),
            lambda: check_conservation(cache),
            lambda: check_reconstruction(cache),
            lambda: check_refinement(cache),
        ]
    results = []
    for check in checks:
        results.extend(_timed(check))
    failed = sum(not result.passed for result in results)
    logger.info(f"Проверки уровня {level}: {len(results)} выполнено, {failed} не пройдено")
    return results


def render_report(results: List[OracleResult], console: Optional[Console] = None) -> None:
    """Таблица результатов: название, измерено, порог, статус, время."""
    console = console or Console()
    table = Table(title="Проверки shellnls")
    table.add_column("Проверка")
    table.add_column("Измерено", justify="right")
    table.add_column("Порог", justify="right")
    table.add_column("Статус", justify="center")
    table.add_column("с", justify="right")
    table.add_column("Примечание")
    for result in results:
        status = "[green]OK[/green]" if result.passed else "[red]FAIL[/red]"
        table.add_row(escape(result.name), f"{result.measured:.3e}", f"{result.limit:.1e}", status,
                      f"{result.seconds:.1f}", escape(result.detail))
    console.print(table)


def verify(level: str = "fast", seed: int = 0, console: Optional[Console] = None) -> int:
    """
    Запускает проверки и печатает отчёт.

    Returns:
        0 если все проверки пройдены, иначе 1
    """
    results = run_suites(level, seed)
    render_report(results, console)
    return 0 if all(result.passed for result in results) else 1
