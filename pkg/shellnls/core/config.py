"""
Конфигурация прогона: разбор INI-текста с номерами строк, пресеты
сценариев, валидация по JSON Schema и проверка целостности.

Формат:
    scenario = defocusing
    seed = 0

    [physics]
    beta = 1.0
    sigma = 0.5

    [numerics]
    L = 8
    dt = 1e-3

    [initial.main]
    type = gaussian
    amplitude = 0.1

    [output]
    diagnostics = run.jsonl
"""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

from jsonschema import Draft7Validator

from shellnls.core.errors import ConfigError
from shellnls.core.profiles import PROFILE_MAP
from shellnls.core.propagator import METHODS
from shellnls.logging_config import get_logger

logger = get_logger(__name__)

# JSON Schema для валидации разрешённой конфигурации прогона
RUN_CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["scenario", "physics", "numerics", "output", "initial"],
    "properties": {
        "scenario": {
            "type": "string",
            "description": "Имя сценария (пресет значений по умолчанию)"
        },
        "seed": {
            "type": "integer",
            "minimum": 0,
            "description": "Зерно генератора для проверок со случайными данными"
        },
        "physics": {
            "type": "object",
            "description": "Физические параметры модели",
            "properties": {
                "beta": {"type": "number", "description": "Сила нелинейности β"},
                "sigma": {"type": "number", "exclusiveMinimum": 0, "description": "Показатель σ"},
                "lambda": {"type": "number", "exclusiveMinimum": 0, "description": "Параметр разложения λ₀"},
                "alpha": {
                    "type": ["number", "null"],
                    "description": "Сила линейной оболочки (null для нелинейной модели)"
                }
            }
        },
        "numerics": {
            "type": "object",
            "description": "Параметры дискретизации",
            "properties": {
                "L": {"type": "integer", "minimum": 0, "maximum": 64, "description": "Полоса сферических гармоник"},
                "dt": {"type": "number", "exclusiveMinimum": 0, "description": "Шаг по времени"},
                "T": {"type": "number", "exclusiveMinimum": 0, "description": "Горизонт"},
                "method": {"type": "string", "enum": list(METHODS), "description": "Вычисление Λ"},
                "picard_tol": {"type": "number", "exclusiveMinimum": 0, "description": "Допуск Пикара"},
                "picard_max": {"type": "integer", "minimum": 1, "description": "Предел итераций Пикара"},
                "kernel_tol": {"type": "number", "exclusiveMinimum": 0, "description": "Допуск сертификации ядра"},
                "monitor_factor": {"type": "number", "exclusiveMinimum": 1, "description": "Порог монитора роста"}
            }
        },
        "output": {
            "type": "object",
            "description": "Файлы результатов",
            "properties": {
                "diagnostics": {"type": "string", "description": "Путь JSONL диагностики"},
                "snapshots": {"type": ["string", "null"], "description": "Путь CSV снимков заряда"},
                "snapshot_stride": {"type": "integer", "minimum": 0, "description": "Шаг записи снимков (0: выкл.)"}
            }
        },
        "initial": {
            "type": "array",
            "description": "Радиальные профили регулярной части",
            "items": {"$ref": "#/definitions/profile"}
        }
    },
    "definitions": {
        "profile": {
            "type": "object",
            "required": ["name", "type"],
            "properties": {
                "name": {"type": "string", "description": "Имя блока [initial.<name>]"},
                "type": {"type": "string", "description": "Тип профиля из PROFILE_MAP"},
                "amplitude": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2,
                              "description": "Комплексная амплитуда [re, im]"},
                "width": {"type": "number", "exclusiveMinimum": 0, "description": "Ширина"},
                "center": {"type": "number", "minimum": 0, "description": "Центр радиального профиля"},
                "ell": {"type": "integer", "minimum": 0, "description": "Порядок ℓ"},
                "m": {"type": "integer", "description": "Порядок m"},
                "power": {"type": "integer", "minimum": 0, "description": "Степень полинома"}
            }
        }
    }
}


def _parse_optional_float(text: str) -> Optional[float]:
    if text.lower() in ("none", "null", ""):
        return None
    return float(text)


def _parse_optional_str(text: str) -> Optional[str]:
    return None if text.lower() in ("none", "null", "") else text


def _parse_complex(text: str) -> List[float]:
    value = complex(text.replace(" ", ""))
    return [value.real, value.imag]


# Допустимые ключи секций: имя → преобразователь значения
_SECTION_KEYS: Dict[str, Dict[str, Callable[[str], Any]]] = {
    "": {"scenario": str, "seed": int},
    "physics": {"beta": float, "sigma": float, "lambda": float, "alpha": _parse_optional_float},
    "numerics": {
        "L": int, "dt": float, "T": float, "method": str, "picard_tol": float,
        "picard_max": int, "kernel_tol": float, "monitor_factor": float,
    },
    "output": {"diagnostics": str, "snapshots": _parse_optional_str, "snapshot_stride": int},
    "initial": {
        "type": str, "amplitude": _parse_complex, "width": float, "center": float,
        "ell": int, "m": int, "power": int,
    },
}

_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "physics": {"beta": 0.0, "sigma": 0.5, "lambda": 1.0, "alpha": None},
    "numerics": {
        "L": 8, "dt": 1e-3, "T": 1.0, "method": "freq", "picard_tol": 1e-12,
        "picard_max": 50, "kernel_tol": 2e-4, "monitor_factor": 10.0,
    },
    "output": {"diagnostics": "diagnostics.jsonl", "snapshots": None, "snapshot_stride": 0},
}

# Пресеты сценариев: физика и один начальный профиль; явные ключи их перекрывают
SCENARIO_PRESETS: Dict[str, dict] = {
    "free": {
        "physics": {"beta": 0.0},
        "initial": {"main": {"type": "gaussian", "amplitude": [1.0, 0.0], "width": 1.0}},
    },
    "bound-state": {
        "physics": {"beta": 0.0, "alpha": -2.0, "lambda": 1.0},
        "initial": {"main": {"type": "bound_state", "amplitude": [1.0, 0.0]}},
    },
    "defocusing": {
        "physics": {"beta": 1.0, "sigma": 0.5},
        "initial": {"main": {"type": "gaussian", "amplitude": [0.1, 0.0], "width": 1.0}},
    },
    "focusing": {
        "physics": {"beta": -0.5, "sigma": 0.5},
        "initial": {"main": {"type": "gaussian", "amplitude": [0.1, 0.0], "width": 1.0}},
    },
}

SIGMA_WARNING = "sigma below regime 1/2"
DEFOCUSING_WARNING = "defocusing sigma at or above 4/5: global regime not covered, run is monitored"


@dataclass
class RunConfig:
    """
    Разрешённая конфигурация прогона.

    Attributes:
        scenario: Имя сценария
        beta, sigma, lambda0: Физические параметры
        alpha: Сила линейной оболочки (None: нелинейная модель)
        profiles: Параметры радиальных профилей (словари для create_profile)
        L, dt, T, method, picard_tol, picard_max, kernel_tol: Дискретизация
        seed: Зерно генератора
        diagnostics_path: JSONL диагностики
        snapshots_path: CSV снимков заряда (None: без снимков)
        snapshot_stride: Шаг записи снимков (0: выкл.)
        monitor_factor: Порог монитора роста ‖q‖_{H^{3/2}}
        warnings: Предупреждения разбора
    """
    scenario: str
    beta: float = 0.0
    sigma: float = 0.5
    lambda0: float = 1.0
    alpha: Optional[float] = None
    profiles: List[dict] = field(default_factory=list)
    L: int = 8
    dt: float = 1e-3
    T: float = 1.0
    method: str = "freq"
    picard_tol: float = 1e-12
    picard_max: int = 50
    kernel_tol: float = 2e-4
    seed: int = 0
    diagnostics_path: str = "diagnostics.jsonl"
    snapshots_path: Optional[str] = None
    snapshot_stride: int = 0
    monitor_factor: float = 10.0
    warnings: List[str] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def profile_context(self) -> dict:
        return {"alpha": self.alpha, "lambda": self.lambda0}

    def to_dict(self) -> dict:
        """Полная разрешённая конфигурация (для заголовка результатов)."""
        data = asdict(self)
        for profile in data["profiles"]:
            amplitude = profile.get("amplitude")
            if isinstance(amplitude, complex):
                profile["amplitude"] = [amplitude.real, amplitude.imag]
        return data

    def to_text(self) -> str:
        """Конфигурация в исходном INI-формате со всеми значениями."""
        lines = [f"scenario = {self.scenario}", f"seed = {self.seed}", "", "[physics]",
                 f"beta = {self.beta!r}", f"sigma = {self.sigma!r}", f"lambda = {self.lambda0!r}",
                 f"alpha = {'none' if self.alpha is None else repr(self.alpha)}", "", "[numerics]",
                 f"L = {self.L}", f"dt = {self.dt!r}", f"T = {self.T!r}", f"method = {self.method}",
                 f"picard_tol = {self.picard_tol!r}", f"picard_max = {self.picard_max}",
                 f"kernel_tol = {self.kernel_tol!r}", f"monitor_factor = {self.monitor_factor!r}"]
        for i, profile in enumerate(self.profiles):
            name = profile.get("name", f"p{i}")
            lines += ["", f"[initial.{name}]"]
            for key, value in profile.items():
                if key == "name":
                    continue
                if isinstance(value, complex):
                    value = f"{value.real!r}{value.imag:+}j"
                lines.append(f"{key} = {value}")
        lines += ["", "[output]", f"diagnostics = {self.diagnostics_path}",
                  f"snapshots = {self.snapshots_path or 'none'}", f"snapshot_stride = {self.snapshot_stride}"]
        return "\n".join(lines) + "\n"

    def with_overrides(self, dt: Optional[float] = None, T: Optional[float] = None,
                       L: Optional[int] = None) -> "RunConfig":
        """
        Копия с переопределёнными dt, T, L и повторной проверкой целостности.

        Raises:
            ConfigError: нарушена целостность
        """
        changes = {key: value for key, value in (("dt", dt), ("T", T), ("L", L)) if value is not None}
        if not changes:
            return self
        updated = replace(self, profiles=copy.deepcopy(self.profiles), warnings=list(self.warnings), **changes)
        _validate_config_integrity(updated, {})
        logger.info(f"Параметры конфигурации переопределены: {changes}")
        return updated


def _tokenize(text: str) -> Tuple[dict, Dict[Tuple[str, str], int], List[Tuple[int, str, str]]]:
    """
    Разбор строк key = value по секциям.

    Returns:
        (сырые значения, номера строк ключей, ошибки (строка, ключ, сообщение))
    """
    raw: Dict[str, Any] = {"": {}, "physics": {}, "numerics": {}, "output": {}, "initial": {}}
    lines: Dict[Tuple[str, str], int] = {}
    errors: List[Tuple[int, str, str]] = []
    section, block = "", None

    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].split(";", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1].strip()
            if name.startswith("initial."):
                block = name[len("initial."):].strip()
                if not block:
                    errors.append((number, name, "пустое имя блока [initial.<name>]"))
                    section = None
                    continue
                if block in raw["initial"]:
                    errors.append((number, name, f"повторный блок [{name}]"))
                raw["initial"].setdefault(block, {})
                section = "initial"
            elif name in raw and name not in ("", "initial"):
                section, block = name, None
            else:
                errors.append((number, name, f"неизвестная секция [{name}]"))
                section = None
            continue
        if section is None:
            continue
        if "=" not in stripped:
            errors.append((number, stripped, "ожидается строка вида key = value"))
            continue
        key, value = (part.strip() for part in stripped.split("=", 1))
        value = value.strip("\"'")
        allowed = _SECTION_KEYS[section]
        where = f"[{section}]" if section else "верхний уровень"
        if key not in allowed:
            errors.append((number, key, f"неизвестный ключ '{key}' ({where})"))
            continue
        try:
            parsed = allowed[key](value)
        except ValueError:
            errors.append((number, key, f"неверный тип значения '{value}' для ключа '{key}'"))
            continue
        target = raw["initial"][block] if section == "initial" else raw[section]
        target[key] = parsed
        lines[(block if section == "initial" else section, key)] = number
    return raw, lines, errors


def _resolve(raw: dict) -> dict:
    """Значения по умолчанию, затем пресет сценария, затем явные ключи."""
    scenario = raw[""].get("scenario", "custom")
    preset = SCENARIO_PRESETS.get(scenario, {})
    resolved = {"scenario": scenario, "seed": raw[""].get("seed", 0)}
    for section, defaults in _DEFAULTS.items():
        resolved[section] = {**defaults, **preset.get(section, {}), **raw[section]}
    blocks = {name: dict(params) for name, params in preset.get("initial", {}).items()}
    for name, params in raw["initial"].items():
        blocks[name] = {**blocks.get(name, {}), **params}
    resolved["initial"] = [{"name": name, "type": "gaussian", **params} for name, params in blocks.items()]
    return resolved


def _validate_json_schema(resolved: dict, lines: Dict[Tuple[str, str], int]) -> None:
    """
    Raises:
        ConfigError: разрешённая конфигурация не соответствует схеме
    """
    problems = []
    first_line, first_key = None, None
    for error in sorted(Draft7Validator(RUN_CONFIG_SCHEMA).iter_errors(resolved), key=lambda e: list(e.path)):
        path = [str(part) for part in error.path]
        key = path[-1] if path else None
        line = None
        if len(path) >= 2 and path[0] == "initial":
            block = resolved["initial"][int(path[1])]["name"]
            line = lines.get((block, key))
        elif len(path) == 2:
            line = lines.get((path[0], key))
        elif len(path) == 1:
            line = lines.get(("", key))
        location = f"строка {line}: " if line else ""
        problems.append(f"{location}{'.'.join(path)}: {error.message}")
        if first_key is None:
            first_line, first_key = line, key
    if problems:
        raise ConfigError("Ошибка валидации конфигурации:\n- " + "\n- ".join(problems),
                          line=first_line, key=first_key)


def _build_config(resolved: dict) -> RunConfig:
    physics, numerics, output = resolved["physics"], resolved["numerics"], resolved["output"]
    profiles = []
    for params in resolved["initial"]:
        params = dict(params)
        if "amplitude" in params:
            re, im = params["amplitude"]
            params["amplitude"] = complex(re, im)
        profiles.append(params)
    return RunConfig(
        scenario=resolved["scenario"],
        beta=float(physics["beta"]),
        sigma=float(physics["sigma"]),
        lambda0=float(physics["lambda"]),
        alpha=physics["alpha"],
        profiles=profiles,
        L=int(numerics["L"]),
        dt=float(numerics["dt"]),
        T=float(numerics["T"]),
        method=numerics["method"],
        picard_tol=float(numerics["picard_tol"]),
        picard_max=int(numerics["picard_max"]),
        kernel_tol=float(numerics["kernel_tol"]),
        seed=int(resolved["seed"]),
        diagnostics_path=output["diagnostics"],
        snapshots_path=output["snapshots"],
        snapshot_stride=int(output["snapshot_stride"]),
        monitor_factor=float(numerics["monitor_factor"]),
    )


def _validate_config_integrity(config: RunConfig, lines: Dict[Tuple[str, str], int]) -> None:
    """
    Проверка согласованности полей:
    - dt ≤ T, конечность физических параметров
    - |m| ≤ ℓ ≤ L у профилей, известный тип профиля
    - снимки: путь задан при snapshot_stride ≥ 1

    Raises:
        ConfigError: найдены ошибки целостности
    """
    errors = []

    def report(section: str, key: str, message: str) -> None:
        line = lines.get((section, key))
        errors.append((line, key, f"строка {line}: {message}" if line else message))

    for key, value in (("beta", config.beta), ("sigma", config.sigma), ("lambda", config.lambda0)):
        if not math.isfinite(value):
            report("physics", key, f"{key} должен быть конечным (получено {value})")
    if config.alpha is not None and not math.isfinite(config.alpha):
        report("physics", "alpha", f"alpha должен быть конечным (получено {config.alpha})")
    if not config.dt > 0:
        report("numerics", "dt", f"dt должен быть положительным (получено {config.dt})")
    elif config.dt > config.T:
        report("numerics", "dt", f"dt={config.dt} превышает T={config.T}")
    elif abs(config.n_steps * config.dt - config.T) > 1e-9 * config.T:
        report("numerics", "T", f"T={config.T} не кратно dt={config.dt}")
    if config.L < 0:
        report("numerics", "L", f"L должно быть неотрицательным (получено {config.L})")
    if not config.profiles:
        errors.append((None, "initial", "не задан ни один блок [initial.<name>]"))
    for profile in config.profiles:
        name = profile.get("name", "?")
        if profile.get("type") not in PROFILE_MAP:
            report(name, "type", f"неизвестный тип профиля '{profile.get('type')}' в [initial.{name}]")
        ell, m = int(profile.get("ell", 0)), int(profile.get("m", 0))
        if ell > config.L:
            report(name, "ell", f"ℓ={ell} в [initial.{name}] превышает полосу L={config.L}")
        if abs(m) > ell:
            report(name, "m", f"|m|={abs(m)} в [initial.{name}] превышает ℓ={ell}")
        if profile.get("type") == "bound_state" and config.alpha is None:
            report(name, "type", f"профиль bound_state в [initial.{name}] требует alpha в [physics]")
    if config.snapshot_stride < 0:
        report("output", "snapshot_stride", "snapshot_stride должен быть неотрицательным")
    elif config.snapshot_stride >= 1 and not config.snapshots_path:
        report("output", "snapshot_stride", "snapshot_stride ≥ 1 требует пути snapshots")

    if errors:
        line, key, _ = errors[0]
        raise ConfigError(
            "Найдены ошибки целостности конфигурации:\n- " + "\n- ".join(message for _, _, message in errors),
            line=line,
            key=key,
        )


def _collect_warnings(config: RunConfig) -> List[str]:
    warnings = []
    if config.sigma < 0.5:
        warnings.append(SIGMA_WARNING)
        logger.warning(f"σ={config.sigma} меньше 1/2: режим вне области локальной теории")
    if config.alpha is None and config.beta > 0 and config.sigma >= 0.8:
        warnings.append(DEFOCUSING_WARNING)
        logger.warning(f"Дефокусирующий режим σ={config.sigma} ≥ 4/5: прогон только под монитором роста")
    return warnings


def parse_config(text: str) -> RunConfig:
    """
    Разбор текста конфигурации.

    Args:
        text: INI-текст

    Returns:
        Разрешённая и проверенная конфигурация

    Raises:
        ConfigError: неизвестные секции и ключи, ошибки типов, нарушения
            ограничений; все проблемы перечисляются с номерами строк
    """
    raw, lines, errors = _tokenize(text)
    if "scenario" not in raw[""]:
        errors.append((None, "scenario", "не задан обязательный ключ scenario"))
    if errors:
        problems = [f"строка {line}: {message}" if line else message for line, _, message in errors]
        raise ConfigError("Ошибка разбора конфигурации:\n- " + "\n- ".join(problems),
                          line=errors[0][0], key=errors[0][1])

    resolved = _resolve(raw)
    _validate_json_schema(resolved, lines)
    config = _build_config(resolved)
    _validate_config_integrity(config, lines)
    config.warnings = _collect_warnings(config)
    logger.info(
        f"Конфигурация: сценарий {config.scenario}, β={config.beta}, σ={config.sigma}, "
        f"L={config.L}, dt={config.dt}, T={config.T}, метод {config.method}"
    )
    return config


def load_config(path) -> RunConfig:
    """
    Чтение и разбор файла конфигурации.

    Raises:
        FileNotFoundError: файл не найден
        ConfigError: ошибки конфигурации
    """
    logger.info(f"Загрузка конфигурации из {path}")
    with open(path, "r", encoding="utf-8") as file:
        return parse_config(file.read())
