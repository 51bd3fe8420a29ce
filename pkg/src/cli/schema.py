"""
Схема конфигурации эксперимента: значения по умолчанию, переопределения и проверка jsonschema
"""
import copy
import json
import logging
import math
from typing import Any, Dict, Iterable, List

from jsonschema import Draft7Validator

from ..core.errors import ConfigError

logger = logging.getLogger(__name__)

MODES = ("spectrum", "dynamics", "zeromode", "iontrap", "iontrap-dynamics")

MODE_SECTIONS = {
    "spectrum": ("model", "spectrum"),
    "dynamics": ("model", "dynamics"),
    "zeromode": ("zeromode",),
    "iontrap": ("trap", "laser", "active"),
    "iontrap-dynamics": ("trap", "laser", "active", "dynamics"),
}

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "model": {
        "theta": math.pi / 2,
        "delta": 0.0,
        "perturbation": "none",
        "boundary": "open",
        "rescaled": False,
        "perturbation_norm": "spin",
    },
    "spectrum": {
        "method": "auto",
        "k": 32,
        "with_vectors": True,
        "gap_tol": 1e-6,
        "oracle": True,
    },
    "dynamics": {
        "T": 200.0,
        "sample_dt": 0.1,
        "dt": None,
        "N": 64,
        "sites": [1],
        "axes": ["z"],
        "method": "rk4",
        "fixed_edge": None,
        "beats": False,
        "expected_carrier": None,
        "diagonal_ensemble": False,
        "step_check": True,
        "ensemble_check": True,
    },
    "zeromode": {
        "kinds": ["A", "B", "C"],
        "L_values": [4, 6, 8, 10],
        "delta": 0.4,
        "M": 0.0,
        "odd_weight": None,
    },
    "trap": {
        "N": 70,
        "wx_over_wz": 18.75,
        "wy_over_wz": 125.0,
        "omega_z": 2.0 * math.pi * 80e3,
        "mass_amu": 170.936323,
        "restarts": 20,
        "seed": 0,
    },
    "laser": {
        "phi_a": 0.5164,
        "optimize_phi": True,
        "k_mag": 2.0 * math.pi / 400e-9,
        "rabi_a": 1.0,
        "rabi_b": 1.0,
        "detuning_a": 6.0,
        "detuning_b": 6.75,
        "extra_tones_a": [],
        "extra_tones_b": [],
        "homogenize": True,
    },
    "active": {"L": 8},
}

# Режимные значения по умолчанию поверх DEFAULTS
MODE_DEFAULTS: Dict[str, Dict[str, Dict[str, Any]]] = {
    "iontrap-dynamics": {"dynamics": {"axes": ["x", "y", "z"], "N": 40}},
}

_NUMBER = {"type": "number"}
_NULLABLE_NUMBER = {"type": ["number", "null"]}
_TONES = {
    "type": "array",
    "items": {
        "type": "object",
        "properties": {"rabi": _NUMBER, "detuning": _NUMBER},
        "required": ["rabi", "detuning"],
        "additionalProperties": False,
    },
}

SECTION_SCHEMAS: Dict[str, Dict[str, Any]] = {
    "model": {
        "type": "object",
        "properties": {
            "L": {"type": "integer", "minimum": 2, "multipleOf": 2},
            "theta": _NUMBER,
            "delta": _NUMBER,
            "perturbation": {"enum": ["none", "intra", "inter", "ising"]},
            "boundary": {"enum": ["open", "periodic"]},
            "rescaled": {"type": "boolean"},
            "perturbation_norm": {"enum": ["spin", "pauli"]},
        },
        "required": ["L"],
        "additionalProperties": False,
    },
    "spectrum": {
        "type": "object",
        "properties": {
            "method": {"enum": ["auto", "dense", "lanczos"]},
            "k": {"type": "integer", "minimum": 1},
            "with_vectors": {"type": "boolean"},
            "gap_tol": {"type": "number", "exclusiveMinimum": 0},
            "oracle": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "dynamics": {
        "type": "object",
        "properties": {
            "T": {"type": "number", "exclusiveMinimum": 0},
            "sample_dt": {"type": "number", "exclusiveMinimum": 0},
            "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
            "N": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer", "minimum": 0},
            "sites": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "axes": {"type": "array", "items": {"enum": ["x", "y", "z"]}, "minItems": 1},
            "method": {"enum": ["rk4", "exact"]},
            "fixed_edge": {"enum": [None, 1, -1]},
            "beats": {"type": "boolean"},
            "expected_carrier": _NULLABLE_NUMBER,
            "diagonal_ensemble": {"type": "boolean"},
            "step_check": {"type": "boolean"},
            "ensemble_check": {"type": "boolean"},
        },
        "required": ["seed"],
        "additionalProperties": False,
    },
    "zeromode": {
        "type": "object",
        "properties": {
            "kinds": {"type": "array", "items": {"enum": ["A", "B", "C"]}, "minItems": 1},
            "L_values": {
                "type": "array",
                "items": {"type": "integer", "minimum": 2, "multipleOf": 2},
                "minItems": 1,
            },
            "delta": {"type": "number", "exclusiveMinimum": -1},
            "M": {"type": "number", "exclusiveMinimum": -1, "exclusiveMaximum": 1},
            "odd_weight": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        },
        "additionalProperties": False,
    },
    "trap": {
        "type": "object",
        "properties": {
            "N": {"type": "integer", "minimum": 2},
            "wx_over_wz": {"type": "number", "exclusiveMinimum": 1},
            "wy_over_wz": {"type": "number", "exclusiveMinimum": 1},
            "omega_z": {"type": "number", "exclusiveMinimum": 0},
            "mass_amu": {"type": "number", "exclusiveMinimum": 0},
            "restarts": {"type": "integer", "minimum": 1},
            "seed": {"type": "integer", "minimum": 0},
        },
        "additionalProperties": False,
    },
    "laser": {
        "type": "object",
        "properties": {
            "phi_a": _NUMBER,
            "optimize_phi": {"type": "boolean"},
            "k_mag": {"type": "number", "exclusiveMinimum": 0},
            "rabi_a": _NUMBER,
            "rabi_b": _NUMBER,
            "detuning_a": _NUMBER,
            "detuning_b": _NUMBER,
            "extra_tones_a": _TONES,
            "extra_tones_b": _TONES,
            "homogenize": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "active": {
        "type": "object",
        "properties": {"L": {"type": "integer", "minimum": 4, "multipleOf": 2}},
        "additionalProperties": False,
    },
}


def build_schema(mode: str) -> Dict[str, Any]:
    """JSON-схема документа для режима"""
    sections = MODE_SECTIONS[mode]
    return {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "type": "object",
        "properties": {
            "mode": {"enum": list(MODES)},
            "output_dir": {"type": ["string", "null"]},
            **{name: SECTION_SCHEMAS[name] for name in sections},
        },
        "required": ["mode", *sections],
        "additionalProperties": False,
    }


def parse_override(item: str) -> tuple:
    """
    Разобрать 'section.key=value'; значение читается как литерал JSON, иначе как строка

    Returns:
        (список ключей пути, значение)
    """
    if "=" not in item:
        raise ConfigError(f"Переопределение '{item}' должно иметь вид ключ=значение", key=item)
    path, raw = item.split("=", 1)
    keys = [k for k in path.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"Пустой путь в переопределении '{item}'", key=item)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return keys, value


def apply_overrides(document: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """Применить переопределения --set к копии документа"""
    result = copy.deepcopy(document)
    for item in overrides or ():
        keys, value = parse_override(item)
        node = result
        for key in keys[:-1]:
            child = node.setdefault(key, {})
            if not isinstance(child, dict):
                raise ConfigError(f"Ключ '{key}' не является разделом", key=".".join(keys))
            node = child
        node[keys[-1]] = value
    return result


def _error_path(error) -> str:
    path: List[str] = [str(p) for p in error.absolute_path]
    if error.validator == "required":
        missing = error.message.split("'")[1] if "'" in error.message else ""
        path.append(missing)
    elif error.validator == "additionalProperties":
        extra = error.message.split("'")[1] if "'" in error.message else ""
        path.append(extra)
    return ".".join(p for p in path if p)


def resolve_config(document: Dict[str, Any], overrides: Iterable[str] = ()) -> Dict[str, Any]:
    """
    Полная конфигурация: переопределения, значения по умолчанию и проверка схемы

    Args:
        document: Исходный JSON-документ
        overrides: Строки 'section.key=value'

    Returns:
        Разрешённая конфигурация

    Raises:
        ConfigError: С путём к первому ошибочному ключу
    """
    if not isinstance(document, dict):
        raise ConfigError("Конфигурация должна быть объектом JSON")
    config = apply_overrides(document, overrides)
    mode = config.get("mode")
    if mode not in MODES:
        raise ConfigError(f"Неизвестный режим '{mode}', ожидается один из {MODES}", key="mode")

    for section in MODE_SECTIONS[mode]:
        given = config.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError("Раздел должен быть объектом", key=section)
        merged = copy.deepcopy(DEFAULTS.get(section, {}))
        merged.update(copy.deepcopy(MODE_DEFAULTS.get(mode, {}).get(section, {})))
        merged.update(given)
        config[section] = merged

    validator = Draft7Validator(build_schema(mode))
    errors = sorted(validator.iter_errors(config), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        first = errors[0]
        key = _error_path(first)
        logger.error(f"Ошибка конфигурации в '{key}': {first.message}")
        raise ConfigError(first.message, key=key)

    if mode in ("iontrap", "iontrap-dynamics"):
        trap = config["trap"]
        if not trap["wy_over_wz"] > trap["wx_over_wz"]:
            raise ConfigError("Требуется ω_y/ω_z > ω_x/ω_z", key="trap.wy_over_wz")
        if 3 * config["active"]["L"] // 2 > trap["N"]:
            raise ConfigError(
                f"Окно из {3 * config['active']['L'] // 2} ионов больше кристалла из {trap['N']}",
                key="active.L",
            )
    if mode in ("dynamics", "iontrap-dynamics"):
        L = config["model"]["L"] if mode == "dynamics" else config["active"]["L"]
        for site in config["dynamics"]["sites"]:
            if site > L:
                raise ConfigError(f"Узел {site} вне цепочки длины {L}", key="dynamics.sites")
    return config
