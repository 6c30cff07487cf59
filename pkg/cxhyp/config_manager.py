"""Typed accessors for config/global.json."""
from __future__ import annotations

from functools import lru_cache
from typing import Any, Dict

from .env_validation import get_env_int
from .utils import CONFIG_DIR, load_json

_DEFAULT_TOLERANCES = {
    "membership": 1e-10,
    "eigen_residual": 1e-10,
    "orthonormality": 1e-10,
    "boundary": 1e-10,
    "real_snap": 1e-8,
    "endpoint_imag": 1e-8,
    "xy_pairing": 1e-10,
    "distance_ratio": 1e-12,
}

_DEFAULT_QUADRATURE = {"order": 16, "rel_tol": 1e-10, "max_panels": 4096}
_DEFAULT_SERIES = {"quad_factor": 8.0, "tol": 1e-10}
_DEFAULT_GROUP = {
    "max_word_length": 12,
    "max_elements": 50000,
    "dedup_grid": 1e-6,
    "dedup_tol": 1e-8,
    "delta_grid": 64,
    "delta_refine": 8,
}


@lru_cache(maxsize=None)
def _global() -> Dict[str, Any]:
    return load_json(str(CONFIG_DIR / "global.json"), {})


def reload_config():
    _global.cache_clear()


def _section(name: str, defaults: Dict[str, Any]) -> Dict[str, Any]:
    return {**defaults, **(_global().get(name) or {})}


def get_tolerance(name: str) -> float:
    tols = _section("tolerances", _DEFAULT_TOLERANCES)
    if name not in tols:
        raise KeyError(f"unknown tolerance: {name}")
    value = float(tols[name])
    if not value > 0:
        raise ValueError(f"tolerance {name} must be positive, got {value}")
    return value


def get_quadrature_defaults() -> Dict[str, Any]:
    q = _section("quadrature", _DEFAULT_QUADRATURE)
    q["order"] = int(min(max(int(q["order"]), 2), 64))
    q["rel_tol"] = max(float(q["rel_tol"]), 1e-14)
    q["max_panels"] = max(int(q["max_panels"]), 1)
    return q


def get_series_defaults() -> Dict[str, Any]:
    s = _section("series", _DEFAULT_SERIES)
    return {"quad_factor": float(s["quad_factor"]), "tol": float(s["tol"])}


def get_group_limits() -> Dict[str, Any]:
    return _section("group", _DEFAULT_GROUP)


def get_output_digits() -> int:
    return int(_global().get("output_digits", 17))


def get_thread_count() -> int:
    configured = max(int(_global().get("threads", 1)), 1)
    cap = get_env_int("CXHYP_THREADS", configured)
    return max(1, min(configured, cap)) if cap >= 1 else configured
