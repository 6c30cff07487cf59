# cxhyp/env_validation.py
"""
Environment variable helpers and a startup sanity report.
"""

import logging
import os
from typing import Any, Dict

VALID_LOG_LEVELS = ("CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG")


def get_env_var(key: str, default: Any = None) -> Any:
    return os.getenv(key, default)


def get_env_bool(key: str, default: bool = False) -> bool:
    """Get boolean environment variable"""
    value = os.getenv(key, str(default)).lower()
    return value in ("true", "1", "yes", "y", "on")


def get_env_int(key: str, default: int = 0) -> int:
    """Get integer environment variable"""
    try:
        return int(os.getenv(key, str(default)))
    except ValueError:
        return default


def validate_runtime_env() -> Dict[str, Any]:
    """Check CXHYP_THREADS and LOG_LEVEL; never raises."""
    results = {"valid": True, "errors": [], "warnings": []}

    raw_threads = os.getenv("CXHYP_THREADS")
    if raw_threads is not None:
        try:
            if int(raw_threads) < 1:
                results["errors"].append("CXHYP_THREADS must be >= 1")
        except ValueError:
            results["errors"].append(f"CXHYP_THREADS is not an integer: {raw_threads!r}")

    level = os.getenv("LOG_LEVEL", "INFO").upper()
    if level not in VALID_LOG_LEVELS:
        results["warnings"].append(f"Unknown LOG_LEVEL {level!r}, using INFO")

    results["valid"] = not results["errors"]
    return results


def report_runtime_env(log: logging.Logger) -> bool:
    res = validate_runtime_env()
    for w in res["warnings"]:
        log.warning(w)
    for e in res["errors"]:
        log.error(e)
    return res["valid"]
