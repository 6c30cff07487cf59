import json
import math
import os
import pathlib
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TypeVar

import numpy as np

from .errors import ParseError
from .logger import get_logger

BASE = pathlib.Path(__file__).resolve().parents[1]
CONFIG_DIR = BASE / "config"

log = get_logger("utils")

T = TypeVar("T")
R = TypeVar("R")


def load_json(path: str, default: Any = None):
    """Lenient JSON loading: missing or broken files give ``default``."""
    try:
        if not os.path.exists(path):
            return default
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        log.warning("Invalid JSON in %s: %s", path, e)
        return default
    except OSError as e:
        log.warning("Failed to load %s: %s", path, e)
        return default


def read_json(path: str) -> Any:
    """Strict JSON loading for user inputs."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as e:
        raise ParseError(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON in {path}: {e}") from e
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e


def save_json(path: str, obj: Any):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def load_config(command: str, with_global: bool = True) -> Dict[str, Any]:
    """Per-command defaults, layered over global.json unless ``with_global`` is off."""
    g = load_json(str(CONFIG_DIR / "global.json"), {}) if with_global else {}
    m = load_json(str(CONFIG_DIR / f"{command}.json"), {})
    cfg = {**g, **m}
    log.debug("Loaded config for command=%s: %s", command, cfg)
    return cfg


def ordered_map(
    fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None
) -> List[R]:
    """Map ``fn`` over ``items`` on a thread pool, results in input order."""
    items = list(items)
    if threads is None:
        from .config_manager import get_thread_count

        threads = get_thread_count()
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def fmt17(x: float) -> str:
    return "%.17g" % x


def complex_to_pair(c: complex) -> List[float]:
    return [float(c.real), float(c.imag)]


def to_pairs(arr) -> List:
    """Nested ``[re, im]`` lists for a complex array of any rank."""
    a = np.asarray(arr, dtype=complex)
    if a.ndim == 0:
        return complex_to_pair(complex(a))
    return [to_pairs(x) for x in a]


def from_pairs(obj: Sequence) -> np.ndarray:
    """Inverse of :func:`to_pairs`."""
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"not a numeric array: {e}") from e
    if a.ndim == 0 or a.shape[-1] != 2:
        raise ParseError("expected [re, im] pairs")
    out = a[..., 0] + 1j * a[..., 1]
    if not np.all(np.isfinite(out)):
        raise ParseError("non-finite entries")
    return out


def finite_or_none(x: float) -> Optional[float]:
    return float(x) if math.isfinite(x) else None
