"""Command-line surface: normal-form, sweep, series, enum.

Exit codes: 0 ok, 1 usage/parse, 2 mathematical precondition, 3 non-convergence.
Outputs embed the run config and code version and carry no timestamps, so
identical configs give identical bytes.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from . import __version__
from .asymptotics import j2_asymptote, theorem_constant
from .ball_geometry import BallPoint
from .env_validation import report_runtime_env
from .errors import ConvergenceError, CxhypError, DimensionError, ParseError, PreconditionError
from .geodesic_normal_form import decompose, geodesic_length, normal_form_matrix
from .group_enum import cyclic_elements, octagon_group, word_ball
from .indefinite_linalg import GroupElement, matrix_from_json, random_element
from .logger import get_logger
from .series_inner_products import (
    SeriesParams,
    SeriesResult,
    inner_product_geodesic,
    j2_integral,
    relative_poincare,
    theta_geodesic,
    theta_point,
)
from .utils import from_pairs, load_config, ordered_map, read_json

log = get_logger("cli")

COMMANDS = ("normal-form", "sweep", "series", "enum")
SERIES_KINDS = ("point", "geodesic", "inner", "poincare")
CSV_COLUMNS = ["n", "k", "lambda", "j2", "asymptote", "theorem_value", "ratio", "residual"]


class _ArgParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    n: int = 1
    k: Optional[int] = None
    k_min: Optional[int] = None
    k_max: Optional[int] = None
    k_step: int = 1
    geometric: bool = False
    lam: float = 2.0
    gens: Optional[str] = None
    octagon: bool = False
    matrix: Optional[str] = None
    truncation: int = 0
    quad_order: Optional[int] = None
    quad_points: Optional[int] = None
    out: Optional[str] = None
    fmt: str = "json"
    seed: Optional[int] = None
    axis: int = 0
    z: Optional[str] = None
    w: Optional[str] = None
    series: str = "point"

    def validate(self):
        if self.command not in COMMANDS:
            raise ParseError(f"unknown command {self.command!r}")
        if self.fmt not in ("csv", "json"):
            raise ParseError(f"format must be csv or json, got {self.fmt!r}")
        if self.n < 1:
            raise ParseError("--n must be >= 1")
        if self.series not in SERIES_KINDS:
            raise ParseError(f"--series must be one of {', '.join(SERIES_KINDS)}")
        if self.command == "sweep":
            if self.k_min is None or self.k_max is None:
                raise ParseError("sweep needs --k-min and --k-max")
            if not self.k_range():
                raise ParseError(f"empty k range [{self.k_min}, {self.k_max}]")
        if self.command == "series" and self.k is None:
            raise ParseError("series needs --k")
        if self.command == "normal-form" and not self.matrix:
            raise ParseError("normal-form needs a matrix file")
        if self.command == "enum" and not (self.gens or self.octagon):
            raise ParseError("enum needs --gens or --octagon")
        if self.truncation < 0:
            raise ParseError("--trunc must be nonnegative")
        if self.axis < 0:
            raise ParseError("--axis must be nonnegative")

    def k_range(self) -> List[int]:
        if self.k_min is None or self.k_max is None or self.k_min < 1:
            return []
        if self.geometric:
            ks, k = [], self.k_min
            while k <= self.k_max:
                ks.append(k)
                k *= 2
            return ks
        if self.k_step < 1:
            return []
        return list(range(self.k_min, self.k_max + 1, self.k_step))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _build_parser() -> _ArgParser:
    ap = _ArgParser(prog="cxhyp", description="Complex hyperbolic Poincaré series experiments")
    ap.add_argument("--version", action="version", version=f"cxhyp {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_ArgParser)

    def common(p):
        p.add_argument("--n", type=int)
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--out")
        p.add_argument("--format", dest="fmt", choices=["csv", "json"])
        p.add_argument("--quad-order", type=int)

    p = sub.add_parser("normal-form", help="decompose a hyperbolic matrix")
    p.add_argument("matrix")
    common(p)

    p = sub.add_parser("sweep", help="J2 against its asymptotes over a k range")
    common(p)
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--k-step", type=int)
    p.add_argument("--geometric", action="store_true", default=None)

    p = sub.add_parser("series", help="evaluate one truncated series")
    common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--gens")
    p.add_argument("--trunc", dest="truncation", type=int)
    p.add_argument("--quad-points", type=int)
    p.add_argument("--z", help="JSON list of [re, im] pairs")
    p.add_argument("--w", help="JSON list of [re, im] pairs")
    p.add_argument("--series", choices=list(SERIES_KINDS))
    p.add_argument("--axis", type=int, help="index of the generator whose axis is C")
    p.add_argument("--seed", type=int, help="conjugate the model axis by a seeded random element")

    p = sub.add_parser("enum", help="enumerate a word ball")
    common(p)
    p.add_argument("--gens")
    p.add_argument("--octagon", action="store_true", default=None)
    p.add_argument("--L", dest="truncation", type=int)
    return ap


_FILE_KEYS = {"lambda": "lam", "trunc": "truncation", "format": "fmt", "L": "truncation"}


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    ns = _build_parser().parse_args(argv)
    if ns.command is None:
        raise ParseError("a command is required: " + ", ".join(COMMANDS))
    # global.json sections feed config_manager, not RunConfig
    file_cfg = load_config(ns.command, with_global=False)
    fields = RunConfig.__dataclass_fields__
    values: Dict[str, Any] = {}
    for key, val in file_cfg.items():
        key = _FILE_KEYS.get(key, key)
        if key in fields and key != "command":
            values[key] = val
    for key, val in vars(ns).items():
        if val is not None and key in fields:
            values[key] = val
    values["command"] = ns.command
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# ------------------------------------------------------------------ output


def _header(cfg: RunConfig) -> str:
    return f"# cxhyp {__version__}\n# config: {json.dumps(cfg.to_dict(), sort_keys=True)}\n"


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _json_text(cfg: RunConfig, payload: Dict[str, Any]) -> str:
    doc = {"version": __version__, "config": cfg.to_dict(), **payload}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_text(cfg: RunConfig, rows: List[Dict[str, Any]]) -> str:
    buf = io.StringIO()
    buf.write(_header(cfg))
    pd.DataFrame(rows, columns=CSV_COLUMNS).to_csv(
        buf, index=False, float_format="%.17g", lineterminator="\n"
    )
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def _read_matrix(path: str, tol: Optional[float] = None) -> GroupElement:
    M = matrix_from_json(read_json(path))
    return GroupElement.from_matrix(M, tol)


def _read_generators(path: str) -> List[GroupElement]:
    obj = read_json(path)
    if isinstance(obj, dict):
        obj = obj.get("generators")
    if not isinstance(obj, list) or not obj:
        raise ParseError("generator file must hold a non-empty list of matrices")
    return [GroupElement.from_matrix(matrix_from_json(m), 1e-9) for m in obj]


def cmd_normal_form(cfg: RunConfig) -> int:
    g = _read_matrix(cfg.matrix)
    dec = decompose(g)
    _emit(_json_text(cfg, {"decomposition": dec.to_json()}), cfg.out)
    return 0


def _sweep_row(cfg: RunConfig, k: int) -> Dict[str, Any]:
    n, lam = cfg.n, cfg.lam
    j2 = j2_integral(n, k, lam, cfg.quad_order)
    asym = j2_asymptote(n, k, lam)
    theorem = theorem_constant(n, k, geodesic_length(lam))
    log.info("sweep n=%d k=%d: j2/theorem = %.12g", n, k, j2 / theorem)
    return {"n": n, "k": k, "lambda": lam, "j2": j2, "asymptote": asym,
            "theorem_value": theorem, "ratio": j2 / theorem, "residual": j2 - asym}


def cmd_sweep(cfg: RunConfig) -> int:
    """One CSV row per k; rows computed before a failure are still written."""

    def attempt(k: int):
        try:
            return _sweep_row(cfg, k)
        except CxhypError as e:
            return e

    rows: List[Dict[str, Any]] = []
    failure: Optional[CxhypError] = None
    for res in ordered_map(attempt, cfg.k_range()):
        if isinstance(res, CxhypError):
            failure = res
            break
        rows.append(res)
    if cfg.fmt == "csv":
        _emit(_csv_text(cfg, rows), cfg.out)
    else:
        _emit(_json_text(cfg, {"rows": rows}), cfg.out)
    if failure is not None:
        raise failure
    return 0


def _parse_point(text: Optional[str], n: int) -> BallPoint:
    if not text:
        return BallPoint(np.zeros(n, dtype=complex))
    try:
        z = from_pairs(json.loads(text))
    except json.JSONDecodeError as e:
        raise ParseError(f"point is not valid JSON: {e}") from e
    if z.shape != (n,):
        raise ParseError(f"point must have {n} coordinates")
    return BallPoint(z)


def _model_axis(cfg: RunConfig) -> GroupElement:
    """gamma0(lambda), conjugated by a seeded random real element when --seed is set."""
    gamma = normal_form_matrix(cfg.lam, cfg.n)
    if cfg.seed is None:
        return gamma
    g = random_element(cfg.seed, 0.4, cfg.n, real=True)
    return g @ gamma @ g.inverse()


def cmd_series(cfg: RunConfig) -> int:
    params = SeriesParams(cfg.n, cfg.k, cfg.truncation, cfg.quad_points)
    z = _parse_point(cfg.z, cfg.n)
    dec = None
    if cfg.gens:
        gens = _read_generators(cfg.gens)
        if cfg.axis >= len(gens):
            raise ParseError(f"--axis {cfg.axis} out of range for {len(gens)} generators")
        group = word_ball(gens, cfg.truncation).elements
        if cfg.series != "point":
            dec = decompose(gens[cfg.axis])
    else:
        dec = decompose(_model_axis(cfg))
        # powers of gamma0 carried back to ball coordinates; words survive
        group = [dec.A_gamma @ h @ dec.A_inverse
                 for h in cyclic_elements(dec.gamma0, -cfg.truncation, cfg.truncation)]
    if cfg.series == "point":
        res = theta_point(_parse_point(cfg.w, cfg.n), z, params, group)
    elif cfg.series == "geodesic":
        res = theta_geodesic(z, dec, params, group)
    elif cfg.series == "inner":
        res = inner_product_geodesic(dec, params, group, conjugate=True)
    else:
        res = relative_poincare(z, dec, params)
    payload = {"result": {**res.to_json(), "lambda": dec.lam if dec is not None else None}}
    _emit(_json_text(cfg, payload), cfg.out)
    if not res.converged:
        raise ConvergenceError("series did not converge at this truncation",
                               diagnostics={"truncation": res.truncation,
                                            "tail": _finite(res.abs_tail_estimate)})
    return 0


def _finite(x: float) -> Optional[float]:
    return x if math.isfinite(x) else None


def cmd_enum(cfg: RunConfig) -> int:
    gens = octagon_group()[:4] if cfg.octagon else _read_generators(cfg.gens)
    ball = word_ball(gens, cfg.truncation)
    _emit(_json_text(cfg, {"ball": ball.to_json()}), cfg.out)
    return 0


_DISPATCH = {
    "normal-form": cmd_normal_form,
    "sweep": cmd_sweep,
    "series": cmd_series,
    "enum": cmd_enum,
}


def _fail(e: CxhypError, code: int) -> int:
    sys.stderr.write(json.dumps(e.to_record(), sort_keys=True, default=str) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    report_runtime_env(log)
    try:
        cfg = parse_config(argv)
        return _DISPATCH[cfg.command](cfg)
    except (ParseError, DimensionError) as e:
        return _fail(e, 1)
    except PreconditionError as e:
        return _fail(e, 2)
    except ConvergenceError as e:
        return _fail(e, 3)


if __name__ == "__main__":
    sys.exit(main())
