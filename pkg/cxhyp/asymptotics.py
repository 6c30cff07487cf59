"""Laplace-method engine, closed-form constants of the large-k asymptotics,
and log-log fits used to check them.

Public API:
    LaplaceProblem, find_critical_point, laplace_estimate, laplace_estimate_log
    inner_laplace_problem(n, k, u), inner_peak_fprime, inner_peak_fsecond
    inner_integral_asymptote(n, k, u), j2_asymptote(n, k, lam), j2_closed_form(n, k, lam)
    theorem_constant(n, k, length)
    correction_exponent_fit(samples), ratio_decay_fit(ks, ratios)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import betaln

from .ball_geometry import log_weight_constant
from .errors import CriticalPointError, DomainError, PreconditionError
from .logger import get_logger

log = get_logger("asymptotics")

Fn = Callable[[float], float]


@dataclass(frozen=True)
class LaplaceProblem:
    """int g(x) f(x)^N dx over ``bracket`` with one interior maximum of f."""

    f: Fn
    g: Fn
    N: float
    bracket: Tuple[float, float]
    fprime: Optional[Fn] = None
    fsecond: Optional[Fn] = None
    x0_guess: Optional[float] = None


def _central(fn: Fn, h_rel: float = 1e-5) -> Fn:
    def d(x: float) -> float:
        h = h_rel * max(1.0, abs(x))
        return (fn(x + h) - fn(x - h)) / (2.0 * h)

    return d


def find_critical_point(p: LaplaceProblem, tol: float = 1e-12,
                        max_iter: int = 200) -> Tuple[float, float, float]:
    """Safeguarded Newton on f' inside the bracket; returns (x0, f'(x0), f''(x0))."""
    fp = p.fprime or _central(p.f)
    fpp = p.fsecond or _central(fp, 1e-4)
    a, b = map(float, p.bracket)
    if not a < b:
        raise DomainError("bracket must satisfy a < b")
    da, db = fp(a), fp(b)
    if not (da > 0 > db):
        raise CriticalPointError("no interior maximum of f in the bracket",
                                 diagnostics={"fprime_a": da, "fprime_b": db})
    x = float(p.x0_guess) if p.x0_guess is not None and a < p.x0_guess < b else 0.5 * (a + b)
    d1 = fp(x)
    for it in range(max_iter):
        if abs(d1) <= tol:
            break
        if d1 > 0:
            a = x
        else:
            b = x
        d2 = fpp(x)
        step = x - d1 / d2 if d2 < 0 else math.nan
        x = step if a < step < b else 0.5 * (a + b)
        d1 = fp(x)
        if b - a <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            break
    d2 = fpp(x)
    if not d2 < 0:
        raise CriticalPointError("f'' >= 0 at the critical point",
                                 diagnostics={"x0": x, "fsecond": d2})
    log.debug("critical point x0=%.16g after %d iterations (f'=%.3g)", x, it, d1)
    return x, d1, d2


def laplace_estimate_log(p: LaplaceProblem) -> Tuple[float, float]:
    """(sign, log|estimate|) of g(x0) f(x0)^{N+1/2} (-2 pi / (N f''(x0)))^{1/2}."""
    x0, _, f2 = find_critical_point(p)
    f0, g0 = p.f(x0), p.g(x0)
    if not f0 > 0:
        raise CriticalPointError("f must be positive at the critical point", diagnostics={"f": f0})
    if g0 == 0:
        return 0.0, -math.inf
    value = (math.log(abs(g0)) + (p.N + 0.5) * math.log(f0)
             + 0.5 * math.log(-2.0 * math.pi / (p.N * f2)))
    return math.copysign(1.0, g0), value


def laplace_estimate(p: LaplaceProblem) -> float:
    sign, lv = laplace_estimate_log(p)
    return sign * math.exp(lv)


# ---------------------------------------------------- the J2 inner integral


def inner_peak_f(u: float) -> Fn:
    return lambda x: math.sqrt(1.0 - x * x) / (1.0 - x * u)


def inner_peak_fprime(u: float) -> Fn:
    """f'(x) = (u - x) / (sqrt(1-x^2) (1-xu)^2)."""
    return lambda x: (u - x) / (math.sqrt(1.0 - x * x) * (1.0 - x * u) ** 2)


def inner_peak_fsecond(u: float) -> Fn:
    """f'' = f (L'' + L'^2) with L = log f."""

    def f2(x: float) -> float:
        q = 1.0 - x * u
        s = 1.0 - x * x
        d1 = -x / s + u / q
        d2 = -(1.0 + x * x) / (s * s) + (u * u) / (q * q)
        return math.sqrt(s) / q * (d2 + d1 * d1)

    return f2


def inner_laplace_problem(n: int, k: int, u: float) -> LaplaceProblem:
    """f = sqrt(1-x^2)/(1-xu), g = (1-xu)^{-2}, N = (n+1)k - 2 on (-1, 1)."""
    if not abs(u) < 1.0:
        raise DomainError("need |u| < 1")
    return LaplaceProblem(
        f=inner_peak_f(u),
        g=lambda x: (1.0 - x * u) ** -2,
        N=float((n + 1) * k - 2),
        bracket=(-1.0 + 1e-9, 1.0 - 1e-9),
        fprime=inner_peak_fprime(u),
        fsecond=inner_peak_fsecond(u),
        x0_guess=u,
    )


def inner_integral_asymptote_log(n: int, k: int, u: float) -> float:
    N = (n + 1) * k
    if not abs(u) < 1.0:
        raise DomainError("need |u| < 1")
    if not N > 2:
        raise DomainError("need (n+1)k > 2")
    return 0.5 * math.log(2.0 * math.pi / (N - 2)) - 0.5 * N * math.log1p(-u * u)


def inner_integral_asymptote(n: int, k: int, u: float) -> float:
    """sqrt(2 pi / ((n+1)k - 2)) (1 - u^2)^{-(n+1)k/2}."""
    return math.exp(inner_integral_asymptote_log(n, k, u))


def _log_lambda(lam: float) -> float:
    if not lam * lam > 1.0:
        raise DomainError(f"need lambda^2 > 1, got lambda = {lam}")
    return math.log(abs(lam))


def _j2_prefactor_log(n: int, k: int) -> float:
    return log_weight_constant(n, k) + (2.0 / (n + 1)) * (math.lgamma(n + 1) - n * math.log(math.pi))


def j2_asymptote(n: int, k: int, lam: float) -> float:
    """c(B^n,k)(n!/pi^n)^{2/(n+1)} sqrt(2 pi/((n+1)k-2)) ln|lambda|."""
    ll = _log_lambda(lam)
    N = (n + 1) * k
    return math.exp(_j2_prefactor_log(n, k) + 0.5 * math.log(2.0 * math.pi / (N - 2))) * ll


def j2_closed_form(n: int, k: int, lam: float) -> float:
    """Exact J2: the inner integral equals (1-u^2)^{-(n+1)k/2} B(1/2, (n+1)k/2)
    (Mobius substitution x -> (v+u)/(1+uv)), and the outer integral of
    (1-u^2)^{-1} over the segment is ln|lambda|."""
    ll = _log_lambda(lam)
    N = (n + 1) * k
    return math.exp(_j2_prefactor_log(n, k) + float(betaln(0.5, N / 2.0))) * ll


def theorem_constant(n: int, k: int, length: float) -> float:
    """k^{n-1/2} (n+1)^{n-1/2} / (pi^{(3n-1)/(2n+2)} (n!)^{(n-1)/(n+1)}) * length / sqrt(2)."""
    if not length > 0:
        raise DomainError("geodesic length must be positive")
    lv = ((n - 0.5) * math.log(k * (n + 1))
          - (3 * n - 1) / (2 * n + 2) * math.log(math.pi)
          - (n - 1) / (n + 1) * math.lgamma(n + 1))
    return math.exp(lv) * length / math.sqrt(2.0)


# ---------------------------------------------------------------- fits


def _loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(xs, dtype=float)),
                            np.log(np.asarray(ys, dtype=float)), 1)[0])


def correction_exponent_fit(samples: Sequence[Tuple[float, float, float]]) -> float:
    """Least-squares slope of log|j2 - asymptote| against log k."""
    if len(samples) < 6:
        raise PreconditionError("need at least 6 samples")
    ks = np.array([s[0] for s in samples], dtype=float)
    if ks.max() < 4.0 * ks.min():
        raise PreconditionError("k must span at least a factor of 4")
    vals = np.array([s[1] for s in samples], dtype=float)
    res = np.abs(vals - np.array([s[2] for s in samples], dtype=float))
    if np.any(res <= 1e-13 * np.abs(vals)):
        raise PreconditionError("residuals at the noise floor: increase k range or precision",
                                diagnostics={"min_relative": float(np.min(res / np.abs(vals)))})
    return _loglog_slope(ks, res)


def ratio_decay_fit(ks: Sequence[float], ratios: Sequence[float]) -> float:
    """Slope of log|ratio - 1| against log k."""
    dev = np.abs(np.asarray(ratios, dtype=float) - 1.0)
    if np.any(dev == 0):
        raise PreconditionError("ratio equals 1 exactly; nothing to fit")
    return _loglog_slope(ks, dev)
