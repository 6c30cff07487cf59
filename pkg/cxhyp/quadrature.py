"""Gauss–Legendre quadrature: fixed composite rules, globally adaptive
bisection, and a log-space mode for integrands that overflow doubles.

Public API:
    gauss_legendre(order) -> (nodes, weights)
    fixed_gauss(f, a, b, order=16, panels=1) -> float
    integrate_1d(f, a, b, spec=None, *, breakpoints=(), peak=None) -> QuadResult
    integrate_2d_product(f, domain, spec=None, *, peak_fn=None, swap=False) -> QuadResult

Integrands are called with numpy arrays of nodes and must return arrays of
the same shape (log-values when ``spec.log_space`` is set).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from .config_manager import get_quadrature_defaults
from .errors import DomainError, QuadratureError
from .logger import get_logger

log = get_logger("quadrature")

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSpec:
    order: int = 16
    panels: Optional[int] = None  # None: adaptive
    rel_tol: float = 1e-10
    log_space: bool = False
    max_panels: int = 4096
    abs_tol: float = 0.0

    def __post_init__(self):
        if not 2 <= self.order <= 64:
            raise DomainError(f"quadrature order must lie in [2, 64], got {self.order}")
        if self.rel_tol < 1e-14:
            raise DomainError(f"rel_tol must be >= 1e-14, got {self.rel_tol}")
        if self.panels is not None and self.panels < 1:
            raise DomainError("panels must be positive")

    @classmethod
    def from_config(cls, **overrides) -> "QuadratureSpec":
        q = get_quadrature_defaults()
        base = dict(order=q["order"], rel_tol=q["rel_tol"], max_panels=q["max_panels"])
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    log_value: Optional[float] = None
    panels: int = 1

    @property
    def rel_error(self) -> float:
        if self.value == 0:
            return 0.0 if self.error_estimate == 0 else math.inf
        return self.error_estimate / abs(self.value)

    def __iter__(self) -> Iterator[float]:
        yield self.value
        yield self.error_estimate


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1]; cached per order, read-only."""
    if order < 1:
        raise DomainError("order must be positive")
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _nodes(a: float, b: float, order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def composite_nodes(a: float, b: float, order: int, panels: int = 1):
    """Composite rule on [a, b]: ``panels`` equal panels of ``order`` nodes."""
    edges = np.linspace(a, b, panels + 1)
    xs, ws = zip(*(_nodes(lo, hi, order) for lo, hi in zip(edges[:-1], edges[1:])))
    return np.concatenate(xs), np.concatenate(ws)


def _evaluate(f: Callable, x: np.ndarray) -> np.ndarray:
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.array([float(f(xi)) for xi in x])
    return y


def fixed_gauss(f: Callable, a: float, b: float, order: int = 16, panels: int = 1) -> float:
    x, w = composite_nodes(a, b, order, panels)
    terms = w * _evaluate(f, x)
    return math.fsum(terms[np.argsort(np.abs(terms))])


@dataclass
class _Panel:
    a: float
    b: float
    coarse: float
    fine: float
    abs_fine: float
    halves: Tuple[float, float]

    def err(self, log_space: bool) -> float:
        if not log_space:
            return abs(self.fine - self.coarse)
        if not math.isfinite(self.fine):
            return -math.inf
        # log of |exp(fine) - exp(coarse)|
        d = self.coarse - self.fine
        gap = abs(math.expm1(d)) if d < 700 else math.inf
        return self.fine + math.log(gap) if gap > 0 else -math.inf


def _panel_value(f, a, b, order, log_space) -> Tuple[float, float]:
    x, w = _nodes(a, b, order)
    y = _evaluate(f, x)
    if log_space:
        v = float(logsumexp(y + np.log(w)))
        return v, v
    t = w * y
    return math.fsum(t), math.fsum(np.abs(t))


def _make_panel(f, a, b, order, log_space, coarse=None) -> _Panel:
    if coarse is None:
        coarse, _ = _panel_value(f, a, b, order, log_space)
    m = 0.5 * (a + b)
    left, abs_l = _panel_value(f, a, m, order, log_space)
    right, abs_r = _panel_value(f, m, b, order, log_space)
    if log_space:
        fine = float(np.logaddexp(left, right))
        abs_fine = fine
    else:
        fine = left + right
        abs_fine = abs_l + abs_r
    return _Panel(a, b, coarse, fine, abs_fine, (left, right))


def _peak_breaks(peak: Tuple[float, float]) -> List[float]:
    p, width = peak
    return [p] + [p + s * c * width for c in (1.0, 3.0, 8.0) for s in (-1.0, 1.0)]


def integrate_1d(
    f: Callable,
    a: float,
    b: float,
    spec: Optional[QuadratureSpec] = None,
    *,
    breakpoints: Sequence[float] = (),
    peak: Optional[Tuple[float, float]] = None,
) -> QuadResult:
    """Globally adaptive Gauss–Legendre on [a, b].

    Each panel is compared against its two halves; the panel with the
    largest discrepancy is bisected until the summed discrepancy drops
    below ``rel_tol * |value|`` (or the rounding floor).  ``peak`` is a
    ``(location, width)`` hint that seeds extra breakpoints around a sharp
    maximum.
    """
    if not a < b:
        raise DomainError(f"integration requires a < b, got [{a}, {b}]")
    spec = spec or QuadratureSpec()
    cuts = set(float(t) for t in breakpoints)
    if peak is not None:
        cuts.update(_peak_breaks(peak))
    edges = [a] + sorted(t for t in cuts if a < t < b) + [b]

    if spec.panels is not None:
        return _fixed_result(f, edges, spec)

    ls = spec.log_space
    panels = [_make_panel(f, lo, hi, spec.order, ls) for lo, hi in zip(edges[:-1], edges[1:])]
    heap = [(-p.err(ls), i, p) for i, p in enumerate(panels)]
    heapq.heapify(heap)
    counter = len(heap)

    while True:
        total, err, abs_total = _totals(heap, ls)
        target = max(spec.rel_tol * abs(total), spec.abs_tol) if not ls else spec.rel_tol
        floor = 64 * _EPS * abs_total if not ls else 64 * _EPS
        if err <= max(target, floor):
            break
        if len(heap) >= spec.max_panels:
            best = _result(total, err, ls, len(heap))
            raise QuadratureError(
                "adaptive quadrature hit the panel cap",
                diagnostics={"panels": len(heap), "error": best.error_estimate,
                             "interval": [a, b]},
                best=best,
            )
        _, _, worst = heapq.heappop(heap)
        m = 0.5 * (worst.a + worst.b)
        for (lo, hi), coarse in zip(((worst.a, m), (m, worst.b)), worst.halves):
            child = _make_panel(f, lo, hi, spec.order, ls, coarse=coarse)
            heapq.heappush(heap, (-child.err(ls), counter, child))
            counter += 1

    res = _result(total, err, ls, len(heap))
    log.debug("integrate_1d [%g, %g]: %d panels, rel err %.3g", a, b, res.panels, res.rel_error)
    return res


def _totals(heap, log_space: bool) -> Tuple[float, float, float]:
    """(value, error, abs-sum); in log mode value is a log and error relative."""
    if not log_space:
        fines = [p.fine for _, _, p in heap]
        errs = [p.err(False) for _, _, p in heap]
        return math.fsum(fines), math.fsum(errs), math.fsum(p.abs_fine for _, _, p in heap)
    fines = np.array([p.fine for _, _, p in heap])
    total = float(logsumexp(fines))
    log_errs = np.array([p.err(True) for _, _, p in heap])
    if not math.isfinite(total):
        return total, 0.0, 0.0
    rel = float(np.exp(logsumexp(log_errs) - total)) if np.isfinite(log_errs).any() else 0.0
    return total, rel, 0.0


def _result(total: float, err: float, log_space: bool, panels: int) -> QuadResult:
    if not log_space:
        return QuadResult(total, err, math.log(total) if total > 0 else None, panels)
    value = math.exp(total) if total < 709.0 else math.inf
    return QuadResult(value, err * value if math.isfinite(value) else math.inf, total, panels)


def _fixed_result(f, edges, spec: QuadratureSpec) -> QuadResult:
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = composite_nodes(lo, hi, spec.order, spec.panels)
        xs.append(x)
        ws.append(w)
    x, w = np.concatenate(xs), np.concatenate(ws)
    y = _evaluate(f, x)
    half = max(spec.order // 2, 1)
    xh, wh = zip(*(composite_nodes(lo, hi, half, spec.panels)
                   for lo, hi in zip(edges[:-1], edges[1:])))
    yh = _evaluate(f, np.concatenate(xh))
    if spec.log_space:
        total = float(logsumexp(y + np.log(w)))
        coarse = float(logsumexp(yh + np.log(np.concatenate(wh))))
        rel = abs(math.expm1(coarse - total))
        return _result(total, rel, True, len(x) // spec.order)
    t = w * y
    total = math.fsum(t)
    coarse = math.fsum(np.concatenate(wh) * yh)
    return QuadResult(total, abs(total - coarse), math.log(total) if total > 0 else None,
                      len(x) // spec.order)


def integrate_2d_product(
    f: Callable,
    domain: Tuple[Tuple[float, float], Tuple[float, float]],
    spec: Optional[QuadratureSpec] = None,
    *,
    peak_fn: Optional[Callable[[float], Tuple[float, float]]] = None,
    swap: bool = False,
) -> QuadResult:
    """Nested adaptive integral of ``f(x, y)`` over ``[a,b] x [c,d]``.

    The outer variable is ``x`` (``y`` when ``swap``).  ``peak_fn(outer)``
    returns a ``(location, width)`` hint for the inner integrand.  In
    log-space mode ``f`` returns log-values and the result carries
    ``log_value``.
    """
    spec = spec or QuadratureSpec()
    (a, b), (c, d) = domain
    if swap:
        (a, b), (c, d) = (c, d), (a, b)
        g = f
        f = lambda x, y: g(y, x)  # noqa: E731
    inner_spec = replace(spec, rel_tol=max(spec.rel_tol * 0.1, 1e-14))
    inner_errs: List[float] = []

    def outer(xs: np.ndarray) -> np.ndarray:
        out = np.empty_like(xs, dtype=float)
        for i, x in enumerate(xs):
            hint = peak_fn(float(x)) if peak_fn is not None else None
            r = integrate_1d(lambda y, _x=float(x): f(_x, y), c, d, inner_spec, peak=hint)
            inner_errs.append(r.rel_error if math.isfinite(r.rel_error) else 0.0)
            out[i] = r.log_value if spec.log_space else r.value
        return out

    res = integrate_1d(outer, a, b, spec)
    inner = max(inner_errs) if inner_errs else 0.0
    err = res.error_estimate + inner * abs(res.value)
    return QuadResult(res.value, err, res.log_value, res.panels)
