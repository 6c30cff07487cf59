"""Truncated Poincaré series and geodesic inner products.

All kernel and Jacobian powers go through (log-magnitude, argument) pairs
with integer exponents, so (n+1)k in the thousands is fine.  A term of
Theta_w(z) is rewritten through the lift:

    K(Az, w)^k J(A, z)^k = (n!/pi^n)^k (-<<A z^, w^>>)^{-(n+1)k}

with z^ = (z; 1), which never forms the large Mobius denominators.

Public API:
    SeriesParams, SeriesResult
    theta_point, theta_geodesic, inner_product_geodesic, relative_poincare
    j2_integral, j1_bound, j1_bound_log, j1_decay_fit
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .ball_geometry import (
    BallPoint,
    LogComplex,
    kernel_diagonal_log,
    log_complex_sum,
    log_power,
    log_weight_constant,
    mobius_apply,
)
from .config_manager import get_series_defaults
from .errors import DomainError
from .geodesic_normal_form import HyperbolicDecomposition, axis_nodes, conjugate_to_model
from .group_enum import GroupBall, is_axis_power
from .indefinite_linalg import GroupElement
from .logger import get_logger
from .quadrature import QuadratureSpec, integrate_2d_product

log = get_logger("series_inner_products")

Group = Union[GroupBall, Sequence[GroupElement]]


def _kernel_prefactor_log(n: int) -> float:
    return math.lgamma(n + 1) - n * math.log(math.pi)


@dataclass(frozen=True)
class SeriesParams:
    n: int
    k: int
    truncation: int = 0
    quad_points: Optional[int] = None
    tol: Optional[float] = None
    quad_factor: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if self.k < 2:
            raise DomainError(f"k >= 2 required for convergence, got k = {self.k}")
        defaults = get_series_defaults()
        if self.quad_factor is None:
            object.__setattr__(self, "quad_factor", defaults["quad_factor"])
        if self.tol is None:
            object.__setattr__(self, "tol", defaults["tol"])
        floor = self.min_quad_points
        if self.quad_points is None:
            object.__setattr__(self, "quad_points", floor)
        elif self.quad_points < floor:
            raise DomainError(f"quad_points must be >= {floor} for n={self.n}, k={self.k}")

    @property
    def N(self) -> int:
        return (self.n + 1) * self.k

    @property
    def min_quad_points(self) -> int:
        return int(math.ceil(self.quad_factor * math.sqrt(self.N)))

    @property
    def panels(self) -> int:
        return max(1, int(math.ceil(math.sqrt(self.N) / 4.0)))

    @property
    def nodes_per_panel(self) -> int:
        return max(2, int(math.ceil(self.quad_points / self.panels)))

    def to_json(self) -> Dict[str, Any]:
        return {"n": self.n, "k": self.k, "truncation": self.truncation,
                "quad_points": self.quad_points, "tol": self.tol}


@dataclass(frozen=True)
class SeriesResult:
    value: complex
    log_value: LogComplex
    abs_tail_estimate: float
    params: SeriesParams
    converged: bool
    truncation: int
    shell_sums: Tuple[float, ...] = ()
    parts: Dict[str, complex] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {
            **self.params.to_json(),
            "value": [self.value.real, self.value.imag],
            "log_value": self.log_value.to_json(),
            "tail": self.abs_tail_estimate if math.isfinite(self.abs_tail_estimate) else None,
            "converged": self.converged,
            "truncation": self.truncation,
            "shell_log_magnitudes": [s if math.isfinite(s) else None for s in self.shell_sums],
            "parts": {k: [v.real, v.imag] for k, v in self.parts.items()},
        }


def _elements(group: Group) -> List[GroupElement]:
    if isinstance(group, GroupBall):
        return list(group.elements)
    return list(group)


def _shells(elements: Sequence[GroupElement]) -> np.ndarray:
    return np.array([len(h.word) for h in elements], dtype=int)


def _lift(z: np.ndarray) -> np.ndarray:
    return np.append(np.asarray(z, dtype=complex), 1.0)


def _form_rows(U: np.ndarray, v: np.ndarray) -> np.ndarray:
    """<<U_i, v>> along the last axis of U."""
    return np.sum(U[..., :-1] * np.conj(v[:-1]), axis=-1) - U[..., -1] * np.conj(v[-1])


def _reduce(
    log_mags: np.ndarray,
    args: np.ndarray,
    shells: np.ndarray,
    log_const: float,
    params: SeriesParams,
    parts: Optional[Dict[str, np.ndarray]] = None,
) -> SeriesResult:
    """Combine per-element term arrays (first axis = element) into a result.

    Shells are word lengths; the last shell's absolute mass decides
    convergence and a geometric fit of the last two shells gives the tail.
    """
    levels = sorted(set(int(s) for s in shells))
    shell_vals: List[LogComplex] = []
    shell_abs: List[float] = []
    for s in levels:
        sel = shells == s
        shell_vals.append(log_complex_sum(log_mags[sel], args[sel]))
        shell_abs.append(log_complex_sum(log_mags[sel], np.zeros_like(args[sel])).log_mag)
    total = log_complex_sum([v.log_mag for v in shell_vals], [v.arg for v in shell_vals])
    total = total.scale(log_const)
    shell_abs = [a + log_const for a in shell_abs]

    truncation = levels[-1]
    if len(levels) == 1:
        converged, tail = True, 0.0
    else:
        last, prev = shell_abs[-1], shell_abs[-2]
        converged = last <= math.log(params.tol) + total.log_mag
        log_r = last - prev
        if log_r < 0:
            tail_log = last + log_r - math.log(-math.expm1(log_r))
            tail = math.exp(tail_log) if tail_log < 709.0 else math.inf
        else:
            tail, converged = math.inf, False
    split = {}
    for name, mask in (parts or {}).items():
        split[name] = log_complex_sum(log_mags[mask], args[mask]).scale(log_const).to_complex()
    if not converged:
        log.warning("series not converged at truncation %d (last shell log-mass %.4g, total %.4g)",
                    truncation, shell_abs[-1], total.log_mag)
    return SeriesResult(total.to_complex(), total, tail, params, converged, truncation,
                        tuple(shell_abs), split)


def _theta_terms(mats: np.ndarray, z: np.ndarray, W: np.ndarray, N: int):
    """log (-<<A z^, w^>>)^{-N} for every element A and every w in W."""
    Az = mats @ _lift(z)  # (H, n+1)
    Wl = np.concatenate([W, np.ones(W.shape[:-1] + (1,))], axis=-1)  # (P, n+1)
    q = Az[:, :-1] @ Wl[:, :-1].conj().T - np.outer(Az[:, -1], Wl[:, -1].conj())  # (H, P)
    return log_power(-q, -N)


def theta_point(w: BallPoint, z: BallPoint, params: SeriesParams, group: Group) -> SeriesResult:
    """Theta_w(z) = c(B^n,k) sum_A K(Az, w)^k J(A, z)^k over the finite set."""
    els = _elements(group)
    if not els:
        raise DomainError("group element set is empty")
    n, k = params.n, params.k
    mats = np.stack([h.entries for h in els])
    lm, ar = _theta_terms(mats, z.coords, w.coords[None, :], params.N)
    log_const = log_weight_constant(n, k) + k * _kernel_prefactor_log(n)
    return _reduce(lm[:, 0], ar[:, 0], _shells(els), log_const, params)


def theta_geodesic(z: BallPoint, dec: HyperbolicDecomposition, params: SeriesParams,
                   group: Group) -> SeriesResult:
    """Theta_C(z): Theta_{A xi}(z) K(A xi, A xi)^{-k/2} phi(xi) integrated over
    the fundamental axis segment, A = A_gamma, group in ball coordinates."""
    els = _elements(group)
    n, k = params.n, params.k
    u, wq = axis_nodes(dec, params.nodes_per_panel, params.panels)
    xi = np.zeros((u.size, n), dtype=complex)
    xi[:, -1] = u
    W = np.stack([mobius_apply(dec.A_gamma, x) for x in xi])
    r2 = np.sum(np.abs(W) ** 2, axis=-1)
    node_log = (-0.5 * k * kernel_diagonal_log(n, r2)
                + np.log(wq) + np.log(_one_form(n, u)))
    mats = np.stack([h.entries for h in els])
    lm, ar = _theta_terms(mats, z.coords, W, params.N)
    lm = lm + node_log[None, :]
    log_const = log_weight_constant(n, k) + k * _kernel_prefactor_log(n)
    return _reduce(lm, ar, _shells(els), log_const, params)


def _one_form(n: int, u: np.ndarray) -> np.ndarray:
    return np.exp(_kernel_prefactor_log(n) / (n + 1)) / (1.0 - u * u)


def inner_product_geodesic(dec: HyperbolicDecomposition, params: SeriesParams, group: Group,
                           *, conjugate: bool = False) -> SeriesResult:
    """(Theta_C, Theta_C) as the double axis quadrature

        c(B^n,k) (n!/pi^n)^{2/(n+1)} sum_h int int
            (-<<h w^, xi^>>)^{-(n+1)k} (1-u^2)^{(n+1)k/2-1} (1-t^2)^{(n+1)k/2-1} du dt

    over w = (0,..,u), xi = (0,..,t) in the fundamental segment.  ``group``
    is in model coordinates (set ``conjugate`` to map ball coordinates by
    A_gamma^{-1} first).  ``parts`` splits the sum into the powers of gamma0
    ("axis") and the rest ("off_axis").
    """
    els = _elements(group)
    if conjugate:
        els = conjugate_to_model(els, dec)
    n, k, N = params.n, params.k, params.N
    u, wq = axis_nodes(dec, params.nodes_per_panel, params.panels)
    P = u.size
    pts = np.zeros((P, n + 1), dtype=complex)
    pts[:, -2] = u
    pts[:, -1] = 1.0
    mats = np.stack([h.entries for h in els])
    HW = np.einsum("hij,pj->hpi", mats, pts)  # (H, P_w, n+1)
    # <<h w^, xi^>> with xi^ = (0, .., t, 1) real
    q = HW[:, :, None, -2] * u[None, None, :] - HW[:, :, None, -1]
    lm, ar = log_power(-q, -N)
    a = N / 2.0 - 1.0
    node = a * np.log1p(-u * u) + np.log(wq)
    lm = lm + node[None, :, None] + node[None, None, :]
    log_const = log_weight_constant(n, k) + (2.0 / (n + 1)) * _kernel_prefactor_log(n)
    axis = np.array([is_axis_power(h, dec.gamma0) for h in els])
    parts = {"axis": axis, "off_axis": ~axis}
    return _reduce(lm, ar, _shells(els), log_const, params, parts)


def relative_poincare(z: BallPoint, dec: HyperbolicDecomposition, params: SeriesParams,
                      group: Optional[Group] = None) -> SeriesResult:
    """P_C(z) = sum_A (<Az,X><Az,Y>)^{-(n+1)k/2} J(A,z)^k over coset
    representatives (default: the identity)."""
    n, k = params.n, params.k
    if params.N % 2:
        raise DomainError(f"(n+1)k must be even, got (n+1)k = {params.N}")
    els = _elements(group) if group is not None else [GroupElement.identity(n)]
    e = params.N // 2
    mats = np.stack([h.entries for h in els])
    Az = mats @ _lift(z.coords)
    # the Jacobian cancels the lifts' denominators exactly
    lx, ax = log_power(_form_rows(Az, dec.x_hat()), -e)
    ly, ay = log_power(_form_rows(Az, dec.y_hat()), -e)
    return _reduce(lx + ly, ax + ay, _shells(els), 0.0, params)


# ------------------------------------------------------------------- J2, J1


def j2_log_integrand(n: int, k: int):
    """log of (1-x^2)^a (1-u^2)^a (1-xu)^{-(n+1)k}, a = (n+1)k/2 - 1, as f(u, x)."""
    N = (n + 1) * k
    a = N / 2.0 - 1.0

    def f(u: float, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return a * np.log1p(-x * x) + a * math.log1p(-u * u) - N * np.log1p(-x * u)

    return f


def j2_integral(n: int, k: int, lam: float, quad_points: Optional[int] = None,
                spec: Optional[QuadratureSpec] = None) -> float:
    """c(B^n,k)(n!/pi^n)^{2/(n+1)} int_0^{t_max} int_{-1}^{1} ... dx du.

    The inner integral is adaptive in log space with breakpoints at the
    Laplace peak x = u, width (1-u^2)/sqrt((n+1)k-2).
    """
    if not lam * lam > 1.0:
        raise DomainError(f"need lambda^2 > 1, got lambda = {lam}")
    if k < 2:
        raise DomainError("k >= 2 required")
    lam2 = lam * lam
    t_max = (lam2 - 1.0) / (lam2 + 1.0)
    N = (n + 1) * k
    if spec is None:
        over = {"log_space": True}
        if quad_points is not None:
            over["order"] = int(quad_points)
        spec = QuadratureSpec.from_config(**over)
    f = j2_log_integrand(n, k)
    width = 1.0 / math.sqrt(max(N - 2, 1))
    res = integrate_2d_product(
        f, ((0.0, t_max), (-1.0, 1.0)), spec,
        peak_fn=lambda u: (u, (1.0 - u * u) * width),
    )
    log_const = log_weight_constant(n, k) + (2.0 / (n + 1)) * _kernel_prefactor_log(n)
    log.debug("j2 n=%d k=%d lambda=%g: log integral %.15g (%d panels)", n, k, lam,
              res.log_value, res.panels)
    return math.exp(res.log_value + log_const)


def j1_bound_log(n: int, k: int, delta0: float, const_lambda_n: float = 1.0) -> float:
    if not delta0 > 0:
        raise DomainError(f"delta0 must be positive, got {delta0}")
    if not const_lambda_n > 0:
        raise DomainError("const(lambda, n) must be positive")
    exponent = (n + 1) * k / 2.0 - (n + 1)
    return (log_weight_constant(n, k) + math.log(const_lambda_n)
            - exponent * 2.0 * math.log(math.cosh(delta0 / 2.0)))


def j1_bound(n: int, k: int, delta0: float, const_lambda_n: float = 1.0) -> float:
    """c(B^n,k) const / cosh^2(delta0/2)^{(n+1)k/2-(n+1)}."""
    return math.exp(j1_bound_log(n, k, delta0, const_lambda_n))


def j1_decay_fit(n: int, delta0: float, const_lambda_n: float = 1.0,
                 ks: Iterable[int] = range(1000, 10001, 500)) -> Tuple[float, float]:
    """(fitted, analytic) slope of log j1_bound against k."""
    ks = np.array(list(ks), dtype=float)
    logs = np.array([j1_bound_log(n, int(k), delta0, const_lambda_n) for k in ks])
    fitted = float(np.polyfit(ks, logs, 1)[0])
    analytic = -(n + 1) * math.log(math.cosh(delta0 / 2.0))
    return fitted, analytic
