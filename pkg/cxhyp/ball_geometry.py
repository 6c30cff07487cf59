"""The unit ball model of complex hyperbolic space.

Public API:
    BallPoint, BoundaryPoint, LogComplex
    mobius_apply, mobius_denominator, jacobian, jacobian_log
    pairing, distance, distance_many, bergman_kernel, bergman_kernel_log
    weight_constant, log_weight_constant, weight_constant_asymptote
    log_complex_sum, log_abs_arg, reproducing_check
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .config_manager import get_tolerance
from .errors import DimensionError, DomainError, QuadratureError
from .indefinite_linalg import GroupElement
from .logger import get_logger
from .quadrature import gauss_legendre
from .utils import from_pairs, to_pairs

log = get_logger("ball_geometry")

TWO_PI = 2.0 * math.pi


def _vector(z) -> np.ndarray:
    v = np.asarray(z, dtype=complex)
    if v.ndim != 1 or v.size < 1:
        raise DimensionError(f"expected a complex n-vector, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class BallPoint:
    z: np.ndarray

    def __post_init__(self):
        v = _vector(self.z).copy()
        r2 = float(np.vdot(v, v).real)
        if not r2 < 1.0:
            raise DomainError(f"point is not inside the unit ball (|z|^2 = {r2!r})")
        v.setflags(write=False)
        object.__setattr__(self, "z", v)

    @property
    def n(self) -> int:
        return self.z.size

    @property
    def coords(self) -> np.ndarray:
        return self.z

    @classmethod
    def axis(cls, n: int, u: float) -> "BallPoint":
        """(0, ..., 0, u) on the model geodesic."""
        z = np.zeros(n, dtype=complex)
        z[-1] = u
        return cls(z)

    def to_json(self):
        return to_pairs(self.z)


@dataclass(frozen=True, eq=False)
class BoundaryPoint:
    x: np.ndarray

    def __post_init__(self):
        v = _vector(self.x).copy()
        gap = abs(float(np.linalg.norm(v)) - 1.0)
        if gap > get_tolerance("boundary"):
            raise DomainError(f"point is not on the unit sphere (| |x| - 1 | = {gap:.3g})")
        v.setflags(write=False)
        object.__setattr__(self, "x", v)

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def coords(self) -> np.ndarray:
        return self.x

    def to_json(self):
        return to_pairs(self.x)


Point = Union[BallPoint, BoundaryPoint, np.ndarray, Sequence[complex]]


def _coords(p: Point) -> np.ndarray:
    if isinstance(p, (BallPoint, BoundaryPoint)):
        return p.coords
    return _vector(p)


def point_from_json(obj) -> BallPoint:
    return BallPoint(from_pairs(obj))


# ---------------------------------------------------------------- LogComplex


@dataclass(frozen=True)
class LogComplex:
    """exp(log_mag + i*arg); arg kept in [-pi, pi]."""

    log_mag: float
    arg: float = 0.0

    @classmethod
    def from_complex(cls, c: complex) -> "LogComplex":
        c = complex(c)
        if c == 0:
            return cls(-math.inf, 0.0)
        return cls(math.log(abs(c)), math.atan2(c.imag, c.real))

    @classmethod
    def zero(cls) -> "LogComplex":
        return cls(-math.inf, 0.0)

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        return LogComplex(self.log_mag + other.log_mag, math.remainder(self.arg + other.arg, TWO_PI))

    def __truediv__(self, other: "LogComplex") -> "LogComplex":
        return LogComplex(self.log_mag - other.log_mag, math.remainder(self.arg - other.arg, TWO_PI))

    def __pow__(self, m: int) -> "LogComplex":
        if not isinstance(m, (int, np.integer)):
            raise TypeError("LogComplex powers take integer exponents only")
        if self.log_mag == -math.inf:
            if m > 0:
                return self
            raise ZeroDivisionError("zero to a nonpositive power")
        return LogComplex(m * self.log_mag, math.remainder(m * self.arg, TWO_PI))

    def conjugate(self) -> "LogComplex":
        return LogComplex(self.log_mag, -self.arg)

    def scale(self, log_factor: float) -> "LogComplex":
        """Multiply by the positive real exp(log_factor)."""
        return LogComplex(self.log_mag + log_factor, self.arg)

    @property
    def magnitude(self) -> float:
        return math.exp(self.log_mag) if self.log_mag < 709.78 else math.inf

    def to_complex(self) -> complex:
        r = self.magnitude
        if r == 0.0:
            return 0j
        return complex(r * math.cos(self.arg), r * math.sin(self.arg))

    def to_json(self):
        return {"log_mag": self.log_mag if math.isfinite(self.log_mag) else None, "arg": self.arg}


def log_abs_arg(c) -> Tuple[np.ndarray, np.ndarray]:
    """Elementwise (log|c|, arg c) for a complex array."""
    c = np.asarray(c, dtype=complex)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(c)), np.angle(c)


def log_power(c, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Elementwise c**m in (log-magnitude, argument) form, m an integer."""
    lm, arg = log_abs_arg(c)
    return m * lm, np.remainder(m * arg + math.pi, TWO_PI) - math.pi


def log_complex_sum(log_mags, args) -> LogComplex:
    """Overflow-safe sum of exp(log_mags + i*args).

    Terms are rescaled by the largest magnitude, sorted smallest-first and
    accumulated with ``math.fsum``.
    """
    lm = np.asarray(log_mags, dtype=float).ravel()
    ar = np.asarray(args, dtype=float).ravel()
    if lm.size == 0 or not np.any(np.isfinite(lm)):
        return LogComplex.zero()
    top = float(np.max(lm))
    rel = np.exp(lm - top)
    order = np.argsort(rel, kind="stable")
    re = math.fsum((rel * np.cos(ar))[order])
    im = math.fsum((rel * np.sin(ar))[order])
    s = complex(re, im)
    if s == 0:
        return LogComplex.zero()
    return LogComplex(top + math.log(abs(s)), math.atan2(im, re))


def sum_log_complex(values: Iterable[LogComplex]) -> LogComplex:
    vals = list(values)
    return log_complex_sum([v.log_mag for v in vals], [v.arg for v in vals])


# ------------------------------------------------------------------- action


def _matrix(A) -> np.ndarray:
    return A.entries if isinstance(A, GroupElement) else np.asarray(A, dtype=complex)


def mobius_denominator(A, z: Point) -> complex:
    M = _matrix(A)
    c = _coords(z)
    n = c.size
    if M.shape != (n + 1, n + 1):
        raise DimensionError(f"{M.shape} matrix cannot act on a point of C^{n}")
    return complex(M[n, :n] @ c + M[n, n])


def _checked_denominator(A, z: Point) -> complex:
    d = mobius_denominator(A, z)
    if d == 0 or not math.isfinite(abs(d)):
        raise DomainError("vanishing denominator in the fractional-linear action")
    return d


def mobius_apply(A, z: Point):
    """The fractional-linear action; returns the same kind of point."""
    M = _matrix(A)
    c = _coords(z)
    n = c.size
    d = _checked_denominator(M, c)
    w = (M[:n, :n] @ c + M[:n, n]) / d
    if isinstance(z, BoundaryPoint):
        return BoundaryPoint(w)
    if isinstance(z, BallPoint):
        return BallPoint(w)
    return w


def jacobian(A, z: Point) -> complex:
    """J(A, z) = (a_{n+1,1} z_1 + ... + a_{n+1,n+1})^{-(n+1)}."""
    d = _checked_denominator(A, z)
    n = _coords(z).size
    return d ** (-(n + 1))


def jacobian_log(A, z: Point) -> LogComplex:
    d = _checked_denominator(A, z)
    n = _coords(z).size
    return LogComplex.from_complex(d) ** (-(n + 1))


def pairing(z: Point, w: Point) -> complex:
    """<z, w> = z . conj(w) - 1."""
    a, b = _coords(z), _coords(w)
    if a.shape != b.shape:
        raise DimensionError("pairing needs points of the same dimension")
    return complex(np.dot(a, b.conj()) - 1.0)


def _interior(p: Point) -> np.ndarray:
    c = _coords(p)
    if isinstance(p, BallPoint):
        return c
    if not float(np.vdot(c, c).real) < 1.0:
        raise DomainError("point is not inside the unit ball")
    return c


def _tanh_half(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """tanh(rho/2) along the last axis, broadcasting.

    Uses |1 - z.w*|^2 - (1-|z|^2)(1-|w|^2) = |z-w|^2 - sum_{i<j}|z_i d_j - z_j d_i|^2
    with d = w - z, which has no cancellation for nearby points.
    """
    d = w - z
    num = np.sum(np.abs(d) ** 2, axis=-1)
    n = z.shape[-1]
    for i in range(n):
        for j in range(i + 1, n):
            num = num - np.abs(z[..., i] * d[..., j] - z[..., j] * d[..., i]) ** 2
    den = np.abs(1.0 - np.sum(z * w.conj(), axis=-1))
    return np.sqrt(np.maximum(num, 0.0)) / den


def distance(z: Point, w: Point) -> float:
    """Bergman distance rho(z, w), with cosh^2(rho/2) = <z,w><w,z>/(<z,z><w,w>)."""
    a, b = _interior(z), _interior(w)
    if a.shape != b.shape:
        raise DimensionError("distance needs points of the same dimension")
    zz, ww, zw = pairing(a, a).real, pairing(b, b).real, pairing(a, b)
    ratio = abs(zw) ** 2 / (zz * ww)
    if ratio < 1.0 - get_tolerance("distance_ratio"):
        raise DomainError(f"cosh^2 ratio {ratio!r} < 1: inconsistent inputs")
    t = float(_tanh_half(a, b))
    if t >= 1.0:
        raise DomainError("points too close to the boundary for double precision")
    return 2.0 * math.atanh(t)


def distance_many(Z: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Vectorized distance over broadcast arrays of shape (..., n)."""
    t = _tanh_half(np.asarray(Z, dtype=complex), np.asarray(W, dtype=complex))
    return 2.0 * np.arctanh(np.minimum(t, 1.0 - 1e-16))


def _kernel_log_prefactor(n: int) -> float:
    return math.lgamma(n + 1) - n * math.log(math.pi)


def bergman_kernel_log(z: Point, w: Point) -> LogComplex:
    a, b = _interior(z), _interior(w)
    n = a.size
    base = LogComplex.from_complex(-pairing(a, b)) ** (-(n + 1))
    return base.scale(_kernel_log_prefactor(n))


def bergman_kernel(z: Point, w: Point) -> complex:
    """K(z, w) = n!/pi^n * (-<z, w>)^{-(n+1)}."""
    a, b = _interior(z), _interior(w)
    n = a.size
    return math.factorial(n) / math.pi ** n * (-pairing(a, b)) ** (-(n + 1))


def kernel_diagonal_log(n: int, r2) -> np.ndarray:
    """log K(z, z) for |z|^2 = r2 (array-friendly)."""
    return _kernel_log_prefactor(n) - (n + 1) * np.log1p(-np.asarray(r2, dtype=float))


# ---------------------------------------------------------- weight constants


def weight_constant(n: int, k: int) -> int:
    """c(B^n, k) = binom((n+1)(k-1)+n, n), exact."""
    if n < 1 or k < 1:
        raise DomainError(f"weight constant needs n >= 1 and k >= 1, got n={n}, k={k}")
    return math.comb((n + 1) * (k - 1) + n, n)


def log_weight_constant(n: int, k: int) -> float:
    return math.log(weight_constant(n, k))


def weight_constant_asymptote(n: int, k: int) -> float:
    """(n+1)^n k^n / n!."""
    if k < 2:
        raise DomainError("the Stirling asymptote is stated for k >= 2")
    return math.exp(n * math.log((n + 1) * k) - math.lgamma(n + 1))


# ----------------------------------------------------- reproducing property

_DEFAULT_SAMPLES = (0.0, 0.3, -0.25 + 0.2j)


def _as_polynomial(f) -> Callable:
    if callable(f):
        return f
    coeffs = np.asarray(f, dtype=complex)
    if coeffs.ndim != 1 or coeffs.size > 5:
        raise DomainError("reproducing_check takes polynomials of degree <= 4")
    return lambda w: np.polynomial.polynomial.polyval(w, coeffs)


def _reproduced(f: Callable, z: complex, k: int, nodes: int) -> complex:
    r, wr = gauss_legendre(nodes)
    r = 0.5 * (r + 1.0)
    wr = 0.5 * wr
    m = 2 * nodes
    theta = TWO_PI * np.arange(m) / m
    w = r[:, None] * np.exp(1j * theta)[None, :]
    # c/pi * f(w) (1 - z conj w)^{-2k} (1 - r^2)^{2k-2} r, trapezoid in theta
    radial = (1.0 - r ** 2) ** (2 * k - 2) * r * wr
    vals = f(w) * (1.0 - z * w.conj()) ** (-2 * k)
    c = weight_constant(1, k)
    return complex(c / math.pi * (TWO_PI / m) * np.sum(radial[:, None] * vals))


def reproducing_check(
    f,
    k: int,
    quad_nodes: int = 96,
    *,
    n: int = 1,
    points: Optional[Sequence[complex]] = None,
) -> float:
    """max_z |f(z) - c(B^1,k) int f(w) K(z,w)^k K(w,w)^{-k} dV(w)|.

    ``f`` is a callable or a coefficient list (degree <= 4).  The integral
    uses Gauss–Legendre in r and the trapezoid rule in theta; a run with
    half the nodes must agree to 1e-8.
    """
    if n != 1:
        raise DomainError("reproducing_check is implemented for n = 1")
    if k < 2:
        raise DomainError("reproducing_check needs k >= 2")
    fn = _as_polynomial(f)
    pts = _DEFAULT_SAMPLES if points is None else points
    worst = 0.0
    for z in pts:
        z = complex(z)
        full = _reproduced(fn, z, k, quad_nodes)
        half = _reproduced(fn, z, k, max(quad_nodes // 2, 2))
        if abs(full - half) > 1e-8 * max(1.0, abs(full)):
            raise QuadratureError(
                "polar quadrature not converged",
                diagnostics={"z": [z.real, z.imag], "full": abs(full), "delta": abs(full - half)},
                best=full,
            )
        worst = max(worst, abs(complex(fn(np.array(z))) - full))
    return worst
