"""Hyperbolic elements: classification, the normalizing matrix A_gamma,
the normal form gamma0 and the model geodesic segment.

Public API:
    ElementKind, HyperbolicDecomposition, AxisSegment, RealityReport
    classify(g), decompose(g, endpoints=None), normal_form_matrix(lam, n, minus_ones=0)
    geodesic_length(lam), axis_sample(dec, m, panels=1), axis_nodes(...)
    one_form_weight(xi), one_form_weight_u(n, u)
    jacobian_reality_check(dec, samples, k=None), conjugate_to_model(elements, dec)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .ball_geometry import (
    BallPoint,
    BoundaryPoint,
    LogComplex,
    bergman_kernel_log,
    jacobian,
    mobius_apply,
    pairing,
)
from .config_manager import get_tolerance
from .errors import DomainError, EigenConvergenceError, NotHyperbolicError
from .indefinite_linalg import (
    EigenPair,
    GroupElement,
    eigen_decompose,
    gram_orthonormalize,
    sigma,
)
from .logger import get_logger
from .quadrature import composite_nodes
from .utils import to_pairs

log = get_logger("geodesic_normal_form")


class ElementKind(str, Enum):
    HYPERBOLIC_REAL_ENDPOINTS = "hyperbolic_real_endpoints"
    HYPERBOLIC = "hyperbolic"
    LOXODROMIC_NONREAL = "loxodromic_nonreal"
    OTHER = "other"


@dataclass(frozen=True)
class AxisSegment:
    """The fundamental segment [0, gamma0(0)] of the model geodesic."""

    n: int
    t_max: float

    def __post_init__(self):
        if not 0.0 < self.t_max < 1.0:
            raise DomainError(f"segment endpoint must lie in (0, 1), got {self.t_max}")

    @classmethod
    def from_lambda(cls, lam: float, n: int) -> "AxisSegment":
        lam2 = lam * lam
        if not lam2 > 1.0:
            raise DomainError(f"need lambda^2 > 1, got lambda = {lam}")
        return cls(n, (lam2 - 1.0) / (lam2 + 1.0))

    def point(self, u: float) -> BallPoint:
        return BallPoint.axis(self.n, u)


@dataclass(frozen=True, eq=False)
class HyperbolicDecomposition:
    lam: float
    X: BoundaryPoint
    Y: BoundaryPoint
    v_list: Tuple[np.ndarray, ...]
    signs: Tuple[int, ...]
    A_gamma: GroupElement
    gamma0: GroupElement
    length: float
    source: GroupElement
    inverted: bool = False

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def segment(self) -> AxisSegment:
        return AxisSegment.from_lambda(self.lam, self.n)

    @property
    def A_inverse(self) -> GroupElement:
        return self.A_gamma.inverse()

    def x_hat(self) -> np.ndarray:
        return np.append(self.X.coords, 1.0)

    def y_hat(self) -> np.ndarray:
        return np.append(self.Y.coords, 1.0)

    def to_json(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "lambda": self.lam,
            "length": self.length,
            "X": self.X.to_json(),
            "Y": self.Y.to_json(),
            "signs": list(self.signs),
            "v_list": [to_pairs(v) for v in self.v_list],
            "A_gamma": self.A_gamma.to_json(),
            "gamma0": self.gamma0.to_json(),
            "inverted": self.inverted,
        }


def normal_form_matrix(lam: float, n: int, minus_ones: int = 0) -> GroupElement:
    """Block matrix diag(I_gamma, [[c, s], [s, c]]) with c = (lam + 1/lam)/2,
    s = (lam - 1/lam)/2 and I_gamma = diag(-1 x minus_ones, 1, ...)."""
    if minus_ones % 2 or not 0 <= minus_ones <= n - 1:
        raise DomainError("minus_ones must be even and at most n-1")
    if lam == 0:
        raise DomainError("lambda must be nonzero")
    c = 0.5 * (lam + 1.0 / lam)
    s = 0.5 * (lam - 1.0 / lam)
    M = np.zeros((n + 1, n + 1), dtype=complex)
    for j in range(n - 1):
        M[j, j] = -1.0 if j < minus_ones else 1.0
    M[n - 1, n - 1] = M[n, n] = c
    M[n - 1, n] = M[n, n - 1] = s
    return GroupElement.from_matrix(M, get_tolerance("membership") * max(1.0, c * c))


def geodesic_length(lam: float) -> float:
    """l(C) = 2 ln|lambda|, cross-checked against cosh(l/2) = (1+lambda^2)/(2|lambda|)."""
    lam = float(lam)
    if not lam * lam > 1.0:
        raise DomainError(f"geodesic length needs lambda^2 > 1, got lambda = {lam}")
    a = abs(lam)
    length = 2.0 * math.log(a)
    # arccosh(x) = log(x + sqrt(x^2 - 1)) written without cancellation
    check = 2.0 * math.log((1.0 + a * a + abs(a * a - 1.0)) / (2.0 * a))
    if abs(check - length) > 1e-12 * max(1.0, length):
        raise EigenConvergenceError("length cross-check failed",
                                    diagnostics={"length": length, "check": check})
    return length


def _split_spectrum(pairs: Sequence[EigenPair]):
    big = [p for p in pairs if abs(p.value) > 1.0 + 1e-8]
    small = [p for p in pairs if abs(p.value) < 1.0 - 1e-8]
    unit = [p for p in pairs if p not in big and p not in small]
    return big, small, unit


def _endpoint(v: np.ndarray) -> np.ndarray:
    if v[-1] == 0:
        raise NotHyperbolicError("fixed-point eigenvector has zero last coordinate")
    return v[:-1] / v[-1]


def classify(g: GroupElement) -> ElementKind:
    pairs = eigen_decompose(g)
    big, small, unit = _split_spectrum(pairs)
    if len(big) != 1 or len(small) != 1:
        return ElementKind.OTHER
    if any(p.value.imag != 0.0 for p in pairs):
        return ElementKind.LOXODROMIC_NONREAL
    tol = get_tolerance("endpoint_imag")
    for p in (big[0], small[0]):
        if np.max(np.abs(_endpoint(p.vector).imag)) > tol:
            return ElementKind.HYPERBOLIC
    return ElementKind.HYPERBOLIC_REAL_ENDPOINTS


def _matches(v: np.ndarray, point: np.ndarray) -> bool:
    return bool(np.max(np.abs(_endpoint(v) - point)) <= 1e-6)


def decompose(
    g: GroupElement,
    endpoints: Optional[Tuple[Union[BoundaryPoint, np.ndarray], Union[BoundaryPoint, np.ndarray]]] = None,
) -> HyperbolicDecomposition:
    """Eigen-data, A_gamma and gamma0 = A_gamma^{-1} g A_gamma.

    Without ``endpoints`` X is the fixed point with eigenvalue |lambda| > 1.
    With an ordered pair (X, Y) whose X carries |alpha| < 1, g is replaced
    by its inverse and ``inverted`` is recorded.
    """
    kind = classify(g)
    if kind is not ElementKind.HYPERBOLIC_REAL_ENDPOINTS:
        raise NotHyperbolicError(f"element is not hyperbolic with real endpoints ({kind.value})",
                                 diagnostics={"kind": kind.value})
    pairs = eigen_decompose(g)
    inverted = False
    if endpoints is not None:
        x0 = endpoints[0].coords if isinstance(endpoints[0], BoundaryPoint) else np.asarray(endpoints[0])
        _, small, _ = _split_spectrum(pairs)
        if _matches(small[0].vector, x0):
            g = g.inverse()
            pairs = eigen_decompose(g)
            inverted = True
    big, small, unit = _split_spectrum(pairs)
    n = g.n
    lam = float(big[0].value.real)

    X = BoundaryPoint(_endpoint(big[0].vector).real.astype(complex))
    Y = BoundaryPoint(_endpoint(small[0].vector).real.astype(complex))
    p = pairing(X, Y)
    if abs(p) <= get_tolerance("xy_pairing"):
        raise DomainError("<X, Y> vanishes", diagnostics={"pairing": abs(p)})

    minus = [u.vector for u in unit if u.value.real < 0]
    plus = [u.vector for u in unit if u.value.real > 0]
    v_list = gram_orthonormalize(minus) + gram_orthonormalize(plus)
    signs = tuple([-1] * len(minus) + [1] * len(plus))

    x_hat = np.append(X.coords, 1.0)
    y_hat = np.append(Y.coords, 1.0)
    cols = list(v_list) + [x_hat / p + y_hat / 2.0, x_hat / p - y_hat / 2.0]
    A = np.column_stack(cols)
    theta = float(np.angle(np.linalg.det(A)))
    if n >= 2:
        A[:, 0] *= np.exp(-1j * theta)
        v_list[0] = A[:, 0].copy()
    else:
        # theta is 0 or pi here, so J(A_gamma, .) stays real on the axis
        A *= np.exp(-0.5j * theta)
    A_gamma = GroupElement.from_matrix(A, get_tolerance("membership") * max(1.0, float(np.max(np.abs(A)))) ** 2)

    s = sigma(n)
    G0 = s @ A.conj().T @ s @ g.entries @ A
    expected = normal_form_matrix(lam, n, len(minus)).entries
    resid = float(np.max(np.abs(G0 - expected)))
    if resid > 1e-8 * max(1.0, abs(lam)):
        raise EigenConvergenceError("normal form reconstruction failed",
                                    diagnostics={"residual": resid, "lambda": lam})
    gamma0 = GroupElement(expected, g.tol + 2 * A_gamma.tol, g.word)
    length = geodesic_length(lam)
    log.info("decomposed element: lambda=%.12g length=%.12g inverted=%s", lam, length, inverted)
    return HyperbolicDecomposition(
        lam=lam, X=X, Y=Y, v_list=tuple(v_list), signs=signs, A_gamma=A_gamma,
        gamma0=gamma0, length=length, source=g, inverted=inverted,
    )


def conjugate_to_model(elements: Sequence[GroupElement], dec: HyperbolicDecomposition) -> List[GroupElement]:
    """h -> A_gamma^{-1} h A_gamma."""
    A, Ai = dec.A_gamma, dec.A_inverse
    return [Ai @ h @ A for h in elements]


def axis_nodes(dec_or_segment, m: int, panels: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre nodes u_i and weights on [0, t_max] (``m`` per panel)."""
    if m < 2:
        raise DomainError("axis quadrature needs at least 2 nodes")
    seg = dec_or_segment.segment if isinstance(dec_or_segment, HyperbolicDecomposition) else dec_or_segment
    return composite_nodes(0.0, seg.t_max, m, panels)


def axis_sample(dec_or_segment, m: int, panels: int = 1) -> List[Tuple[BallPoint, float]]:
    seg = dec_or_segment.segment if isinstance(dec_or_segment, HyperbolicDecomposition) else dec_or_segment
    u, w = axis_nodes(seg, m, panels)
    return [(seg.point(float(ui)), float(wi)) for ui, wi in zip(u, w)]


def one_form_weight_u(n: int, u) -> np.ndarray:
    """(n!/pi^n)^{1/(n+1)} / (1 - u^2), array-friendly."""
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) >= 1.0):
        raise DomainError("axis coordinate must satisfy |u| < 1")
    pref = math.exp((math.lgamma(n + 1) - n * math.log(math.pi)) / (n + 1))
    return pref / (1.0 - u * u)


def one_form_weight(xi: BallPoint) -> float:
    z = xi.coords if isinstance(xi, BallPoint) else np.asarray(xi, dtype=complex)
    if np.any(np.abs(z[:-1]) > 1e-12) or abs(z[-1].imag) > 1e-12:
        raise DomainError("point is not on the model geodesic")
    return float(one_form_weight_u(z.size, z[-1].real))


@dataclass(frozen=True)
class RealityReport:
    model_imag: float
    geodesic_imag: float
    invariance: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def max_imag(self) -> float:
        return max(self.model_imag, self.geodesic_imag)


def _lemma_log(dec: HyperbolicDecomposition, z: np.ndarray, k: int) -> LogComplex:
    """log of f(z) K(z,z)^{-k/2}, f(z) = (<z,X><z,Y>)^{-(n+1)k/2}."""
    n = dec.n
    e = (n + 1) * k // 2
    f = (LogComplex.from_complex(pairing(z, dec.X)) * LogComplex.from_complex(pairing(z, dec.Y))) ** (-e)
    kzz = bergman_kernel_log(z, z)
    return f.scale(-0.5 * k * kzz.log_mag)


def jacobian_reality_check(dec: HyperbolicDecomposition, samples: int = 16,
                           k: Optional[int] = None) -> RealityReport:
    """Relative imaginary parts of J(A_gamma, xi) on the model axis and of
    J(gamma, z) on the image geodesic; with ``k`` also the gamma-invariance
    residual of f K^{-k/2} on the image geodesic."""
    n = dec.n
    us = np.linspace(-0.9, 0.9, max(samples, 2))
    model, geo, inv = 0.0, 0.0, 0.0
    if k is not None and ((n + 1) * k) % 2:
        raise DomainError("(n+1)k must be even for the invariance check")
    for u in us:
        xi = BallPoint.axis(n, float(u))
        ja = jacobian(dec.A_gamma, xi)
        model = max(model, abs(ja.imag) / abs(ja))
        z = mobius_apply(dec.A_gamma, xi)
        jg = jacobian(dec.source, z)
        geo = max(geo, abs(jg.imag) / abs(jg))
        if k is not None:
            q0 = _lemma_log(dec, z.coords, k)
            q1 = _lemma_log(dec, mobius_apply(dec.source, z).coords, k)
            inv = max(inv, abs((q1 / q0).to_complex() - 1.0))
    return RealityReport(model, geo, inv if k is not None else None,
                         {"samples": len(us), "k": k})
