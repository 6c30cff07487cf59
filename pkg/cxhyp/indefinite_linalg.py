"""Linear algebra for the signature-(n,1) Hermitian form on C^{n+1}.

Public API:
    SigmaForm, GroupElement, EigenPair, Membership
    sigma(n), minkowski_form(u, v), validate_su(A, tol)
    random_element(seed, scale, n, *, real=False, compact=False)
    eigen_decompose(A), reconstruct(pairs), gram_orthonormalize(vectors)
    matrix_to_json(A), matrix_from_json(obj)
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .config_manager import get_tolerance
from .errors import (
    DegenerateFormError,
    DimensionError,
    EigenConvergenceError,
    NotInGroupError,
    ParseError,
)
from .logger import get_logger
from .utils import from_pairs, to_pairs

log = get_logger("indefinite_linalg")

MAX_SIZE = 16

ArrayLike = Union[np.ndarray, Sequence]


def sigma(n: int) -> np.ndarray:
    """diag(1, ..., 1, -1) of size n+1."""
    if n < 1:
        raise DimensionError(f"ball dimension must be >= 1, got {n}")
    s = np.ones(n + 1)
    s[-1] = -1.0
    return np.diag(s)


@dataclass(frozen=True)
class SigmaForm:
    n: int

    def __post_init__(self):
        if not 1 <= self.n < MAX_SIZE:
            raise DimensionError(f"ball dimension must lie in [1, {MAX_SIZE - 1}], got {self.n}")

    @property
    def matrix(self) -> np.ndarray:
        return sigma(self.n)

    def __call__(self, u: ArrayLike, v: ArrayLike) -> complex:
        u = np.asarray(u)
        if u.shape != (self.n + 1,):
            raise DimensionError(f"expected vectors of length {self.n + 1}")
        return minkowski_form(u, v)


def minkowski_form(u: ArrayLike, v: ArrayLike) -> complex:
    """u_1 conj(v_1) + ... + u_n conj(v_n) - u_{n+1} conj(v_{n+1})."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.ndim != 1 or u.shape != v.shape or u.size < 2:
        raise DimensionError(f"form needs two vectors of equal length >= 2, got {u.shape}, {v.shape}")
    return complex(np.dot(u[:-1], v[:-1].conj()) - u[-1] * np.conj(v[-1]))


@dataclass(frozen=True)
class Membership:
    ok: bool
    form_residual: float
    det_residual: float

    def __bool__(self) -> bool:
        return self.ok


def _square(A: ArrayLike) -> np.ndarray:
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    if not 2 <= M.shape[0] <= MAX_SIZE:
        raise DimensionError(f"matrix size must lie in [2, {MAX_SIZE}], got {M.shape[0]}")
    return M


def validate_su(A: ArrayLike, tol: Optional[float] = None) -> Membership:
    """SU(n,1) membership: A^H sigma A = sigma and det A = 1, both to ``tol``."""
    M = _square(A)
    tol = get_tolerance("membership") if tol is None else tol
    s = sigma(M.shape[0] - 1)
    form_res = float(np.max(np.abs(M.conj().T @ s @ M - s)))
    det_res = float(abs(np.linalg.det(M) - 1.0))
    return Membership(form_res <= tol and det_res <= tol, form_res, det_res)


_INVERSE_LETTER = str.swapcase


def reduce_word(word: str) -> str:
    """Free reduction: cancel adjacent letter/inverse pairs (a/A, b/B, ...)."""
    out: List[str] = []
    for ch in word:
        if out and out[-1] == _INVERSE_LETTER(ch):
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def invert_word(word: str) -> str:
    return "".join(_INVERSE_LETTER(ch) for ch in reversed(word))


@dataclass(frozen=True, eq=False)
class GroupElement:
    """An element of SU(n,1) with the tolerance it was validated at.

    Products are not re-validated; their tolerance is the sum of the
    factors' tolerances.
    """

    entries: np.ndarray
    tol: float = 1e-10
    word: str = ""

    def __post_init__(self):
        M = _square(self.entries).copy()
        M.setflags(write=False)
        object.__setattr__(self, "entries", M)

    @classmethod
    def from_matrix(cls, A: ArrayLike, tol: Optional[float] = None, word: str = "") -> "GroupElement":
        tol = get_tolerance("membership") if tol is None else tol
        m = validate_su(A, tol)
        if not m:
            raise NotInGroupError(
                "matrix is not in SU(n,1)",
                diagnostics={"form_residual": m.form_residual, "det_residual": m.det_residual,
                             "tol": tol},
            )
        return cls(np.asarray(A, dtype=complex), tol, word)

    @classmethod
    def identity(cls, n: int) -> "GroupElement":
        return cls(np.eye(n + 1, dtype=complex), 0.0, "")

    @property
    def n(self) -> int:
        return self.entries.shape[0] - 1

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        if other.n != self.n:
            raise DimensionError("cannot multiply elements of different dimension")
        return GroupElement(self.entries @ other.entries, self.tol + other.tol,
                            reduce_word(self.word + other.word))

    def inverse(self) -> "GroupElement":
        s = sigma(self.n)
        return GroupElement(s @ self.entries.conj().T @ s, self.tol, invert_word(self.word))

    def power(self, m: int) -> "GroupElement":
        base = self if m >= 0 else self.inverse()
        M = np.linalg.matrix_power(base.entries, abs(m))
        return GroupElement(M, self.tol * max(abs(m), 1), reduce_word(base.word * abs(m)))

    def validate(self, tol: Optional[float] = None) -> Membership:
        return validate_su(self.entries, self.tol if tol is None else tol)

    def to_json(self) -> Dict[str, Any]:
        return matrix_to_json(self.entries)


def matrix_to_json(A: ArrayLike) -> Dict[str, Any]:
    M = _square(A)
    return {"n": M.shape[0] - 1, "entries": to_pairs(M)}


def matrix_from_json(obj: Any) -> np.ndarray:
    if not isinstance(obj, dict) or "entries" not in obj:
        raise ParseError('matrix JSON needs an "entries" field')
    M = from_pairs(obj["entries"])
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ParseError(f"entries must form a square matrix, got shape {M.shape}")
    if "n" in obj and int(obj["n"]) != M.shape[0] - 1:
        raise ParseError(f'"n" = {obj["n"]} does not match a {M.shape[0]}x{M.shape[0]} matrix')
    return M


def random_element(
    seed: int, scale: float, n: int, *, real: bool = False, compact: bool = False
) -> GroupElement:
    """exp(S) for a seeded random S in the Lie algebra su(n,1).

    S = [[B, c], [c^H, d]] with B skew-Hermitian and d imaginary, trace
    removed, rescaled so max |S_ij| = scale.  ``real`` draws real data
    (B antisymmetric, d = 0); ``compact`` sets c = 0, giving an element
    of the maximal compact subgroup.
    """
    if scale < 0:
        raise DimensionError("scale must be nonnegative")
    rng = np.random.default_rng(seed)
    if real:
        B = rng.uniform(-1.0, 1.0, (n, n))
        B = (B - B.T).astype(complex)
        c = rng.uniform(-1.0, 1.0, n).astype(complex)
        d = 0.0j
    else:
        B = rng.uniform(-1.0, 1.0, (n, n)) + 1j * rng.uniform(-1.0, 1.0, (n, n))
        B = 0.5 * (B - B.conj().T)
        c = rng.uniform(-1.0, 1.0, n) + 1j * rng.uniform(-1.0, 1.0, n)
        d = 1j * rng.uniform(-1.0, 1.0)
    if compact:
        c = np.zeros(n, dtype=complex)
    S = np.zeros((n + 1, n + 1), dtype=complex)
    S[:n, :n] = B
    S[:n, n] = c
    S[n, :n] = c.conj()
    S[n, n] = d
    S -= np.trace(S) / (n + 1) * np.eye(n + 1)
    top = float(np.max(np.abs(S)))
    if top == 0.0 or scale == 0.0:
        return GroupElement.identity(n)
    S *= scale / top
    A = scipy.linalg.expm(S)
    return GroupElement.from_matrix(A, get_tolerance("membership"))


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: complex
    vector: np.ndarray
    residual: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex)
        if not np.any(v):
            raise DimensionError("eigenvector must be nonzero")
        object.__setattr__(self, "vector", v)


def _refine(M: np.ndarray, alpha: complex, v: np.ndarray, tol: float, scale: float,
            max_iter: int = 8):
    """Inverse iteration with Rayleigh updates until ||Mv - av|| <= tol * scale."""
    v = v / np.linalg.norm(v)
    I = np.eye(M.shape[0])
    resid = float(np.linalg.norm(M @ v - alpha * v))
    history = [resid]
    it = 0
    while resid > tol * scale and it < max_iter:
        shift = alpha + 1e-13 * scale
        try:
            w = np.linalg.solve(M - shift * I, v)
        except np.linalg.LinAlgError:
            w = np.linalg.lstsq(M - shift * I, v, rcond=None)[0]
        v = w / np.linalg.norm(w)
        alpha = complex(np.vdot(v, M @ v))
        resid = float(np.linalg.norm(M @ v - alpha * v))
        history.append(resid)
        it += 1
    return alpha, v, resid, history


def eigen_decompose(A: Union[GroupElement, ArrayLike], tol: Optional[float] = None) -> List[EigenPair]:
    """Eigenpairs via LAPACK (Hessenberg + shifted QR), refined by inverse
    iteration; nearly-real eigenvalues are snapped to the real axis.

    Pairs are ordered by decreasing modulus, then by argument.
    """
    M = A.entries if isinstance(A, GroupElement) else _square(A)
    tol = get_tolerance("eigen_residual") if tol is None else tol
    snap = get_tolerance("real_snap")
    scale = max(1.0, float(np.linalg.norm(M, 2)))
    try:
        vals, vecs = scipy.linalg.eig(M)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigenConvergenceError(f"eigensolver failed: {e}", diagnostics={"size": M.shape[0]}) from e

    pairs = []
    for i in range(len(vals)):
        alpha, v, resid, history = _refine(M, complex(vals[i]), vecs[:, i], tol, scale)
        if resid > tol * scale:
            raise EigenConvergenceError(
                "inverse iteration did not reach the residual tolerance",
                diagnostics={"eigenvalue": [alpha.real, alpha.imag], "residuals": history,
                             "tol": tol * scale},
            )
        if abs(alpha.imag) <= snap * (1.0 + abs(alpha)):
            alpha = complex(alpha.real, 0.0)
        pairs.append(EigenPair(alpha, v, resid))
        log.debug("eigenpair %d: value=%s residual=%.3g", i, alpha, resid)
    pairs.sort(key=lambda p: (-round(abs(p.value), 12), np.angle(p.value)))
    return pairs


def reconstruct(pairs: Sequence[EigenPair]) -> np.ndarray:
    """V diag(alpha) V^{-1} from a complete set of eigenpairs."""
    V = np.column_stack([p.vector for p in pairs])
    D = np.diag([p.value for p in pairs])
    return V @ D @ np.linalg.inv(V)


def gram_orthonormalize(vectors: Sequence[ArrayLike], tol: Optional[float] = None) -> List[np.ndarray]:
    """Modified Gram–Schmidt for the form; the span must be positive definite."""
    tol = get_tolerance("orthonormality") if tol is None else tol
    out: List[np.ndarray] = []
    for raw in vectors:
        v = np.asarray(raw, dtype=complex)
        w = v.copy()
        for _ in range(2):  # one reorthogonalization pass
            for q in out:
                w = w - minkowski_form(w, q) * q
        pivot = minkowski_form(w, w).real
        if pivot <= tol * max(1.0, float(np.vdot(v, v).real)):
            raise DegenerateFormError(
                "form is not positive definite on the span",
                diagnostics={"pivot": pivot, "index": len(out)},
            )
        out.append(w / np.sqrt(pivot))
    return out
