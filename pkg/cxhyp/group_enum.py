"""Finite pieces of discrete groups: cyclic powers, word balls, the regular
octagon surface group, and the off-axis displacement delta0.

Public API:
    CyclicPower, CyclicRange, GroupBall, DisplacementResult
    cyclic_powers(gamma0, m_min, m_max), cyclic_elements(gamma0, m_min, m_max)
    word_ball(generators, L, *, max_elements=None, parallel=False)
    octagon_group(), octagon_relation(generators=None)
    is_axis_power(h, gamma0), min_displacement_off_axis(elements, dec, exclude=None)
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .ball_geometry import distance_many
from .config_manager import get_group_limits, get_tolerance
from .errors import DomainError, EnumerationLimitError, PreconditionError
from .geodesic_normal_form import AxisSegment, HyperbolicDecomposition, conjugate_to_model
from .indefinite_linalg import GroupElement, invert_word, validate_su
from .logger import get_logger
from .utils import ordered_map

log = get_logger("group_enum")

EIGENBASIS_LIMIT = 1e12
_LOG_DOUBLE_MAX = math.log(np.finfo(float).max)


# ------------------------------------------------------------- cyclic group


def _normal_form_data(gamma0: GroupElement) -> Tuple[float, np.ndarray]:
    """(lambda, signs) of a matrix in the block normal form, else error."""
    M = gamma0.entries
    n = gamma0.n
    c, s = M[n, n], M[n - 1, n]
    expected = np.zeros_like(M)
    signs = np.real(np.diag(M)[: n - 1])
    for j in range(n - 1):
        expected[j, j] = signs[j]
    expected[n - 1, n - 1] = expected[n, n] = c
    expected[n - 1, n] = expected[n, n - 1] = s
    scale = max(1.0, abs(c))
    if (np.max(np.abs(M - expected)) > 1e-8 * scale
            or np.any(np.abs(np.abs(signs) - 1.0) > 1e-8)
            or abs(c.imag) > 1e-8 * scale or abs(s.imag) > 1e-8 * scale):
        raise PreconditionError("gamma0 is not in block normal form")
    return float((c + s).real), np.sign(signs)


def _closed_form_power(lam: float, signs: np.ndarray, m: int) -> np.ndarray:
    n = signs.size + 1
    lm = lam ** m
    c, s = 0.5 * (lm + 1.0 / lm), 0.5 * (lm - 1.0 / lm)
    M = np.zeros((n + 1, n + 1), dtype=complex)
    for j in range(n - 1):
        M[j, j] = signs[j] ** m
    M[n - 1, n - 1] = M[n, n] = c
    M[n - 1, n] = M[n, n - 1] = s
    return M


@dataclass(frozen=True, eq=False)
class CyclicPower:
    m: int
    element: GroupElement
    eigenbasis: bool = False


@dataclass(frozen=True, eq=False)
class CyclicRange:
    gamma0: GroupElement
    m_min: int
    m_max: int

    def powers(self) -> List[CyclicPower]:
        return cyclic_powers(self.gamma0, self.m_min, self.m_max)

    def elements(self) -> List[GroupElement]:
        return [p.element for p in self.powers()]


def _power_word(m: int) -> str:
    return "a" * m if m >= 0 else "A" * (-m)


def cyclic_powers(gamma0: GroupElement, m_min: int, m_max: int) -> List[CyclicPower]:
    """gamma0^m, m_min <= m <= m_max.

    Powers come from repeated squaring and are validated at 1e-8; when that
    fails or |lambda|^|m| exceeds 1e12 the closed block form is used and the
    power is flagged ``eigenbasis``.
    """
    if m_min > m_max:
        raise DomainError(f"empty power range [{m_min}, {m_max}]")
    lam, signs = _normal_form_data(gamma0)
    n = gamma0.n
    out = []
    for m in range(m_min, m_max + 1):
        growth = abs(m) * math.log(abs(lam))
        if growth > 700.0:
            raise DomainError(f"|lambda|^{abs(m)} overflows double precision")
        word = _power_word(m)
        if m == 0:
            out.append(CyclicPower(0, GroupElement.identity(n)))
            continue
        if growth <= math.log(EIGENBASIS_LIMIT):
            base = gamma0.entries if m > 0 else gamma0.inverse().entries
            M = np.linalg.matrix_power(base, abs(m))
            if validate_su(M, 1e-8):
                out.append(CyclicPower(m, GroupElement(M, 1e-8, word)))
                continue
        M = _closed_form_power(lam, signs, m)
        # membership residuals scale with the squared entry size
        log_tol = math.log(1e-8) + 2.0 * growth
        tol = math.exp(log_tol) if log_tol < _LOG_DOUBLE_MAX else math.inf
        out.append(CyclicPower(m, GroupElement(M, tol, word), eigenbasis=True))
    return out


def cyclic_elements(gamma0: GroupElement, m_min: int, m_max: int) -> List[GroupElement]:
    return [p.element for p in cyclic_powers(gamma0, m_min, m_max)]


def is_axis_power(h: GroupElement, gamma0: GroupElement, tol: float = 1e-8) -> bool:
    """Whether h equals some gamma0^m (modulo the centre) within ``tol``."""
    lam, _ = _normal_form_data(gamma0)
    top = float(np.max(np.abs(h.entries)))
    m_max = int(math.ceil(math.log(2.0 * max(top, 1.0)) / math.log(abs(lam)))) + 1
    for p in cyclic_powers(gamma0, -m_max, m_max):
        if _same_mod_centre(h.entries, p.element.entries, tol * max(1.0, top)):
            return True
    return False


# -------------------------------------------------------------- word balls


def _centre_phases(n: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n + 1) / (n + 1))


def _same_mod_centre(A: np.ndarray, B: np.ndarray, tol: float) -> bool:
    n = A.shape[0] - 1
    return any(np.max(np.abs(A - w * B)) <= tol for w in _centre_phases(n))


def _canonical(M: np.ndarray) -> np.ndarray:
    """Rotate by an (n+1)-th root of unity so the leading large entry has
    argument in [-pi/(n+1), pi/(n+1))."""
    n = M.shape[0] - 1
    flat = M.ravel()
    mags = np.abs(flat)
    lead = flat[int(np.argmax(mags > 0.5 * mags.max()))]
    j = int(np.floor(np.angle(lead) * (n + 1) / (2 * np.pi) + 0.5))
    return M * np.exp(-2j * np.pi * j / (n + 1))


class _DedupIndex:
    """Quantized hash buckets confirmed by a max-norm comparison.

    Each matrix is stored under one key. Lookups also try the
    neighbouring cell of every coordinate lying within ``tol`` of a
    rounding boundary, so copies that drifted across a boundary still meet.
    """

    max_straddle = 10

    def __init__(self, grid: float, tol: float):
        self.grid = grid
        self.tol = tol
        self.buckets: Dict[bytes, List[int]] = {}
        self.items: List[np.ndarray] = []

    def _scaled(self, C: np.ndarray) -> np.ndarray:
        return np.concatenate([C.real.ravel(), C.imag.ravel()]) / self.grid

    def _home_key(self, M: np.ndarray) -> bytes:
        return np.round(self._scaled(_canonical(M))).astype(np.int64).tobytes()

    def _lookup_keys(self, M: np.ndarray) -> Iterable[bytes]:
        n = M.shape[0] - 1
        C = _canonical(M)
        margin = self.tol / self.grid
        for w in _centre_phases(n):
            s = self._scaled(C * w)
            q = np.round(s).astype(np.int64)
            frac = s - q
            near = np.flatnonzero(np.abs(np.abs(frac) - 0.5) <= margin)
            if len(near) > self.max_straddle:
                near = near[np.argsort(np.abs(np.abs(frac[near]) - 0.5))][: self.max_straddle]
            steps = np.where(frac[near] >= 0, 1, -1)
            for flips in itertools.product((0, 1), repeat=len(near)):
                key = q.copy()
                key[near] += steps * np.array(flips, dtype=np.int64)
                yield key.tobytes()

    def find(self, M: np.ndarray) -> Optional[int]:
        for key in self._lookup_keys(M):
            for idx in self.buckets.get(key, ()):
                if _same_mod_centre(M, self.items[idx], self.tol):
                    return idx
        return None

    def add(self, M: np.ndarray) -> bool:
        if self.find(M) is not None:
            return False
        self.items.append(M)
        self.buckets.setdefault(self._home_key(M), []).append(len(self.items) - 1)
        return True


@dataclass(eq=False)
class GroupBall:
    generators: List[GroupElement]
    max_word_length: int
    elements: List[GroupElement] = field(default_factory=list)
    lengths: List[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.elements)

    def words(self) -> List[str]:
        return [h.word for h in self.elements]

    def shell(self, length: int) -> List[GroupElement]:
        return [h for h, l in zip(self.elements, self.lengths) if l == length]

    def contains(self, h: GroupElement, tol: float = 1e-8) -> bool:
        return any(_same_mod_centre(h.entries, g.entries, tol) for g in self.elements)

    def to_json(self) -> Dict[str, Any]:
        return {
            "max_word_length": self.max_word_length,
            "size": len(self.elements),
            "generators": [g.to_json() for g in self.generators],
            "elements": [
                {"word": h.word, "length": l, **h.to_json()}
                for h, l in zip(self.elements, self.lengths)
            ],
        }


def _letters(generators: Sequence[GroupElement]) -> List[GroupElement]:
    if len(generators) > 26:
        raise DomainError("at most 26 generators are supported")
    out = []
    for i, g in enumerate(generators):
        letter = chr(ord("a") + i)
        out.append(GroupElement(g.entries, g.tol, letter))
        out.append(GroupElement(g.inverse().entries, g.tol, invert_word(letter)))
    return out


def word_ball(
    generators: Sequence[GroupElement],
    L: int,
    *,
    max_elements: Optional[int] = None,
    parallel: bool = False,
) -> GroupBall:
    """All distinct products of at most L generators and inverses.

    Dedup is modulo the centre of SU(n,1): scalar roots of unity act
    trivially on the ball.  Expansion proceeds shell by shell; the
    candidate products of a shell may be formed on a thread pool but are
    inserted in a fixed order, so the result does not depend on scheduling.
    """
    limits = get_group_limits()
    if not 0 <= L <= int(limits["max_word_length"]):
        raise DomainError(f"word length must lie in [0, {limits['max_word_length']}], got {L}")
    if not generators:
        raise DomainError("need at least one generator")
    n = generators[0].n
    cap = int(max_elements or limits["max_elements"])
    index = _DedupIndex(float(limits["dedup_grid"]), float(limits["dedup_tol"]))
    letters = _letters(generators)

    identity = GroupElement.identity(n)
    ball = GroupBall(list(generators), L, [identity], [0])
    index.add(identity.entries)
    frontier = [identity]
    for length in range(1, L + 1):

        def expand(h: GroupElement) -> List[GroupElement]:
            last = h.word[-1:] if h.word else ""
            return [h @ s for s in letters if not (last and s.word == last.swapcase())]

        batches = ordered_map(expand, frontier, None if parallel else 1)
        nxt = []
        for cand in (c for batch in batches for c in batch):
            if index.add(cand.entries):
                ball.elements.append(cand)
                ball.lengths.append(length)
                nxt.append(cand)
                if len(ball.elements) > cap:
                    raise EnumerationLimitError(
                        "word ball exceeds the element cap",
                        diagnostics={"elements": len(ball.elements), "length": length, "cap": cap},
                    )
        log.debug("word ball shell %d: %d new elements", length, len(nxt))
        frontier = nxt
    log.info("word ball: %d generators, L=%d, %d elements", len(generators), L, len(ball))
    return ball


# ---------------------------------------------------------- octagon group


def octagon_group() -> List[GroupElement]:
    """Side pairings g_0..g_7 of the regular hyperbolic octagon in SU(1,1).

    g_k = R(k pi/4) T R(-k pi/4) with T = [[1+sqrt2, sqrt(2+2 sqrt2)], [same, 1+sqrt2]]
    and R(t) = diag(e^{it/2}, e^{-it/2}); g_{k+4} = g_k^{-1}.
    """
    a = 1.0 + math.sqrt(2.0)
    b = math.sqrt(2.0 + 2.0 * math.sqrt(2.0))
    gens = []
    for k in range(8):
        ph = np.exp(1j * k * np.pi / 4)
        M = np.array([[a, b * ph], [b * np.conj(ph), a]], dtype=complex)
        gens.append(GroupElement.from_matrix(M, 1e-9, chr(ord("a") + k)))
    return gens


def octagon_relation(generators: Optional[Sequence[GroupElement]] = None) -> np.ndarray:
    """g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3, which is the identity."""
    g = list(generators or octagon_group())
    word = [g[0], g[1].inverse(), g[2], g[3].inverse(),
            g[0].inverse(), g[1], g[2].inverse(), g[3]]
    M = np.eye(2, dtype=complex)
    for h in word:
        M = M @ h.entries
    return M


def relation_residual(M: np.ndarray) -> float:
    """Distance to the identity modulo the centre."""
    n = M.shape[0] - 1
    eye = np.eye(n + 1)
    return float(min(np.max(np.abs(M - w * eye)) for w in _centre_phases(n)))


# ------------------------------------------------------------ displacement


@dataclass(frozen=True)
class DisplacementResult:
    delta0: float
    element_index: int
    w: float
    xi: float
    candidates: int

    def __float__(self) -> float:
        return self.delta0


def _axis_points(n: int, u: np.ndarray) -> np.ndarray:
    Z = np.zeros(u.shape + (n,), dtype=complex)
    Z[..., -1] = u
    return Z


def _act(M: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Fractional-linear action of a stack of matrices (H,n+1,n+1) on points (P,n)."""
    n = Z.shape[-1]
    lifted = np.concatenate([Z, np.ones(Z.shape[:-1] + (1,))], axis=-1)
    img = np.einsum("hij,pj->hpi", M, lifted)
    return img[..., :n] / img[..., n:]


def displacement_search(
    elements: Sequence[GroupElement],
    segment: AxisSegment,
    *,
    grid: Optional[int] = None,
    refine: Optional[int] = None,
) -> DisplacementResult:
    """min over h, w, xi in the segment of rho(h w, xi), model coordinates.

    A grid scan over segment x segment for each element, then bounded
    L-BFGS-B refinement from the best grid cells.
    """
    if not elements:
        raise PreconditionError("no group elements left after excluding the axis subgroup")
    limits = get_group_limits()
    grid = int(grid or limits["delta_grid"])
    refine = int(refine or limits["delta_refine"])
    n = segment.n
    u = np.linspace(0.0, segment.t_max, grid)
    P = _axis_points(n, u)
    mats = np.stack([h.entries for h in elements])

    best = np.empty(len(elements))
    cells = np.empty((len(elements), 2), dtype=int)
    for start in range(0, len(elements), 256):
        block = mats[start:start + 256]
        images = _act(block, P)  # (H, grid, n)
        d = distance_many(images[:, :, None, :], P[None, None, :, :])  # (H, w, xi)
        flat = d.reshape(d.shape[0], -1)
        idx = np.argmin(flat, axis=1)
        best[start:start + len(block)] = flat[np.arange(len(block)), idx]
        cells[start:start + len(block)] = np.column_stack(np.unravel_index(idx, (grid, grid)))

    order = np.argsort(best, kind="stable")[:refine]
    result = DisplacementResult(float(best[order[0]]), int(order[0]),
                                float(u[cells[order[0], 0]]), float(u[cells[order[0], 1]]),
                                len(elements))
    for i in order:
        M = mats[i][None]

        def objective(x: np.ndarray) -> float:
            img = _act(M, _axis_points(n, np.array([x[0]])))[0, 0]
            return float(distance_many(img, _axis_points(n, np.array(x[1]))))

        x0 = np.array([u[cells[i, 0]], u[cells[i, 1]]])
        opt = minimize(objective, x0, method="L-BFGS-B",
                       bounds=[(0.0, segment.t_max), (0.0, segment.t_max)])
        if opt.fun < result.delta0:
            result = DisplacementResult(float(opt.fun), int(i), float(opt.x[0]), float(opt.x[1]),
                                        len(elements))
    if not result.delta0 > 1e-12:
        raise PreconditionError(
            "an element moves an axis point onto the segment; delta0 is not positive",
            diagnostics={"element": elements[result.element_index].word},
        )
    log.info("delta0 = %.12g over %d elements", result.delta0, len(elements))
    return result


def min_displacement_off_axis(
    elements: Sequence[GroupElement],
    dec: HyperbolicDecomposition,
    exclude: Optional[Iterable[GroupElement]] = None,
    *,
    model: bool = False,
    grid: Optional[int] = None,
) -> float:
    """delta0 for the fundamental axis segment of ``dec``.

    ``elements`` are in ball coordinates unless ``model`` is set, in which
    case they are already conjugated by A_gamma^{-1}.  Elements matching
    ``exclude`` (default: the powers of gamma0) are dropped first.
    """
    hs = list(elements) if model else conjugate_to_model(elements, dec)
    tol = 1e-8
    if exclude is None:
        kept = [h for h in hs if not is_axis_power(h, dec.gamma0, tol)]
    else:
        ex = list(exclude) if model else conjugate_to_model(list(exclude), dec)
        kept = [h for h in hs
                if not any(_same_mod_centre(h.entries, e.entries,
                                            tol * max(1.0, float(np.max(np.abs(e.entries)))))
                           for e in ex)]
    log.debug("displacement: %d of %d elements off the axis subgroup", len(kept), len(hs))
    return displacement_search(kept, dec.segment, grid=grid).delta0
