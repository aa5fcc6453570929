"""Estimate ||T||_{l_p -> l_q} on finite sections.

Three routes:

* :func:`power_norm` -- generalized power method, batched over many starts.
  One step maps x to ``normalize_p(J_{p*}(A^T J_q(A x)))`` where ``J_r`` is
  the duality map; every step is an ascent step for ``||A x||_q``.
* :func:`bruteforce_norm` -- dense enumeration of the unit l_p sphere for at
  most three columns, polished locally.  Used as an independent oracle.
* :func:`ladder_norm` -- runs a solver over nested sections and keeps the trace.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .operators import Diagonal, OperatorSpec, finite_section
from .sequence_space import (
    SeqVec,
    align_sign,
    as_seqvec,
    check_exponent,
    conjugate,
    duality_array,
    leading_index,
    norm,
)

logger = logging.getLogger(__name__)

DEFAULT_LADDER = (2, 4, 8, 16, 32, 64, 128, 256)
# relative gap under which two start values count as tied
TIE_TOL = 1e-12
# coordinates below this fraction of the largest one are ignored for tie-breaks
LEAD_TOL = 1e-8
# more starts than this are raced for a few steps and the best KEEP survive
KEEP = 16
WARMUP = 5
MAX_ALTERNATES = 8
PRUNE_RATIO = 0.999


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-12
    max_iter: int = 2000
    restarts: int = 8
    seed: int = 0
    ladder: tuple[int, ...] = DEFAULT_LADDER

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        ladder = tuple(int(n) for n in self.ladder)
        if not ladder or ladder[0] < 1 or any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError(f"ladder must be strictly increasing positive sizes, got {ladder}")
        object.__setattr__(self, "ladder", ladder)

    def to_dict(self) -> dict:
        return {"tol": self.tol, "max_iter": self.max_iter, "restarts": self.restarts,
                "seed": self.seed, "ladder": list(self.ladder)}


@dataclass
class NormEstimate:
    value: float
    certificate: SeqVec
    method: str
    iterations: int = 0
    converged: bool = True
    section: int = 0
    # ||A x_k||_q of the winning start, one entry per iteration
    history: tuple[float, ...] = ()
    # other starts that tie with the winner (within TIE_TOL)
    alternates: tuple[SeqVec, ...] = ()

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "certificate": self.certificate.trimmed().coords.tolist(),
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
            "section": self.section,
        }


@dataclass
class LadderResult:
    estimate: NormEstimate
    trace: list[NormEstimate] = field(default_factory=list)

    @property
    def values(self) -> list[float]:
        return [e.value for e in self.trace]

    def to_dict(self) -> dict:
        return {"estimate": self.estimate.to_dict(), "trace": [e.to_dict() for e in self.trace]}


def _col_norms(M: np.ndarray, r: float) -> np.ndarray:
    a = np.abs(M)
    if r == 1.0:
        return a.sum(axis=0)
    if r == 2.0:
        return np.sqrt(np.einsum("ij,ij->j", a, a))
    m = a.max(axis=0)
    safe = np.where(m > 0, m, 1.0)
    return m * np.sum((a / safe) ** r, axis=0) ** (1.0 / r)


def _pick(values: np.ndarray, X: np.ndarray, order: Sequence[int], converged=None) -> int:
    """Index of the winning column: best value, ties by convergence, leading index, start order."""
    best = values.max()
    tied = [i for i in order if values[i] >= best - TIE_TOL * max(1.0, best)]
    done = (lambda i: 0) if converged is None else (lambda i: 0 if converged[i] else 1)
    return min(tied, key=lambda i: (done(i), leading_index(X[:, i], LEAD_TOL), order.index(i)))


def _alternates(values, X, winner, cert) -> tuple[SeqVec, ...]:
    best = values[winner]
    out: list[SeqVec] = []
    for i in np.argsort(-values, kind="stable"):
        if i == winner or values[i] < best - TIE_TOL * max(1.0, best):
            continue
        v = align_sign(X[:, i])
        if np.max(np.abs(v.coords - cert.coords)) > 1e-6 and all(
                np.max(np.abs(v.coords - w.coords)) > 1e-6 for w in out):
            out.append(v)
        if len(out) >= MAX_ALTERNATES:
            break
    return tuple(out)


def power_norm(A, p: float, q: float, cfg: SolverConfig | None = None,
               extra_starts: Sequence = ()) -> NormEstimate:
    """Multi-start generalized power method for the l_p -> l_q norm of a matrix.

    Starts are the canonical vectors e_1..e_n, the flat vector, ``cfg.restarts``
    seeded Gaussian vectors and any ``extra_starts`` (zero padded).  With more
    than KEEP columns only the KEEP canonical vectors with the largest images
    are used, and all starts race for WARMUP steps before the best KEEP
    continue.  Once one start has converged, slower starts whose increments
    extrapolate to no more than the leader are retired.  A step that lowers
    the value is rejected and ends that start, so histories never decrease.
    Requires p > 1; the value is a lower bound of the section norm.
    """
    cfg = cfg or SolverConfig()
    p = check_exponent(p, strict=True, name="p")
    q = check_exponent(q, name="q")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    if not A.any():
        return NormEstimate(0.0, SeqVec.unit(1, n), "power", 0, True, n, (0.0,))
    full = A
    A = A[np.any(A != 0.0, axis=1)]
    ps = conjugate(p)

    rng = np.random.default_rng([cfg.seed, n])
    canon = np.arange(n)
    if n > KEEP:
        # only the canonical starts with the largest images enter the race
        canon = np.sort(np.argsort(-_col_norms(A, q), kind="stable")[:KEEP])
    cols = [np.eye(n)[:, canon], np.ones((n, 1)), rng.standard_normal((n, cfg.restarts))]
    for s in extra_starts:
        s = as_seqvec(s)
        if s.support_length() and s.support_length() <= n:
            cols.append(s.padded(n)[:, None])
    X = np.hstack(cols)
    X = X[:, _col_norms(X, p) > 0]
    X /= _col_norms(X, p)
    order = list(range(X.shape[1]))

    def step(Xc: np.ndarray) -> np.ndarray:
        Z = A.T @ duality_array(A @ Xc, q)
        Xn = duality_array(Z, ps)
        nr = _col_norms(Xn, p)
        ok = nr > 0
        Xn[:, ok] /= nr[ok]
        Xn[:, ~ok] = Xc[:, ~ok]  # start in the kernel: stays put
        return Xn

    vals = _col_norms(A @ X, q)
    hist = [vals.copy()]
    it = 0
    if X.shape[1] > KEEP:
        for _ in range(WARMUP):
            Xn = step(X)
            vn = _col_norms(A @ Xn, q)
            up = vn >= vals
            X[:, up], vals = Xn[:, up], np.where(up, vn, vals)
            hist.append(vals.copy())
            it += 1
        keep = sorted(order, key=lambda i: (-vals[i], i))[:KEEP]
        keep.sort()
        X, vals = X[:, keep], vals[keep]
        hist = [h[keep] for h in hist]
        order = list(range(len(keep)))

    streak = np.zeros(X.shape[1], dtype=int)
    active = np.ones(X.shape[1], dtype=bool)
    done = np.zeros(X.shape[1], dtype=bool)
    stalled = np.zeros(X.shape[1], dtype=bool)
    gain = np.full(X.shape[1], np.inf)
    while active.any() and it < cfg.max_iter:
        idx = np.flatnonzero(active)
        Xa = step(X[:, idx])
        va = _col_norms(A @ Xa, q)
        d = va - vals[idx]
        # the step is an ascent step (convexity), so a drop is roundoff: keep the old
        # iterate and stop, without the tie-break credit of a converged start
        down = d < 0
        Xa[:, down] = X[:, idx[down]]
        va = np.where(down, vals[idx], va)
        d = np.where(down, 0.0, d)
        rel = np.abs(d) / np.maximum(va, np.finfo(float).tiny)
        X[:, idx] = Xa
        vals[idx] = va
        streak[idx] = np.where(rel < cfg.tol, streak[idx] + 1, 0)
        done[idx] = streak[idx] >= 3
        stalled[idx] |= down
        active[idx] = ~(done[idx] | stalled[idx])
        if done.any():
            # a slow column whose increments shrink geometrically cannot pass
            # the converged leader: drop it once its extrapolated limit is below
            lead = vals[done].max()
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(gain[idx] > 0, d / gain[idx], np.inf)
            limit = va + d / np.maximum(1.0 - ratio, np.finfo(float).tiny)
            hopeless = (d > 0) & (ratio < PRUNE_RATIO) & (limit <= lead * (1.0 + cfg.tol))
            active[idx[hopeless]] = False
        gain[idx] = d
        hist.append(vals.copy())
        it += 1

    w = _pick(vals, X, order, done)
    cert = align_sign(X[:, w])
    value = norm(full @ cert.coords, q)
    return NormEstimate(
        value=value,
        certificate=cert,
        method="power",
        iterations=it,
        converged=bool(done[w] or stalled[w]),
        section=n,
        history=tuple(float(h[w]) for h in hist),
        alternates=_alternates(vals, X, w, cert),
    )


def _sphere_points(D: np.ndarray, p: float) -> np.ndarray:
    """Scale direction columns onto the unit l_p sphere."""
    return D / _col_norms(D, p)


def _zoom(score, center: np.ndarray, half: float, rounds: int = 24, pts: int = 21) -> np.ndarray:
    """Shrink a local grid around the running best point (vectorized polishing)."""
    d = len(center)
    offs = np.linspace(-1.0, 1.0, pts)
    mesh = np.stack(np.meshgrid(*([offs] * d), indexing="ij"), axis=0).reshape(d, -1)
    for _ in range(rounds):
        P = center[:, None] + half * mesh
        center = P[:, int(np.argmax(score(P)))]
        half *= 0.2
    return center


def bruteforce_norm(A, p: float, q: float, density: int = 720) -> NormEstimate:
    """Grid search over the unit l_p sphere (at most 3 columns) with local polishing.

    Two columns: ``density`` angles on a half circle.  Three columns: a
    ``density/2 x density`` grid over a hemisphere in spherical coordinates.
    The best grid local maxima are polished by repeatedly shrinking a local
    grid around them, and the canonical vectors are always scored (so the p = 1
    vertices come out exact).
    """
    p = check_exponent(p, name="p")
    q = check_exponent(q, name="q")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    if n > 3:
        raise ValueError(f"brute force supports at most 3 columns, got {n}")

    cands: list[np.ndarray] = [np.eye(n)[:, j] for j in range(n)]
    starts: list[np.ndarray] = []
    if n == 2:
        def points(T: np.ndarray) -> np.ndarray:
            return _sphere_points(np.vstack([np.cos(T[0]), np.sin(T[0])]), p)

        t = np.linspace(0.0, math.pi, density, endpoint=False)
        v = _col_norms(A @ points(t[None, :]), q)
        peaks = np.flatnonzero((v >= np.roll(v, 1)) & (v >= np.roll(v, -1)))
        starts = [np.array([t[i]]) for i in peaks[np.argsort(-v[peaks])][:8]]
        half = math.pi / density
    elif n == 3:
        def points(T: np.ndarray) -> np.ndarray:
            a, b = T[0], T[1]
            D = np.vstack([np.sin(a) * np.cos(b), np.sin(a) * np.sin(b), np.cos(a)])
            return _sphere_points(D, p)

        th = np.linspace(0.0, math.pi / 2, density // 2 + 1)
        ph = np.linspace(0.0, 2 * math.pi, density, endpoint=False)
        TH, PH = np.meshgrid(th, ph, indexing="ij")
        v = _col_norms(A @ points(np.vstack([TH.ravel(), PH.ravel()])), q).reshape(TH.shape)
        peaks = np.argwhere(v >= ndimage.maximum_filter(v, size=3, mode="wrap"))
        peaks = peaks[np.argsort(-v[peaks[:, 0], peaks[:, 1]])][:8]
        starts = [np.array([th[i], ph[j]]) for i, j in peaks]
        half = 2 * math.pi / density
    for c in starts:
        best = _zoom(lambda P: _col_norms(A @ points(P), q), c, 2 * half)
        cands.append(points(best[:, None])[:, 0])
    X = np.column_stack(cands)
    vals = _col_norms(A @ X, q)
    w = _pick(vals, X, list(range(len(cands))))
    cert = align_sign(X[:, w])
    return NormEstimate(norm(A @ cert.coords, q), cert, "bruteforce", len(cands), True, n)


def column_norm(A, q: float) -> NormEstimate:
    """Exact l_1 -> l_q norm: the largest column l_q norm (extreme points of the l_1 ball)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    c = _col_norms(A, check_exponent(q))
    j = int(np.argmax(c))  # first maximal column
    return NormEstimate(float(c[j]), SeqVec.unit(j + 1, n), "exact", 0, True, n, (float(c[j]),))


def diagonal_norm(entries, p: float, q: float) -> NormEstimate:
    """Closed-form norm of a diagonal matrix from l_p to l_q.

    p <= q: sup |d_i|, attained at e_i.  p > q: Hoelder gives ||d||_s with
    s = pq/(p-q), attained at x_i proportional to |d_i|^(q/(p-q)).
    """
    d = np.asarray(entries, dtype=float)
    p = check_exponent(p, name="p")
    q = check_exponent(q, name="q")
    n = len(d)
    if n == 0 or not d.any():
        return NormEstimate(0.0, SeqVec.unit(1, max(n, 1)), "diagonal", 0, True, n)
    if p <= q:
        j = int(np.argmax(np.abs(d)))
        return NormEstimate(float(abs(d[j])), SeqVec.unit(j + 1, n), "diagonal", 0, True, n)
    s = p * q / (p - q)
    a = np.abs(d) / np.abs(d).max()
    x = a ** (q / (p - q))
    x /= norm(x, p)
    cert = SeqVec(x)
    return NormEstimate(norm(d, s), cert, "diagonal", 0, True, n)


def section_norm(A, p: float, q: float, cfg: SolverConfig | None = None,
                 extra_starts: Sequence = ()) -> NormEstimate:
    """Dispatch: exact column formula for p = 1, power method otherwise."""
    if check_exponent(p, name="p") == 1.0:
        return column_norm(A, q)
    return power_norm(A, p, q, cfg, extra_starts)


def ladder_norm(T: OperatorSpec, cfg: SolverConfig | None = None) -> LadderResult:
    """Norm estimates on the nested sections ``cfg.ladder`` of T.

    Each section is warm-started from the previous certificate, so values are
    non-decreasing along the ladder.  The overall value is the last one.
    """
    cfg = cfg or SolverConfig()
    trace: list[NormEstimate] = []
    prev: SeqVec | None = None
    for n in cfg.ladder:
        A = finite_section(T, n)
        est = section_norm(A, T.p, T.q, cfg, extra_starts=[prev] if prev is not None else ())
        logger.debug("section %d: %.12g (%d iterations)", n, est.value, est.iterations)
        trace.append(est)
        prev = est.certificate
    best = max(trace, key=lambda e: e.value)
    last = trace[-1]
    overall = NormEstimate(
        value=max(last.value, best.value),
        certificate=last.certificate if last.value >= best.value else best.certificate,
        method="ladder",
        iterations=sum(e.iterations for e in trace),
        converged=all(e.converged for e in trace),
        section=last.section,
    )
    return LadderResult(overall, trace)


def diagonal_ladder_oracle(T: Diagonal, ladder: Sequence[int]) -> list[float]:
    """Closed-form section norms of a diagonal spec, for cross-checking."""
    return [diagonal_norm(T.diagonal(n), T.p, T.q).value for n in ladder]
