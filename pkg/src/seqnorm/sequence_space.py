"""Finitely supported real sequences and the scalar inequalities used around them.

A :class:`SeqVec` stands in for an element of ``l_p``: a finite list of
coordinates (index 1 first) followed by implicit zeros.  All functions here
also accept plain array-likes wherever a ``SeqVec`` is expected.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Sequence

import numpy as np

MAX_EXPONENT = 1e6
IDENTITY_TOL = 1e-12
ITERATIVE_TOL = 1e-6


class SeqVec:
    """Immutable finitely supported real sequence.

    Two vectors that differ only by trailing zeros are equal and hash equally.
    """

    __slots__ = ("_coords",)

    def __init__(self, coords: Iterable[float] = ()):
        arr = np.array(list(coords) if not isinstance(coords, np.ndarray) else coords,
                       dtype=float).ravel()
        if not np.all(np.isfinite(arr)):
            raise ValueError("SeqVec coordinates must be finite")
        arr.setflags(write=False)
        self._coords = arr

    @classmethod
    def unit(cls, j: int, length: int | None = None) -> "SeqVec":
        """Canonical basis vector e_j (1-based)."""
        if j < 1:
            raise ValueError(f"basis index must be >= 1, got {j}")
        n = j if length is None else max(length, j)
        arr = np.zeros(n)
        arr[j - 1] = 1.0
        return cls(arr)

    @classmethod
    def zeros(cls, length: int = 0) -> "SeqVec":
        return cls(np.zeros(length))

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    def support_length(self) -> int:
        """Index of the last nonzero coordinate (0 for the zero vector)."""
        nz = np.flatnonzero(self._coords)
        return int(nz[-1]) + 1 if nz.size else 0

    def trimmed(self) -> "SeqVec":
        return SeqVec(self._coords[: self.support_length()])

    def padded(self, length: int) -> np.ndarray:
        """Coordinates as a fresh array of exactly ``length`` entries."""
        if length < self.support_length():
            raise ValueError(f"cannot truncate nonzero coordinates to length {length}")
        out = np.zeros(length)
        k = min(length, len(self._coords))
        out[:k] = self._coords[:k]
        return out

    def __len__(self) -> int:
        return len(self._coords)

    def __getitem__(self, i):
        return self._coords[i]

    def __array__(self, dtype=None, copy=None):
        return self._coords if dtype is None else self._coords.astype(dtype)

    def __iter__(self):
        return iter(self._coords.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SeqVec):
            return NotImplemented
        a, b = self._coords, other._coords
        n = max(len(a), len(b))
        return bool(np.array_equal(self.padded(n), other.padded(n)))

    def __hash__(self) -> int:
        return hash(tuple(self._coords[: self.support_length()].tolist()))

    def __repr__(self) -> str:
        return f"SeqVec({self._coords.tolist()})"

    def _binary(self, other, op):
        other = as_seqvec(other)
        n = max(len(self), len(other))
        return SeqVec(op(self.padded(n), other.padded(n)))

    def __add__(self, other):
        return self._binary(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __rsub__(self, other):
        return as_seqvec(other) - self

    def __mul__(self, c: float):
        return SeqVec(self._coords * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c: float):
        return SeqVec(self._coords / float(c))

    def __neg__(self):
        return SeqVec(-self._coords)

    def to_json(self) -> str:
        return json.dumps(self._coords[: self.support_length()].tolist())

    @classmethod
    def from_json(cls, text: str) -> "SeqVec":
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValueError("SeqVec JSON must be an array of numbers")
        return cls(data)


def as_seqvec(x) -> SeqVec:
    return x if isinstance(x, SeqVec) else SeqVec(np.asarray(x, dtype=float))


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=float).ravel()


def check_exponent(r: float, *, strict: bool = False, name: str = "r") -> float:
    """Validate an exponent in [1, 1e6]; ``strict`` additionally rejects r = 1."""
    r = float(r)
    if not math.isfinite(r) or r < 1.0 or r > MAX_EXPONENT:
        raise ValueError(f"exponent {name}={r} outside [1, {MAX_EXPONENT:g}]")
    if strict and r == 1.0:
        raise ValueError(f"exponent {name} must be > 1")
    return r


def conjugate(r: float) -> float:
    """Hoelder conjugate r/(r-1); infinite for r = 1."""
    r = check_exponent(r)
    return math.inf if r == 1.0 else r / (r - 1.0)


def norm(x, r: float) -> float:
    r = check_exponent(r)
    a = np.abs(_arr(x))
    if a.size == 0:
        return 0.0
    m = a.max()
    if m == 0.0:
        return 0.0
    if r == 1.0:
        return float(a.sum())
    if r == 2.0:
        b = a / m
        return float(m * np.sqrt(np.dot(b, b)))
    # scale first so large r does not overflow
    return float(m * np.sum((a / m) ** r) ** (1.0 / r))


def norm_pow(x, r: float) -> float:
    """``norm(x, r) ** r`` computed without the root."""
    r = check_exponent(r)
    return float(np.sum(np.abs(_arr(x)) ** r))


def sup_norm(x) -> float:
    a = _arr(x)
    return float(np.abs(a).max()) if a.size else 0.0


def rearrange(x) -> SeqVec:
    """Non-increasing rearrangement of |x| (stable with respect to ties)."""
    a = np.abs(_arr(x))
    order = np.argsort(-a, kind="stable")
    return SeqVec(a[order])


def duality_map(y, r: float) -> SeqVec:
    """Coordinatewise ``sign(y) |y|^(r-1)`` with sign(0) = 0."""
    return SeqVec(duality_array(_arr(y), check_exponent(r)))


def duality_array(y: np.ndarray, r: float) -> np.ndarray:
    """Array version of :func:`duality_map` (any shape, no validation)."""
    if r == 1.0:
        return np.sign(y)
    if r == 2.0:
        return np.array(y, dtype=float, copy=True)
    return np.sign(y) * np.abs(y) ** (r - 1.0)


def align_sign(x) -> SeqVec:
    """Flip x so its largest-magnitude coordinate (lowest index on ties) is positive."""
    a = _arr(x)
    if a.size == 0 or not a.any():
        return SeqVec(a)
    i = int(np.argmax(np.abs(a)))
    return SeqVec(-a if a[i] < 0 else a)


def phi(r: float, X: float) -> float:
    """Return ``| |X|^r - |X-1|^r - 1 | / |X-1|^(r-1)``.

    For |X| > 2 the difference of powers is evaluated through expm1/log1p so the
    value stays accurate when X is huge (X up to ~1e300).
    """
    r = check_exponent(r, strict=True)
    X = float(X)
    if X == 1.0:
        raise ValueError("phi is undefined at X = 1")
    if abs(X) <= 2.0:
        d = abs(X - 1.0)
        return abs(abs(X) ** r - d ** r - 1.0) / d ** (r - 1.0)
    if X > 0:
        # X^r - (X-1)^r over (X-1)^(r-1)
        lead = X * (X / (X - 1.0)) ** (r - 1.0) * -math.expm1(r * math.log1p(-1.0 / X))
        tail = (X - 1.0) ** (1.0 - r)
        return abs(lead - tail)
    y = -X
    # |X| = y, |X-1| = y+1:  (y+1)^r - y^r + 1, all over (y+1)^(r-1)
    lead = y * (y / (y + 1.0)) ** (r - 1.0) * math.expm1(r * math.log1p(1.0 / y))
    tail = (y + 1.0) ** (1.0 - r)
    return abs(lead + tail)


def phi_threshold(r: float, tol: float = 0.01, x_max: float = 1e300) -> float:
    """Smallest X0 (found by bisection) with |phi_r(X) - r| < tol for all |X| >= X0.

    The tail behaves like ``r(r-1)/(2X) - |X|^(1-r)``, so X0 explodes as r -> 1;
    an ``OverflowError`` is raised when no X0 below ``x_max`` exists.
    """
    r = check_exponent(r, strict=True)

    def bad(x: float) -> bool:
        return abs(phi(r, x) - r) >= tol or abs(phi(r, -x) - r) >= tol

    def tail_ok(x0: float) -> bool:
        grid = np.geomspace(x0, min(x_max, x0 * 1e12), 400)
        return not any(bad(float(x)) for x in grid)

    hi = 4.0
    while not tail_ok(hi):
        hi *= 16.0
        if hi > x_max:
            raise OverflowError(f"no threshold below {x_max:g} for r={r}")
    lo = 2.0
    if not bad(lo):
        return lo
    # invariant: bad(lo), tail from hi is clean
    for _ in range(200):
        mid = math.sqrt(lo) * math.sqrt(hi)  # lo * hi can overflow
        if bad(mid):
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-12:
            break
    return hi


def splitting_bound_constants(r: float, eps: float, grid_points: int = 10_000) -> tuple[float, float]:
    """Constants (C, delta) with ``| |X|^r - |X-1|^r - 1 | <= C |X-1|^(r-1) + delta``.

    C is a grid supremum of phi over |X-1| >= eps combined with the tail bound
    r(1 + eps); delta = eps^r + max((1+eps)^r - 1, 1 - (1-eps)^r).
    """
    r = check_exponent(r, strict=True)
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    delta_tilde = max((1.0 + eps) ** r - 1.0, 1.0 - (1.0 - eps) ** r)
    delta = eps ** r + delta_tilde
    if r == 2.0:
        return 2.0, delta
    log_r = math.log(10.0 * r / eps) / (r - 1.0)
    R = max(10.0, math.exp(min(log_r, math.log(1e250))) + 2.0)
    t = np.union1d(np.linspace(eps, R, grid_points), np.geomspace(eps, R, grid_points))
    best = r * (1.0 + eps)
    for sign in (1.0, -1.0):
        vals = _phi_array(r, 1.0 + sign * t)
        best = max(best, float(vals.max()))
    # grid sup can miss a peak between nodes
    return best * (1.0 + 1e-3), delta


def _phi_array(r: float, X: np.ndarray) -> np.ndarray:
    """Vectorized :func:`phi` (same branches), X must avoid 1."""
    X = np.asarray(X, dtype=float)
    out = np.empty_like(X)
    mid = np.abs(X) <= 2.0
    d = np.abs(X[mid] - 1.0)
    out[mid] = np.abs(np.abs(X[mid]) ** r - d ** r - 1.0) / d ** (r - 1.0)
    pos = X > 2.0
    x = X[pos]
    out[pos] = np.abs(x * (x / (x - 1.0)) ** (r - 1.0) * -np.expm1(r * np.log1p(-1.0 / x))
                      - (x - 1.0) ** (1.0 - r))
    neg = X < -2.0
    y = -X[neg]
    out[neg] = np.abs(y * (y / (y + 1.0)) ** (r - 1.0) * np.expm1(r * np.log1p(1.0 / y))
                      + (y + 1.0) ** (1.0 - r))
    return out


def splitting_lhs(r: float, X) -> np.ndarray:
    """Left side ``| |X|^r - |X-1|^r - 1 |`` evaluated elementwise."""
    X = np.asarray(X, dtype=float)
    return np.abs(np.abs(X) ** r - np.abs(X - 1.0) ** r - 1.0)


def concavity_check(alpha: float, beta: float, theta: float) -> bool:
    """Truth of ``(alpha + beta)^theta <= alpha^theta + beta^theta``."""
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")
    lhs = (alpha + beta) ** theta
    rhs = alpha ** theta + beta ** theta
    return lhs <= rhs * (1.0 + IDENTITY_TOL)


def interpolation_bound(x, p: float, eps: float) -> tuple[float, float]:
    """Both sides of ``||x||_{p+eps} <= ||x||_inf^(eps/(p+eps)) ||x||_p^(p/(p+eps))``."""
    p = check_exponent(p)
    if eps <= 0:
        raise ValueError("eps must be positive")
    s = p + eps
    lhs = norm(x, s)
    rhs = sup_norm(x) ** (eps / s) * norm(x, p) ** (p / s)
    return lhs, rhs


def normalize(x, r: float) -> SeqVec:
    n = norm(x, r)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return SeqVec(_arr(x) / n)


def distance(x, y, r: float) -> float:
    x, y = as_seqvec(x), as_seqvec(y)
    n = max(len(x), len(y))
    return norm(x.padded(n) - y.padded(n), r)


def leading_index(x, rel_tol: float = 1e-12) -> int:
    """1-based index of the first coordinate that is non-negligible (0 if none)."""
    a = np.abs(_arr(x))
    if a.size == 0 or a.max() == 0.0:
        return 0
    return int(np.flatnonzero(a > rel_tol * a.max())[0]) + 1


def seqvecs_to_matrix(vectors: Sequence, length: int | None = None) -> np.ndarray:
    """Stack vectors as columns, zero padded to a common length."""
    vs = [as_seqvec(v) for v in vectors]
    n = length if length is not None else max((len(v) for v in vs), default=0)
    return np.column_stack([v.padded(n) for v in vs]) if vs else np.zeros((n, 0))
