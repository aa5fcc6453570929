"""Declarative operators between sequence spaces and their finite sections.

Every operator is an infinite matrix ``T[i, j] = <T e_j, e_i>`` described by a
small immutable spec.  ``finite_section(T, n)`` materializes the columns
``1..n`` (and however many rows they reach); sections are nested.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from .sequence_space import SeqVec, as_seqvec, check_exponent

MAX_SECTION = 4096


class SectionTooLarge(ValueError):
    pass


class SpecError(ValueError):
    """Malformed operator spec (bad JSON schema or invalid parameters)."""


# --- partitions -----------------------------------------------------------


class Partition:
    """Partition of the positive integers into classes A_1, A_2, ...

    ``index(k, j)`` is the j-th smallest element a_j^(k) of A_k.
    """

    name = "abstract"

    def index(self, k: int, j: int) -> int:
        raise NotImplementedError

    def indices(self, k: int, count: int) -> np.ndarray:
        return np.array([self.index(k, j) for j in range(1, count + 1)], dtype=np.int64)

    def locate(self, i: int) -> tuple[int, int]:
        """Inverse of :meth:`index`: the (k, j) with a_j^(k) = i."""
        raise NotImplementedError


class DyadicPartition(Partition):
    """a_j^(k) = 2^(k-1) (2j - 1): A_1 odd numbers, A_2 = {2, 6, 10, ...}, ..."""

    name = "dyadic"

    def index(self, k: int, j: int) -> int:
        if k < 1 or j < 1:
            raise ValueError(f"partition indices are 1-based, got k={k}, j={j}")
        return (1 << (k - 1)) * (2 * j - 1)

    def indices(self, k: int, count: int) -> np.ndarray:
        return (1 << (k - 1)) * (2 * np.arange(1, count + 1, dtype=np.int64) - 1)

    def locate(self, i: int) -> tuple[int, int]:
        if i < 1:
            raise ValueError(f"positive integer expected, got {i}")
        k = (i & -i).bit_length()
        return k, (i >> (k - 1)) // 2 + 1

    def __eq__(self, other):
        return isinstance(other, DyadicPartition)

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return "DyadicPartition()"


def dyadic_partition() -> DyadicPartition:
    return DyadicPartition()


PARTITIONS: dict[str, Callable[[], Partition]] = {"dyadic": DyadicPartition}


# --- operator specs -------------------------------------------------------


def _diag_novo1(idx: np.ndarray, params: dict) -> np.ndarray:
    return idx / (idx + 1.0)


def _diag_reciprocal(idx: np.ndarray, params: dict) -> np.ndarray:
    return 1.0 / idx


def _diag_one_plus_reciprocal(idx: np.ndarray, params: dict) -> np.ndarray:
    return 1.0 + 1.0 / idx


def _diag_identity(idx: np.ndarray, params: dict) -> np.ndarray:
    return np.ones(idx.shape)


def _diag_explicit(idx: np.ndarray, params: dict) -> np.ndarray:
    entries = np.asarray(params["entries"], dtype=float)
    out = np.zeros(idx.shape)
    inside = idx <= len(entries)
    out[inside] = entries[idx[inside] - 1]
    return out


DIAGONAL_RULES: dict[str, Callable[[np.ndarray, dict], np.ndarray]] = {
    "novo1": _diag_novo1,
    "reciprocal": _diag_reciprocal,
    "one_plus_reciprocal": _diag_one_plus_reciprocal,
    "identity": _diag_identity,
    "explicit": _diag_explicit,
}


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """Base class; ``p`` is the source exponent, ``q`` the target exponent."""

    p: float = 2.0
    q: float = 2.0

    kind = "abstract"

    def __post_init__(self):
        check_exponent(self.p, name="p")
        check_exponent(self.q, name="q")

    # subclasses implement these two
    def row_count(self, n: int) -> int:
        """Number of rows the column section 1..n can reach."""
        raise NotImplementedError

    def _section(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def with_exponents(self, p: float | None = None, q: float | None = None) -> "OperatorSpec":
        return replace(self, p=self.p if p is None else float(p), q=self.q if q is None else float(q))

    def params(self) -> dict[str, Any]:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": self.params(), "p": self.p, "q": self.q}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, OperatorSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.to_json())


@dataclass(frozen=True, eq=False)
class Diagonal(OperatorSpec):
    """Diagonal operator with entries ``scale * rule(n)``."""

    rule: str = "identity"
    entries: tuple[float, ...] = ()
    scale: float = 1.0

    kind = "Diagonal"

    def __post_init__(self):
        super().__post_init__()
        if self.rule not in DIAGONAL_RULES:
            raise SpecError(f"unknown diagonal rule {self.rule!r}; choose from {sorted(DIAGONAL_RULES)}")
        if self.rule == "explicit":
            object.__setattr__(self, "entries", tuple(float(e) for e in self.entries))
            if not np.all(np.isfinite(self.entries)):
                raise SpecError("diagonal entries must be finite")
        if not np.isfinite(self.scale):
            raise SpecError("diagonal scale must be finite")

    def diagonal(self, n: int) -> np.ndarray:
        """First n diagonal entries."""
        idx = np.arange(1, n + 1, dtype=np.int64)
        return self.scale * DIAGONAL_RULES[self.rule](idx, {"entries": self.entries})

    def row_count(self, n: int) -> int:
        return n

    def _section(self, n: int) -> np.ndarray:
        return np.diag(self.diagonal(n))

    def params(self):
        d: dict[str, Any] = {"rule": self.rule}
        if self.rule == "explicit":
            d["entries"] = list(self.entries)
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d


@dataclass(frozen=True, eq=False)
class DenseMatrix(OperatorSpec):
    """Finite matrix, extended by zeros to an infinite one."""

    rows: tuple[tuple[float, ...], ...] = ((1.0,),)

    kind = "DenseMatrix"

    def __post_init__(self):
        super().__post_init__()
        rows = tuple(tuple(float(v) for v in r) for r in self.rows)
        if not rows or len({len(r) for r in rows}) != 1 or not rows[0]:
            raise SpecError("DenseMatrix rows must form a nonempty rectangular array")
        if not np.all(np.isfinite(rows)):
            raise SpecError("DenseMatrix entries must be finite")
        object.__setattr__(self, "rows", rows)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.rows, dtype=float)

    def row_count(self, n: int) -> int:
        return max(n, len(self.rows))

    def _section(self, n: int) -> np.ndarray:
        A = self.matrix
        out = np.zeros((self.row_count(n), n))
        c = min(n, A.shape[1])
        out[: A.shape[0], :c] = A[:, :c]
        return out

    def params(self):
        return {"rows": [list(r) for r in self.rows]}


@dataclass(frozen=True, eq=False)
class Interleaved(OperatorSpec):
    """Row j of ``base`` moved to row a_j^(k) of the partition; other rows zero."""

    base: OperatorSpec = field(default_factory=Diagonal)
    k: int = 1
    partition: Partition = field(default_factory=DyadicPartition)

    kind = "Interleaved"

    def __post_init__(self):
        super().__post_init__()
        if self.k < 1:
            raise SpecError(f"block index k must be >= 1, got {self.k}")

    def row_count(self, n: int) -> int:
        return int(self.partition.index(self.k, self.base.row_count(n)))

    def _section(self, n: int) -> np.ndarray:
        B = self.base._section(n)
        out = np.zeros((self.row_count(n), n))
        out[self.partition.indices(self.k, B.shape[0]) - 1] = B
        return out

    def params(self):
        return {"base": self.base.to_dict(), "k": self.k, "partition": self.partition.name}


@dataclass(frozen=True, eq=False)
class DisjointSum(OperatorSpec):
    """``sum_k coeff_k * interleave(base, k)`` over distinct block indices."""

    base: OperatorSpec = field(default_factory=Diagonal)
    terms: tuple[tuple[float, int], ...] = ()
    partition: Partition = field(default_factory=DyadicPartition)

    kind = "DisjointSum"

    def __post_init__(self):
        super().__post_init__()
        terms = tuple((float(c), int(k)) for c, k in self.terms)
        if not terms:
            raise SpecError("DisjointSum needs at least one term")
        ks = [k for _, k in terms]
        if len(set(ks)) != len(ks):
            raise SpecError(f"DisjointSum block indices must be distinct, got {ks}")
        if min(ks) < 1:
            raise SpecError("block indices are 1-based")
        object.__setattr__(self, "terms", terms)

    def members(self) -> list[Interleaved]:
        return [Interleaved(base=self.base, k=k, partition=self.partition, p=self.p, q=self.q)
                for _, k in self.terms]

    def row_count(self, n: int) -> int:
        return max(v.row_count(n) for v in self.members())

    def _section(self, n: int) -> np.ndarray:
        out = np.zeros((self.row_count(n), n))
        for (c, _), v in zip(self.terms, self.members()):
            S = v._section(n)
            out[: S.shape[0]] += c * S
        return out

    def params(self):
        return {
            "base": self.base.to_dict(),
            "terms": [{"coeff": c, "k": k} for c, k in self.terms],
            "partition": self.partition.name,
        }


# --- constructors ---------------------------------------------------------


def op_novo1(p: float = 2.0, q: float = 2.0) -> Diagonal:
    """Diagonal operator x -> (n x_n / (n+1)); bounded, norm 1, never attained."""
    return Diagonal(rule="novo1", p=p, q=q)


def op_reciprocal(p: float = 2.0, q: float = 2.0, scale: float = 1.0) -> Diagonal:
    return Diagonal(rule="reciprocal", scale=scale, p=p, q=q)


def op_identity(p: float = 2.0, q: float = 2.0) -> Diagonal:
    return Diagonal(rule="identity", p=p, q=q)


def op_explicit(entries: Sequence[float], p: float = 2.0, q: float = 2.0) -> Diagonal:
    return Diagonal(rule="explicit", entries=tuple(entries), p=p, q=q)


def op_dense(rows, p: float = 2.0, q: float = 2.0) -> DenseMatrix:
    return DenseMatrix(rows=tuple(tuple(r) for r in np.atleast_2d(np.asarray(rows, float))), p=p, q=q)


def interleave(u: OperatorSpec, k: int, P: Partition | None = None) -> Interleaved:
    return Interleaved(base=u, k=k, partition=P or DyadicPartition(), p=u.p, q=u.q)


def disjoint_sum(terms: Sequence[tuple[float, int]], u: OperatorSpec,
                 P: Partition | None = None) -> DisjointSum:
    return DisjointSum(base=u, terms=tuple(terms), partition=P or DyadicPartition(), p=u.p, q=u.q)


# --- materialization ------------------------------------------------------


def finite_section(T: OperatorSpec, n: int) -> np.ndarray:
    """Matrix of <T e_j, e_i> for j <= n and i <= T.row_count(n)."""
    if n < 1:
        raise ValueError(f"section size must be >= 1, got {n}")
    rows = T.row_count(n)
    if n > MAX_SECTION or rows > MAX_SECTION:
        raise SectionTooLarge(f"section {rows}x{n} exceeds the {MAX_SECTION} limit")
    return T._section(n)


def apply(T: OperatorSpec, x) -> SeqVec:
    """T(x) for a finitely supported x; result trimmed of trailing zeros."""
    x = as_seqvec(x)
    n = x.support_length()
    if n == 0:
        return SeqVec()
    if n > MAX_SECTION:
        raise SectionTooLarge(f"support length {n} exceeds the {MAX_SECTION} limit")
    return SeqVec(_apply(T, x.padded(n))).trimmed()


def _apply(T: OperatorSpec, x: np.ndarray) -> np.ndarray:
    n = len(x)
    if isinstance(T, Diagonal):
        return T.diagonal(n) * x
    if isinstance(T, DenseMatrix):
        A = T.matrix
        c = min(n, A.shape[1])
        return A[:, :c] @ x[:c]
    if isinstance(T, Interleaved):
        y = _apply(T.base, x)
        out = np.zeros(T.partition.index(T.k, max(len(y), 1)))
        out[T.partition.indices(T.k, len(y)) - 1] = y
        return out
    if isinstance(T, DisjointSum):
        parts = [c * _apply(v, x) for (c, _), v in zip(T.terms, T.members())]
        out = np.zeros(max(len(v) for v in parts))
        for v in parts:
            out[: len(v)] += v
        return out
    raise TypeError(f"unsupported operator {type(T).__name__}")


# --- JSON schema ----------------------------------------------------------


def spec_from_dict(data: dict[str, Any], p: float | None = None, q: float | None = None) -> OperatorSpec:
    """Build a spec from ``{kind, params, p, q}``; explicit p/q override the file."""
    if not isinstance(data, dict):
        raise SpecError("operator spec must be a JSON object")
    try:
        kind = data["kind"]
        params = data.get("params", {})
        pp = float(p if p is not None else data.get("p", 2.0))
        qq = float(q if q is not None else data.get("q", 2.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed operator spec: {exc}") from exc
    if not isinstance(params, dict):
        raise SpecError("params must be an object")
    try:
        check_exponent(pp, name="p")
        check_exponent(qq, name="q")
    except ValueError as exc:
        raise SpecError(str(exc)) from exc

    def partition(name):
        if name not in PARTITIONS:
            raise SpecError(f"unknown partition {name!r}")
        return PARTITIONS[name]()

    try:
        if kind == "Diagonal":
            return Diagonal(rule=params.get("rule", "identity"), entries=tuple(params.get("entries", ())),
                            scale=float(params.get("scale", 1.0)), p=pp, q=qq)
        if kind == "DenseMatrix":
            return DenseMatrix(rows=tuple(tuple(r) for r in params["rows"]), p=pp, q=qq)
        if kind == "Interleaved":
            base = spec_from_dict(params["base"], pp, qq)
            return Interleaved(base=base, k=int(params["k"]),
                               partition=partition(params.get("partition", "dyadic")), p=pp, q=qq)
        if kind == "DisjointSum":
            base = spec_from_dict(params["base"], pp, qq)
            terms = tuple((float(t["coeff"]), int(t["k"])) for t in params["terms"])
            return DisjointSum(base=base, terms=terms,
                               partition=partition(params.get("partition", "dyadic")), p=pp, q=qq)
    except SpecError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecError(f"malformed {kind} params: {exc!r}") from exc
    raise SpecError(f"unknown operator kind {kind!r}")


def load_spec(path, p: float | None = None, q: float | None = None) -> OperatorSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON ({exc})") from exc
    return spec_from_dict(data, p, q)
