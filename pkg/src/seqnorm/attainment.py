"""Norm attainment diagnostics built on maximizing sequences.

A maximizing sequence is read off the section ladder: one certificate per
section.  Weak convergence is replaced by a finite proxy (smallness of the
first ``window`` coordinates of the late certificates), and the weak-limit
candidate u is the part of the late certificates that stays put.  The verdict
follows the attainment dichotomy for 1 < p: a nonzero u with
``||T(u)|| >= ||T|| ||u||`` yields an attaining vector ``u / ||u||_p``; a
weakly-null-like trace that no early canonical vector can match means the
norm escapes to infinity.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .norm_solver import LadderResult, SolverConfig, ladder_norm
from .operators import OperatorSpec, apply, finite_section
from .sequence_space import (
    SeqVec,
    align_sign,
    as_seqvec,
    check_exponent,
    distance,
    norm,
    norm_pow,
    rearrange,
    splitting_bound_constants,
)

ATTAINS = "attains"
DOES_NOT_ATTAIN = "does_not_attain"
INCONCLUSIVE = "inconclusive"

DEFAULT_WINDOW = 32
DEFAULT_TAU = 1e-3
DEFAULT_ATTAIN_TOL = 1e-6
TAIL = 3

P1_MESSAGE = (
    "p = 1 is refused: the attainment criterion needs 1 < p. For p = 1 the "
    "operator x -> (n x_n / (n+1)) has the canonical basis as a maximizing "
    "sequence that is not weakly null in l_1, yet it does not attain its norm "
    "(run `seqnorm demo-p1`)."
)


class PEqualsOneError(ValueError):
    pass


@dataclass(frozen=True)
class TraceStep:
    section: int
    certificate: SeqVec
    value: float
    alternates: tuple[SeqVec, ...] = ()


@dataclass
class MaximizingTrace:
    steps: list[TraceStep]
    weak_limit_candidate: SeqVec
    p: float
    q: float
    operator: OperatorSpec | None = None

    @property
    def certificates(self) -> list[SeqVec]:
        return [s.certificate for s in self.steps]

    @property
    def values(self) -> list[float]:
        return [s.value for s in self.steps]

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "steps": [{"section": s.section, "value": s.value,
                       "certificate": s.certificate.trimmed().coords.tolist()} for s in self.steps],
            "weak_limit_candidate": self.weak_limit_candidate.trimmed().coords.tolist(),
        }

    def to_csv(self, top_k: int = 3) -> str:
        """One row per step: section, value, then the top-k (index, value) pairs."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["section", "value"]
        for i in range(1, top_k + 1):
            header += [f"top{i}_index", f"top{i}_value"]
        w.writerow(header)
        for s in self.steps:
            c = s.certificate.coords
            top = np.argsort(-np.abs(c), kind="stable")[:top_k]
            row: list = [s.section, repr(s.value)]
            for j in top:
                row += [int(j) + 1, repr(float(c[j]))]
            row += [""] * (2 + 2 * top_k - len(row))
            w.writerow(row)
        return buf.getvalue()


@dataclass
class AttainmentReport:
    verdict: str
    norm_value: float
    attainer: SeqVec | None
    weak_null_score: float
    splitting_residuals: list[float] = field(default_factory=list)
    dichotomy_margin: float = 0.0
    splitting_residuals_p: list[float] = field(default_factory=list)
    canonical_max: float = 0.0
    trace: MaximizingTrace | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "norm_value": self.norm_value,
            "attainer": None if self.attainer is None else self.attainer.trimmed().coords.tolist(),
            "weak_null_score": self.weak_null_score,
            "splitting_residuals": self.splitting_residuals,
            "splitting_residuals_p": self.splitting_residuals_p,
            "dichotomy_margin": self.dichotomy_margin,
            "canonical_max": self.canonical_max,
            "notes": self.notes,
            "trace": None if self.trace is None else self.trace.to_dict(),
        }


# --- traces ---------------------------------------------------------------


def _common(vectors: Sequence[SeqVec]) -> np.ndarray:
    n = max((len(v) for v in vectors), default=0)
    return np.vstack([v.padded(n) for v in vectors]) if vectors else np.zeros((0, 0))


def weak_limit_candidate(certificates: Sequence[SeqVec], tau: float = DEFAULT_TAU) -> SeqVec:
    """Coordinatewise limit estimate from the last three certificates.

    Certificates are sign aligned and averaged; a coordinate survives only if
    it is at least ``tau`` in magnitude, with one sign, in every one of them.
    """
    tail = [align_sign(c) for c in list(certificates)[-TAIL:]]
    if not tail:
        return SeqVec()
    M = _common(tail)
    keep = (np.abs(M) >= tau).all(axis=0) & (np.abs(np.sign(M).sum(axis=0)) == len(tail))
    return SeqVec(np.where(keep, M.mean(axis=0), 0.0)).trimmed()


def trace_from_ladder(T: OperatorSpec, ladder: LadderResult, tau: float = DEFAULT_TAU) -> MaximizingTrace:
    steps = [TraceStep(e.section, e.certificate, e.value, e.alternates) for e in ladder.trace]
    return MaximizingTrace(steps, weak_limit_candidate([s.certificate for s in steps], tau),
                           T.p, T.q, T)


def trace_from_certificates(T: OperatorSpec, certificates: Sequence, sections: Sequence[int] | None = None,
                            tau: float = DEFAULT_TAU) -> MaximizingTrace:
    """Wrap hand-made certificates (e.g. a textbook maximizing sequence) as a trace."""
    certs = [as_seqvec(c) for c in certificates]
    sections = list(sections) if sections is not None else [max(c.support_length(), 1) for c in certs]
    steps = [TraceStep(n, c, norm(apply(T, c), T.q)) for n, c in zip(sections, certs)]
    return MaximizingTrace(steps, weak_limit_candidate(certs, tau), T.p, T.q, T)


def build_maximizing_sequence(T: OperatorSpec, cfg: SolverConfig | None = None,
                              tau: float = DEFAULT_TAU) -> MaximizingTrace:
    """One norm certificate per ladder section, plus the weak-limit candidate."""
    return trace_from_ladder(T, ladder_norm(T, cfg or SolverConfig()), tau)


def weak_null_proxy(trace: MaximizingTrace, window: int = DEFAULT_WINDOW,
                    tau: float = DEFAULT_TAU) -> tuple[bool, float]:
    """(weakly-null-like, score) where score is the largest of the first
    ``window`` coordinates over the last three certificates."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if not trace.steps:
        raise ValueError("empty trace")
    score = _early_mass([s.certificate for s in trace.steps[-TAIL:]], window)
    return score < tau, score


def _early_mass(vectors: Sequence[SeqVec], window: int) -> float:
    return max((float(np.max(np.abs(v.coords[:window]), initial=0.0)) for v in vectors), default=0.0)


# --- splitting identities -------------------------------------------------


def splitting_residual_q(T: OperatorSpec, u, v, q: float) -> float:
    """| ||Tv||^q - ||Tu||^q - ||T(v-u)||^q | in l_q."""
    q = check_exponent(q, name="q")
    u, v = as_seqvec(u), as_seqvec(v)
    return abs(norm_pow(apply(T, v), q) - norm_pow(apply(T, u), q) - norm_pow(apply(T, v - u), q))


def splitting_residual_p(u, w, p: float) -> float:
    """| ||w-u||_p^p - (1 - ||u||_p^p) | for a unit vector w."""
    p = check_exponent(p, name="p")
    u, w = as_seqvec(u), as_seqvec(w)
    if abs(norm(w, p) - 1.0) > 1e-8:
        raise ValueError(f"w must be a unit vector in l_{p}, has norm {norm(w, p)}")
    return abs(norm_pow(w - u, p) - (1.0 - norm_pow(u, p)))


def cross_term(Tu, Tv, q: float) -> float:
    """sum_i |Tu_i| |Tv_i - Tu_i|^(q-1), with 0^0 read as 0 when q = 1."""
    q = check_exponent(q, name="q")
    Tu, Tv = as_seqvec(Tu), as_seqvec(Tv)
    n = max(len(Tu), len(Tv))
    a, b = np.abs(Tu.padded(n)), np.abs(Tv.padded(n) - Tu.padded(n))
    inc = np.where(b > 0, b, 0.0) ** (q - 1.0) if q > 1.0 else (b > 0).astype(float)
    return float(np.sum(a * inc))


def coordinate_splitting_bound(Tu, Tv, q: float, eps: float) -> tuple[float, float]:
    """Both sides of the coordinatewise Brezis-Lieb bound.

    lhs = sum_i | |Tv_i|^q - |Tv_i - Tu_i|^q - |Tu_i|^q |
    rhs = C_eps * cross_term(Tu, Tv) + delta(eps) * ||Tu||_q^q
    Each summand is the scalar inequality at X_i = Tv_i / Tu_i scaled by |Tu_i|^q.
    """
    C, delta = splitting_bound_constants(q, eps)
    Tu, Tv = as_seqvec(Tu), as_seqvec(Tv)
    n = max(len(Tu), len(Tv))
    a, b = Tu.padded(n), Tv.padded(n)
    lhs = float(np.sum(np.abs(np.abs(b) ** q - np.abs(b - a) ** q - np.abs(a) ** q)))
    return lhs, C * cross_term(Tu, Tv, q) + delta * norm_pow(a, q)


# --- verdicts -------------------------------------------------------------


def _report_from_trace(T: OperatorSpec, trace: MaximizingTrace, window: int, tau: float,
                       attain_tol: float) -> AttainmentReport:
    p, q = trace.p, trace.q
    norm_value = max(trace.values)
    u = trace.weak_limit_candidate
    weak_like, score = weak_null_proxy(trace, window, tau)
    alt_score = _early_mass([a for s in trace.steps[-TAIL:] for a in s.alternates], window)
    res_q = [splitting_residual_q(T, u, s.certificate, q) for s in trace.steps]
    res_p = [splitting_residual_p(u, s.certificate, p) for s in trace.steps]
    ncols = trace.steps[-1].section
    A = finite_section(T, min(window, ncols))
    canonical_max = float(np.max(_col_q_norms(A, q), initial=0.0))

    if norm_value == 0.0:
        return AttainmentReport(ATTAINS, 0.0, SeqVec.unit(1), score, res_q, 0.0, res_p,
                                canonical_max, trace, ["zero operator: every unit vector attains"])

    u_norm = norm(u, p)
    margin = norm(apply(T, u), q) - norm_value * u_norm if u_norm > 0 else 0.0
    notes = []
    if u_norm > 0:
        attainer = u / u_norm
        if norm(apply(T, attainer), q) >= norm_value - attain_tol:
            return AttainmentReport(ATTAINS, norm_value, attainer, score, res_q, margin, res_p,
                                    canonical_max, trace, notes)
        notes.append("weak-limit candidate is nonzero but falls short of the norm")
    if weak_like and alt_score < tau and canonical_max < norm_value - attain_tol:
        notes.append("maximizing certificates escape every fixed window; no early canonical "
                     "vector reaches the norm")
        return AttainmentReport(DOES_NOT_ATTAIN, norm_value, None, score, res_q, margin, res_p,
                                canonical_max, trace, notes)
    notes.append("trace neither stabilizes nor escapes")
    return AttainmentReport(INCONCLUSIVE, norm_value, None, score, res_q, margin, res_p,
                            canonical_max, trace, notes)


def _col_q_norms(A: np.ndarray, q: float) -> np.ndarray:
    return np.array([norm(A[:, j], q) for j in range(A.shape[1])])


def diagnose(T: OperatorSpec, cfg: SolverConfig | None = None, window: int = DEFAULT_WINDOW,
             tau: float = DEFAULT_TAU, attain_tol: float = DEFAULT_ATTAIN_TOL) -> AttainmentReport:
    """Attainment verdict for T on the ladder of ``cfg``.

    attains: the weak-limit candidate u is nonzero and u/||u||_p reaches the
    norm within ``attain_tol``.  does_not_attain: the last certificates (and
    their tied alternates) are weakly-null-like and no canonical vector inside
    the window reaches the norm.  Anything else is inconclusive.
    """
    if check_exponent(T.p, name="p") == 1.0:
        raise PEqualsOneError(P1_MESSAGE)
    trace = build_maximizing_sequence(T, cfg, tau)
    return _report_from_trace(T, trace, window, tau, attain_tol)


def scalar_dichotomy(t: float, p: float, q: float) -> tuple[float, bool]:
    """rhs = t^q + (1 - t^p)^(q/p); for q > p it reaches 1 only at t in {0, 1}."""
    p, q = check_exponent(p, name="p"), check_exponent(q, name="q")
    if q <= p:
        raise ValueError(f"scalar dichotomy needs q > p, got p={p}, q={q}")
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    rhs = t ** q + max(0.0, 1.0 - t ** p) ** (q / p)
    return rhs, rhs >= 1.0 - 1e-12


def precompactness_check(trace: MaximizingTrace, tol_cauchy: float = 1e-6) -> tuple[bool, float]:
    """(Cauchy-like, gap): gap is the largest pairwise l_p distance among the
    last five sign-aligned certificates."""
    if len(trace.steps) < 5:
        raise ValueError("precompactness check needs at least 5 trace steps")
    tail = [align_sign(s.certificate) for s in trace.steps[-5:]]
    gap = max(distance(a, b, trace.p) for a, b in itertools.combinations(tail, 2))
    return gap < tol_cauchy, gap


# --- rearrangement --------------------------------------------------------


def _rows_nonincreasing(A: np.ndarray) -> bool:
    return bool(np.all(A >= 0) and np.all(np.diff(A, axis=1) <= 0))


def _diagonal_nonincreasing(A: np.ndarray) -> bool:
    d = np.diag(A)
    off = A.copy()
    np.fill_diagonal(off, 0.0)
    return bool(not off.any() and np.all(d >= 0) and np.all(np.diff(d) <= 0))


def column_condition(A: np.ndarray) -> bool:
    """Sufficient condition for monotonicity under the non-increasing rearrangement.

    Either every row is nonnegative and non-increasing (<Te_1,e_j> >= <Te_2,e_j>
    >= ... >= 0) or A is diagonal with nonnegative non-increasing entries
    (rearrangement inequality).
    """
    return _rows_nonincreasing(A) or _diagonal_nonincreasing(A)


def monotone_check(T: OperatorSpec, p: float, q: float, samples: int = 200, seed: int = 0,
                   section: int = 64) -> tuple[bool, bool]:
    """(||T sigma(x)||_q >= ||T x||_q on seeded random x, column condition)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    p, q = check_exponent(p, name="p"), check_exponent(q, name="q")
    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(samples):
        n = int(rng.integers(1, section + 1))
        x = rng.standard_normal(n) * rng.exponential(1.0, n)
        x /= max(norm(x, p), 1e-300)
        lhs = norm(apply(T, rearrange(x)), q)
        rhs = norm(apply(T, x), q)
        if lhs < rhs - 1e-12 * max(1.0, rhs):
            ok = False
            break
    return ok, column_condition(finite_section(T, section))


def _bounded_on_ladder(T: OperatorSpec, source_p: float, cfg: SolverConfig, growth_tol: float) -> tuple[bool, list[float]]:
    values = ladder_norm(T.with_exponents(p=source_p), cfg).values
    growth = (values[-1] - values[-2]) / max(values[-2], 1e-300) if len(values) > 1 else 0.0
    return growth <= growth_tol, values


def theorem_monotone_verify(T: OperatorSpec, p: float, q: float, eps: float,
                            cfg: SolverConfig | None = None, window: int = DEFAULT_WINDOW,
                            tau: float = DEFAULT_TAU, attain_tol: float = DEFAULT_ATTAIN_TOL,
                            growth_tol: float = 1e-2) -> AttainmentReport:
    """Rearranged-maximizing-sequence route to attainment for a monotone T.

    Checks the hypotheses (monotone on samples plus the column condition, and
    l_{p+eps} -> l_q ladder norms that stop growing), rearranges every ladder
    certificate, and diagnoses the rearranged trace.  Raises ``ValueError`` if
    a hypothesis fails.
    """
    cfg = cfg or SolverConfig()
    p = check_exponent(p, strict=True, name="p")
    q = check_exponent(q, name="q")
    if eps <= 0:
        raise ValueError("eps must be positive")
    T = T.with_exponents(p=p, q=q)
    sample_ok, cond = monotone_check(T, p, q, seed=cfg.seed)
    if not (sample_ok and cond):
        raise ValueError(f"monotonicity precondition failed (samples={sample_ok}, column condition={cond})")
    bounded, vals = _bounded_on_ladder(T, p + eps, cfg, growth_tol)
    if not bounded:
        raise ValueError(f"T does not look bounded from l_{p + eps} into l_{q}: ladder values {vals}")

    original = build_maximizing_sequence(T, cfg, tau)
    steps = []
    for s in original.steps:
        y = rearrange(s.certificate)
        steps.append(TraceStep(s.section, y, norm(apply(T, y), q)))
    trace = MaximizingTrace(steps, weak_limit_candidate([s.certificate for s in steps], tau), p, q, T)
    report = _report_from_trace(T, trace, window, tau, attain_tol)
    for before, after in zip(original.steps, steps):
        if after.value < before.value - attain_tol:
            report.notes.append(f"rearranged value dropped at section {after.section}")
    report.notes.append(f"l_{p + eps} -> l_{q} ladder values: {[round(v, 12) for v in vals]}")
    return report


# --- block extraction -----------------------------------------------------


class BlockExtraction(NamedTuple):
    blocks: list[SeqVec]
    isometry_defect: float
    image_equivalence_defect: float


def _core(c: np.ndarray, p: float, budget: float) -> np.ndarray:
    """Coordinates left after dropping the smallest ones with total mass <= budget."""
    mass = np.abs(c) ** p
    order = np.argsort(mass, kind="stable")
    dropped = np.cumsum(mass[order]) <= budget
    keep = np.ones(len(c), dtype=bool)
    keep[order[dropped]] = False
    return keep & (mass > 0)


def block_extraction(trace: MaximizingTrace, overlap_tol: float = 1e-3, coeff_samples: int = 100,
                     seed: int = 0) -> BlockExtraction:
    """Gliding-hump selection of almost disjoint certificates.

    Certificates are visited in trace order; one is accepted when its l_p mass
    on coordinates already claimed is below ``overlap_tol``.  Accepted blocks
    are cut to exact disjointness and renormalized.  Defects are measured on
    ``coeff_samples`` seeded coefficient vectors a:

    * isometry: max | ||sum a_i b_i||_p - ||a||_p |
    * image: worst violation of c_min ||a||_q <= ||sum a_i T(b_i)||_q <= c_max ||a||_q
      relative to ||a||_q, with c_min, c_max the extreme ||T(b_i)||_q.
    """
    p, q = trace.p, trace.q
    n = max(len(s.certificate) for s in trace.steps)
    claimed = np.zeros(n, dtype=bool)
    blocks: list[SeqVec] = []
    for s in trace.steps:
        c = s.certificate.padded(n)
        if np.sum(np.abs(c[claimed]) ** p) >= overlap_tol:
            continue
        core = _core(c, p, overlap_tol / 2) & ~claimed
        b = np.where(core, c, 0.0)
        if not b.any():
            continue
        blocks.append(SeqVec(b / norm(b, p)))
        claimed |= core
    if len(blocks) < 2:
        raise ValueError(f"only {len(blocks)} admissible block(s); trace is not weakly-null-like")

    rng = np.random.default_rng(seed)
    B = np.column_stack([b.padded(n) for b in blocks])
    iso = 0.0
    img = 0.0
    images = None
    if trace.operator is not None:
        images = [apply(trace.operator, b) for b in blocks]
        m = max(len(y) for y in images)
        Y = np.column_stack([y.padded(m) for y in images])
        cn = np.array([norm(y, q) for y in images])
        lo, hi = cn.min(), cn.max()
    for _ in range(coeff_samples):
        a = rng.standard_normal(len(blocks))
        iso = max(iso, abs(norm(B @ a, p) - norm(a, p)))
        if images is not None:
            val, aq = norm(Y @ a, q), norm(a, q)
            img = max(img, (lo * aq - val) / aq, (val - hi * aq) / aq, 0.0)
    return BlockExtraction(blocks, iso, img)


def image_constants(trace: MaximizingTrace, blocks: Sequence[SeqVec]) -> tuple[float, float]:
    """(min, max) of ||T(b)||_q over blocks: the equivalence constants against the l_q basis."""
    cn = [norm(apply(trace.operator, b), trace.q) for b in blocks]
    return min(cn), max(cn)
