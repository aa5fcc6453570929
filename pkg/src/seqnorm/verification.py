"""Named invariant suites, each a list of pass/fail checks.

Used by ``seqnorm verify`` and by the acceptance tests.  Every suite is
deterministic given its seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import attainment as att
from .lineability import (
    build_attaining_family,
    build_nonattaining_family,
    verify_span_attains,
    verify_span_nonattaining,
)
from .norm_solver import SolverConfig
from .operators import apply, op_explicit, op_identity, op_novo1, op_reciprocal
from .sequence_space import (
    SeqVec,
    _phi_array,
    concavity_check,
    interpolation_bound,
    norm,
    phi_threshold,
    rearrange,
    splitting_bound_constants,
    splitting_lhs,
)

SCALAR_R = (1.5, 2.0, 3.0, 4.0)
SCALAR_EPS = (0.01, 0.1, 0.5)
DICHOTOMY_PAIRS = ((1.5, 2.0), (2.0, 3.0), (2.0, 4.0))
IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _check(name: str, passed, detail: str = "") -> Check:
    return Check(name, bool(passed), detail)


# --- scalar ----------------------------------------------------------------


def phi_two_identity(points: int = 10_001) -> float:
    """Largest |phi_2(X) - 2| on a grid of X in [-1e3, 1e3] (X = 1 skipped)."""
    X = np.linspace(-1e3, 1e3, points)
    X = X[X != 1.0]
    return float(np.max(np.abs(_phi_array(2.0, X) - 2.0)))


def phi_tail_defect(r: float, tol: float = 0.01, samples: int = 2000, seed: int = 0) -> tuple[float, float]:
    """(X0, worst |phi_r(X) - r| over sampled |X| >= X0)."""
    x0 = phi_threshold(r, tol)
    rng = np.random.default_rng(seed)
    mags = x0 * np.exp(rng.uniform(0.0, np.log(1e8), samples))
    mags = np.concatenate([[x0], mags])
    X = np.concatenate([mags, -mags])
    return x0, float(np.max(np.abs(_phi_array(r, X) - r)))


def splitting_grid_violation(r: float, eps: float, points: int = 10_000) -> float:
    """max(lhs - C|X-1|^(r-1) - delta) over a grid of X in [-1e3, 1e3]; <= 0 means it holds."""
    C, delta = splitting_bound_constants(r, eps)
    X = np.linspace(-1e3, 1e3, points)
    rhs = C * np.abs(X - 1.0) ** (r - 1.0) + delta
    return float(np.max(splitting_lhs(r, X) - rhs))


def concavity_failures(count: int = 100_000, seed: int = 0) -> int:
    rng = np.random.default_rng(seed)
    a = rng.exponential(1.0, count) * rng.choice([0.0, 1.0, 10.0], count, p=[0.05, 0.8, 0.15])
    b = rng.exponential(1.0, count)
    th = rng.uniform(0.0, 1.0, count)
    return sum(not concavity_check(float(x), float(y), float(t)) for x, y, t in zip(a, b, th))


def interpolation_failures(count: int = 10_000, seed: int = 0) -> int:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(count):
        x = rng.standard_normal(int(rng.integers(1, 20)))
        p = float(rng.uniform(1.0, 6.0))
        eps = float(rng.uniform(0.01, 4.0))
        lhs, rhs = interpolation_bound(SeqVec(x), p, eps)
        bad += lhs > rhs + 1e-12 * max(1.0, rhs)
    return bad


def dichotomy_profile(p: float, q: float, step: float = 1e-3) -> tuple[float, float, bool]:
    """(boundary defect at t in {0,1}, min 1 - rhs on the interior grid, any interior forcing)."""
    t = np.arange(1, int(round(1.0 / step))) * step
    res = [att.scalar_dichotomy(float(s), p, q) for s in t]
    boundary = max(abs(att.scalar_dichotomy(0.0, p, q)[0] - 1.0), abs(att.scalar_dichotomy(1.0, p, q)[0] - 1.0))
    margin = min(1.0 - r for r, _ in res)
    return boundary, margin, any(f for _, f in res)


def suite_scalar(seed: int = 0) -> list[Check]:
    out = [_check("phi_2 == 2", phi_two_identity() <= IDENTITY_TOL, f"max dev {phi_two_identity():.2e}")]
    for r in SCALAR_R:
        x0, dev = phi_tail_defect(r, seed=seed)
        out.append(_check(f"phi_{r} tail beyond X0", dev < 0.01, f"X0={x0:.4g} worst={dev:.2e}"))
    for r in SCALAR_R:
        for eps in SCALAR_EPS:
            v = splitting_grid_violation(r, eps)
            out.append(_check(f"splitting bound r={r} eps={eps}", v <= 0.0, f"max excess {v:.2e}"))
    bad = concavity_failures(seed=seed)
    out.append(_check("concavity on 1e5 triples", bad == 0, f"{bad} failures"))
    bad = interpolation_failures(seed=seed)
    out.append(_check("interpolation bound on 1e4 vectors", bad == 0, f"{bad} failures"))
    for p, q in DICHOTOMY_PAIRS:
        boundary, margin, forced = dichotomy_profile(p, q)
        out.append(_check(f"dichotomy p={p} q={q}", boundary <= IDENTITY_TOL and margin > 0 and not forced,
                          f"boundary {boundary:.1e}, min interior margin {margin:.2e}"))
    return out


# --- splitting -------------------------------------------------------------


def synthetic_splitting(T, u: SeqVec, deltas, starts, p: float, q: float) -> tuple[float, float]:
    """Worst (q-residual, p-residual) along increments placed beyond the supports of u and T(u).

    The q-residual uses v = u + d e_n.  The p-residual uses the unit vector
    w = u + (1 - ||u||_p^p)^(1/p) e_n, so u needs ||u||_p <= 1.
    """
    worst_q = worst_p = 0.0
    tail = (1.0 - norm(u, p) ** p) ** (1.0 / p)
    for d, n in zip(deltas, starts):
        e = SeqVec.unit(n, n)
        worst_q = max(worst_q, att.splitting_residual_q(T, u, u + e * d, q))
        worst_p = max(worst_p, att.splitting_residual_p(u, u + e * tail, p))
    return worst_q, worst_p


def suite_splitting(seed: int = 0, cfg: SolverConfig | None = None) -> list[Check]:
    cfg = cfg or SolverConfig(seed=seed)
    rng = np.random.default_rng(seed)
    out = []
    for T in (op_identity(2, 2), op_reciprocal(2, 3), op_novo1(1.5, 2)):
        u = rng.standard_normal(4)
        u = SeqVec(0.6 * u / norm(u, T.p))
        starts = list(range(8, 40, 4))
        wq, wp = synthetic_splitting(T, u, rng.uniform(-2, 2, len(starts)), starts, T.p, T.q)
        out.append(_check(f"disjoint synthetic trace {T.params().get('rule')} p={T.p} q={T.q}",
                          max(wq, wp) <= IDENTITY_TOL, f"q-res {wq:.1e}, p-res {wp:.1e}"))
    for p, q in ((1.5, 2.0), (2.0, 2.0), (2.0, 3.0), (2.0, 4.0)):
        T = op_novo1(p, q)
        trace = att.build_maximizing_sequence(T, cfg)
        u = trace.weak_limit_candidate
        rq = [att.splitting_residual_q(T, u, s.certificate, q) for s in trace.steps]
        rp = [att.splitting_residual_p(u, s.certificate, p) for s in trace.steps]
        mono = all(b <= a + IDENTITY_TOL for a, b in zip(rq, rq[1:])) and \
            all(b <= a + IDENTITY_TOL for a, b in zip(rp, rp[1:]))
        out.append(_check(f"novo1 trace residuals p={p} q={q}", mono and rq[-1] <= 1e-6 and rp[-1] <= 1e-6,
                          f"final q-res {rq[-1]:.1e}, p-res {rp[-1]:.1e}"))
        dt = max(att.cross_term(apply(T, u), apply(T, s.certificate), q) for s in trace.steps)
        out.append(_check(f"novo1 cross term p={p} q={q}", dt <= IDENTITY_TOL, f"max {dt:.1e}"))
    return out


# --- pre-compactness -------------------------------------------------------


def counterexample_trace(sections=(2, 4, 8, 16, 32, 64)) -> att.MaximizingTrace:
    """Certificates 2^(-1/2)(e_1 + e_n) for the identity at p = q = 2."""
    T = op_identity(2, 2)
    certs = [SeqVec((SeqVec.unit(1, n).coords + SeqVec.unit(n, n).coords) / np.sqrt(2.0)) for n in sections]
    return att.trace_from_certificates(T, certs, sections)


def suite_precompact(seed: int = 0, cfg: SolverConfig | None = None) -> list[Check]:
    cfg = cfg or SolverConfig(seed=seed)
    out = []
    for T in (op_reciprocal(2, 4), op_reciprocal(1.5, 3), op_explicit([1.0, 0.5, 0.25], 2, 3)):
        ok, gap = att.precompactness_check(att.build_maximizing_sequence(T, cfg))
        out.append(_check(f"attaining diagonal p={T.p} q={T.q} is Cauchy", ok and gap < 1e-6, f"gap {gap:.1e}"))
    ok, gap = att.precompactness_check(counterexample_trace())
    out.append(_check("identity p=q=2 counterexample gap 1", not ok and abs(gap - 1.0) <= 1e-10, f"gap {gap!r}"))
    return out


# --- monotone --------------------------------------------------------------


def monotone_family() -> list:
    """Non-increasing nonnegative diagonals (scaled to stay bounded)."""
    return [
        op_reciprocal(2, 4),
        op_reciprocal(2, 4, scale=0.5),
        op_explicit([1.0, 0.75, 0.5, 0.25], 2, 4),
        op_explicit([1.0, 1.0, 0.5], 2, 4),
    ]


def rearrangement_defect(count: int = 2000, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        x = SeqVec(rng.standard_normal(int(rng.integers(1, 40))))
        r = float(rng.uniform(1.0, 8.0))
        nx = norm(x, r)
        worst = max(worst, abs(norm(rearrange(x), r) - nx) / max(1.0, nx))
    return worst


def suite_monotone(seed: int = 0, cfg: SolverConfig | None = None, eps: float = 2.0) -> list[Check]:
    cfg = cfg or SolverConfig(seed=seed)
    d = rearrangement_defect(seed=seed)
    out = [_check("rearrangement preserves l_r norms", d <= IDENTITY_TOL, f"max rel dev {d:.1e}")]
    for T in monotone_family():
        rep = att.theorem_monotone_verify(T, T.p, T.q, eps, cfg)
        drop = any("dropped" in n for n in rep.notes)
        out.append(_check(f"monotone {T.params()} attains", rep.verdict == att.ATTAINS and not drop,
                          f"verdict {rep.verdict}, norm {rep.norm_value:.12g}"))
    ok, cond = att.monotone_check(op_novo1(2, 2), 2, 2, seed=seed)
    out.append(_check("novo1 fails the column condition", not cond, f"samples ok={ok}"))
    return out


# --- blocks ----------------------------------------------------------------


def suite_blocks(seed: int = 0, cfg: SolverConfig | None = None) -> list[Check]:
    cfg = cfg or SolverConfig(seed=seed)
    rng = np.random.default_rng(seed)
    out = []
    # exactly disjoint random blocks
    p, q = 2.5, 3.0
    certs, start = [], 1
    for _ in range(6):
        width = int(rng.integers(1, 5))
        c = np.zeros(start + width - 1)
        c[start - 1:] = rng.standard_normal(width)
        certs.append(SeqVec(c / norm(c, p)))
        start += width
    trace = att.trace_from_certificates(op_identity(p, q), certs)
    ext = att.block_extraction(trace, seed=seed)
    out.append(_check("disjoint blocks are isometric to l_p", ext.isometry_defect < 1e-10,
                      f"{len(ext.blocks)} blocks, defect {ext.isometry_defect:.1e}"))
    T = op_novo1(2, 3)
    trace = att.build_maximizing_sequence(T, cfg)
    ext = att.block_extraction(trace, seed=seed)
    lo, hi = att.image_constants(trace, ext.blocks)
    out.append(_check("novo1 blocks isometric", ext.isometry_defect < 1e-10, f"defect {ext.isometry_defect:.1e}"))
    out.append(_check("novo1 images equivalent to l_q basis",
                      ext.image_equivalence_defect < 1e-10 and 0.5 <= lo <= hi <= 1.0,
                      f"constants [{lo:.4f}, {hi:.4f}], defect {ext.image_equivalence_defect:.1e}"))
    return out


# --- lineability -----------------------------------------------------------


def suite_lineability(seed: int = 0, cfg: SolverConfig | None = None) -> list[Check]:
    out = []
    x0 = SeqVec.unit(1, 1)
    for u in (op_explicit([1.0], 2, 2), op_reciprocal(2, 3)):
        rep = verify_span_attains(build_attaining_family(u, x0), x0, seed=seed, cfg=cfg)
        out.append(_check(f"attaining family {u.params().get('rule')} p={u.p} q={u.q}",
                          rep.all_attain_at_x0 and rep.additivity_defect < 1e-10 and rep.independence_ok,
                          f"gap {rep.max_attain_gap:.1e}, additivity {rep.additivity_defect:.1e}"))
    for p, q in ((2.0, 2.0), (2.0, 3.0)):
        rep = verify_span_nonattaining(build_nonattaining_family(op_novo1(p, q)), seed=seed, cfg=cfg)
        out.append(_check(f"non-attaining family novo1 p={p} q={q}",
                          rep.none_attain and rep.near_attainment_ok and rep.additivity_defect < 1e-10
                          and rep.independence_ok,
                          f"min margin {rep.min_strict_margin:.2e}, additivity {rep.additivity_defect:.1e}"))
    return out


SUITES: dict[str, Callable[..., list[Check]]] = {
    "scalar": suite_scalar,
    "splitting": suite_splitting,
    "precompact": suite_precompact,
    "monotone": suite_monotone,
    "blocks": suite_blocks,
    "lineability": suite_lineability,
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    """Run one suite, or every suite for ``name == "all"``."""
    if name == "all":
        return [c for key in SUITES for c in run_suite(key, seed)]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}")
    return [Check(f"{name}: {c.name}", c.passed, c.detail) for c in SUITES[name](seed=seed)]
