"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from seqnorm import attainment as att
from seqnorm.lineability import (
    build_attaining_family,
    build_nonattaining_family,
    verify_span_attains,
    verify_span_nonattaining,
)
from seqnorm.norm_solver import SolverConfig, bruteforce_norm, ladder_norm, power_norm
from seqnorm.operators import op_explicit, op_identity, op_novo1, op_reciprocal
from seqnorm.sequence_space import SeqVec
from seqnorm.verification import (
    SCALAR_R,
    SCALAR_EPS,
    concavity_failures,
    counterexample_trace,
    dichotomy_profile,
    monotone_family,
    phi_tail_defect,
    phi_two_identity,
    rearrangement_defect,
    splitting_grid_violation,
    synthetic_splitting,
)

PAIRS = ((1.5, 2.0), (2.0, 2.0), (2.0, 3.0), (2.0, 4.0))


def record(number, title, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}  {title}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    assert ok, detail


def test_criterion_01_novo1_sections():
    cfg = SolverConfig(ladder=tuple(range(2, 257)))
    t0 = time.perf_counter()
    res = ladder_norm(op_novo1(2, 2), cfg)
    elapsed = time.perf_counter() - t0
    err = max(abs(e.value - e.section / (e.section + 1)) for e in res.trace)
    record(1, "novo1 sections n=2..256", err <= 1e-8 and elapsed < 5.0,
           f"max error {err:.1e}, {elapsed:.2f} s")


def test_criterion_02_dichotomy_bundle():
    verdicts = {}
    for p, q in PAIRS:
        verdicts[("novo1", p, q)] = att.diagnose(op_novo1(p, q)).verdict
        rep = att.diagnose(op_reciprocal(p, q))
        at_e1 = rep.attainer is not None and abs(abs(rep.attainer.coords[0]) - 1.0) < 1e-9 \
            and len(rep.attainer.trimmed()) == 1
        verdicts[("reciprocal", p, q)] = rep.verdict if at_e1 else f"{rep.verdict} (not at e_1)"
    ok = all(v == att.DOES_NOT_ATTAIN for (k, _, _), v in verdicts.items() if k == "novo1") and \
        all(v == att.ATTAINS for (k, _, _), v in verdicts.items() if k == "reciprocal")
    inconclusive = sum(v == att.INCONCLUSIVE for v in verdicts.values())
    record(2, "dichotomy bundle", ok and inconclusive == 0,
           f"{inconclusive} inconclusive, " + ", ".join(f"{k}({p},{q})={v}" for (k, p, q), v in verdicts.items()))


def test_criterion_03_splitting_identities():
    rng = np.random.default_rng(0)
    synth = 0.0
    for T in (op_identity(2, 2), op_reciprocal(2, 3), op_novo1(1.5, 2), op_explicit([0.3, -1.0, 0.7], 2.5, 4)):
        for _ in range(5):
            u = rng.standard_normal(int(rng.integers(1, 6)))
            u = SeqVec(rng.uniform(0.1, 0.9) * u / np.sum(np.abs(u) ** T.p) ** (1 / T.p))
            starts = list(range(len(u) + 4, len(u) + 60, 7))
            synth = max(synth, *synthetic_splitting(T, u, rng.uniform(-3, 3, len(starts)), starts, T.p, T.q))
    worst_final, monotone = 0.0, True
    for p, q in PAIRS:
        T = op_novo1(p, q)
        trace = att.build_maximizing_sequence(T)
        u = trace.weak_limit_candidate
        rq = [att.splitting_residual_q(T, u, s.certificate, q) for s in trace.steps]
        rp = [att.splitting_residual_p(u, s.certificate, p) for s in trace.steps]
        monotone &= all(b <= a for seq in (rq, rp) for a, b in zip(seq, seq[1:]))
        worst_final = max(worst_final, rq[-1], rp[-1])
    record(3, "splitting identities", synth <= 1e-12 and monotone and worst_final <= 1e-6,
           f"synthetic max {synth:.1e}, novo1 final {worst_final:.1e}, monotone={monotone}")


def test_criterion_04_scalar_suite():
    phi2 = phi_two_identity()
    tails = {r: phi_tail_defect(r)[1] for r in SCALAR_R}
    split = max(splitting_grid_violation(r, e) for r in SCALAR_R for e in SCALAR_EPS)
    concave = concavity_failures(100_000)
    ok = phi2 <= 1e-12 and max(tails.values()) < 0.01 and split <= 0.0 and concave == 0
    record(4, "scalar lemma suite", ok,
           f"phi_2 dev {phi2:.1e}, tail max {max(tails.values()):.1e}, "
           f"splitting excess {split:.1e}, concavity failures {concave}")


def test_criterion_05_dichotomy_inequality():
    # literal reading: 1 - rhs >= 1e-3 at every interior grid point t = k * 1e-3
    worst_margin, worst_boundary, forced = 1.0, 0.0, False
    for p, q in ((1.5, 2.0), (2.0, 3.0), (2.0, 4.0)):
        boundary, margin, f = dichotomy_profile(p, q, step=1e-3)
        worst_margin, worst_boundary, forced = min(worst_margin, margin), max(worst_boundary, boundary), forced or f
    ok = worst_boundary <= 1e-12 and not forced and worst_margin >= 1e-3
    record(5, "dichotomy inequality", ok,
           f"boundary {worst_boundary:.1e}, strict everywhere={not forced}, min interior margin {worst_margin:.2e}")


def test_criterion_06_precompactness():
    ok1, gap1 = att.precompactness_check(att.build_maximizing_sequence(op_reciprocal(2, 4)))
    ok2, gap2 = att.precompactness_check(counterexample_trace())
    record(6, "pre-compactness", ok1 and gap1 < 1e-6 and abs(gap2 - 1.0) <= 1e-10,
           f"attaining gap {gap1:.1e}, counterexample gap {gap2!r}")


def test_criterion_07_rearrangement():
    d = rearrangement_defect(count=5000)
    verdicts = [att.theorem_monotone_verify(T, 2.0, 4.0, 2.0).verdict for T in monotone_family()]
    record(7, "rearrangement", d <= 1e-12 and all(v == att.ATTAINS for v in verdicts),
           f"max norm dev {d:.1e}, verdicts {verdicts}")


def test_criterion_08_block_isometry():
    rng = np.random.default_rng(1)
    certs, start = [], 1
    for _ in range(8):
        width = int(rng.integers(1, 6))
        c = np.zeros(start + width - 1)
        c[start - 1:] = rng.standard_normal(width)
        certs.append(SeqVec(c / np.sum(np.abs(c) ** 2.5) ** (1 / 2.5)))
        start += width
    synth = att.block_extraction(att.trace_from_certificates(op_identity(2.5, 3), certs), coeff_samples=100)
    worst = synth.isometry_defect
    for p, q in PAIRS:
        ext = att.block_extraction(att.build_maximizing_sequence(op_novo1(p, q)), coeff_samples=100)
        worst = max(worst, ext.isometry_defect)
    record(8, "block isometry", worst < 1e-10, f"max defect {worst:.1e} over 100 coefficient vectors per trace")


def test_criterion_09_lineability():
    x0 = SeqVec.unit(1)
    add, gaps, attain_ok = 0.0, 0.0, True
    for u in (op_explicit([1.0], 2, 2), op_reciprocal(2, 3), op_reciprocal(1.5, 2)):
        rep = verify_span_attains(build_attaining_family(u, x0), x0)
        add, gaps, attain_ok = max(add, rep.additivity_defect), max(gaps, rep.max_attain_gap), \
            attain_ok and rep.all_attain_at_x0
    margin, strict_ok, near_ok = np.inf, True, True
    for p, q in ((2.0, 2.0), (2.0, 3.0)):
        rep = verify_span_nonattaining(build_nonattaining_family(op_novo1(p, q)))
        add = max(add, rep.additivity_defect)
        margin = min(margin, rep.min_strict_margin)
        strict_ok &= rep.none_attain
        near_ok &= rep.near_attainment_ok
    record(9, "lineability", add < 1e-10 and attain_ok and strict_ok and near_ok,
           f"additivity {add:.1e}, attain gap {gaps:.1e}, min strict margin {margin:.2e}, near={near_ok}")


def test_criterion_10_solver_soundness():
    rng = np.random.default_rng(2024)
    exps = (1.5, 2.0, 3.0)
    worst, mono, runs = 0.0, True, 0
    for _ in range(200):
        n = int(rng.integers(2, 4))
        A = rng.uniform(-1.0, 1.0, (n, n))
        for p in exps:
            for q in exps:
                est = power_norm(A, p, q)
                ref = bruteforce_norm(A, p, q, density=240)
                worst = max(worst, abs(est.value - ref.value))
                h = np.asarray(est.history)
                mono &= bool(np.all(np.diff(h) >= 0))
                runs += 1
    record(10, "solver soundness", worst <= 1e-5 and mono,
           f"{runs} runs, max |power - brute| {worst:.1e}, histories monotone={mono}")
