import math

import numpy as np
import pytest

from seqnorm.lineability import (
    LINEABILITY_LADDER,
    additivity_defect,
    build_attaining_family,
    build_nonattaining_family,
    coefficient_samples,
    combine,
    independence_check,
    near_maximizers,
    verify_span_attains,
    verify_span_nonattaining,
)
from seqnorm.norm_solver import SolverConfig, ladder_norm
from seqnorm.operators import apply, finite_section, interleave, op_dense, op_explicit, op_novo1, op_reciprocal
from seqnorm.sequence_space import SeqVec, norm

CFG = SolverConfig(ladder=LINEABILITY_LADDER)
rank_one = op_explicit([1.0])
e1 = SeqVec.unit(1)


# --- attaining families ------------------------------------------------------


def test_rank_one_family_of_two():
    v1, v2 = build_attaining_family(rank_one, e1, 2)
    assert apply(v1, e1) == SeqVec.unit(1)
    assert apply(v2, e1) == SeqVec.unit(2)
    for v in (v1, v2):
        assert ladder_norm(v, CFG).estimate.value == pytest.approx(1.0, abs=1e-12)


def test_singleton_is_relabeled_copy():
    (v,) = build_attaining_family(op_reciprocal(), e1, 1)
    S, B = finite_section(v, 8), finite_section(op_reciprocal(), 8)
    assert np.array_equal(S[np.any(S != 0, axis=1)], B)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_member_value_at_x0(k):
    u = op_reciprocal(2, 3)
    v = build_attaining_family(u, e1, 4)[k - 1]
    assert norm(apply(v, e1), 3) == norm(apply(u, e1), 3)


def test_family_errors():
    with pytest.raises(ValueError):
        build_attaining_family(rank_one, e1, 0)
    with pytest.raises(ValueError):
        build_attaining_family(rank_one, SeqVec([2.0]), 2)
    with pytest.raises(ValueError):
        build_nonattaining_family(op_novo1(), 0)
    with pytest.raises(ValueError):
        independence_check([])


def test_combination_attains_at_x0():
    fam = build_attaining_family(rank_one, e1, 2)
    S = combine(fam, [2.0, 3.0])
    assert norm(apply(S, e1), 2) == pytest.approx(math.sqrt(13), abs=1e-15)
    assert ladder_norm(S, CFG).estimate.value == pytest.approx(math.sqrt(13), abs=1e-12)
    a, b = 0.7, -1.9
    assert ladder_norm(combine(fam, [a, b]), CFG).estimate.value ** 2 == pytest.approx(a * a + b * b)


def test_unit_coefficients_reduce_to_member():
    fam = build_attaining_family(op_reciprocal(), e1, 3)
    S = combine(fam, [1.0, 0.0, 0.0])
    assert apply(S, SeqVec([0.3, 0.4])) == apply(fam[0], SeqVec([0.3, 0.4]))


def test_verify_span_attains_report():
    fam = build_attaining_family(op_reciprocal(2, 3), e1)
    rep = verify_span_attains(fam, e1, coeff_samples=8)
    assert rep.all_attain_at_x0
    assert rep.max_attain_gap <= 1e-8
    assert 0 <= rep.additivity_defect < 1e-10
    assert rep.independence_ok and rep.passed
    assert len(rep.combos_tested) == 8 + 2 * 4
    assert rep.to_dict()["family_size"] == 4


def test_coefficient_samples_cover_units():
    combos = coefficient_samples(3, 5, seed=1)
    assert len(combos) == 11
    units = [c for c in combos[5:]]
    assert sorted(tuple(u) for u in units) == sorted(
        tuple(s * np.eye(3)[k]) for k in range(3) for s in (1.0, -1.0))
    assert np.array_equal(coefficient_samples(3, 5, seed=1)[0], combos[0])


def test_additivity_defect_random():
    fam = build_attaining_family(op_dense([[1.0, -2.0], [0.5, 3.0]], 2, 3), SeqVec([1.0, 0.0]), 3)
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert additivity_defect(fam, rng.standard_normal(3), rng.standard_normal(5)) < 1e-10


# --- non-attaining families --------------------------------------------------


def test_novo1_pair_placement():
    v1, v2 = build_nonattaining_family(op_novo1(), 2)
    assert np.flatnonzero(apply(v1, np.ones(4)).coords).tolist() == [0, 2, 4, 6]
    assert np.flatnonzero(apply(v2, np.ones(4)).coords).tolist() == [1, 5, 9, 13]


def test_interleaving_preserves_ladder_norms():
    base = ladder_norm(op_novo1(), CFG).estimate.value
    for v in build_nonattaining_family(op_novo1(), 4):
        assert abs(ladder_norm(v, CFG).estimate.value - base) < 1e-8


def test_novo1_sum_of_two():
    fam = build_nonattaining_family(op_novo1(), 2)
    S = combine(fam, [1.0, 1.0])
    n = CFG.ladder[-1]
    assert ladder_norm(S, CFG).estimate.value ** 2 == pytest.approx(2 * (n / (n + 1)) ** 2, abs=1e-12)
    rng = np.random.default_rng(4)
    for _ in range(200):
        x = rng.standard_normal(int(rng.integers(1, 2 * n)))
        x /= norm(x, 2)
        assert norm(apply(S, x), 2) ** 2 < 2.0


def test_near_maximizers_are_canonical():
    top, xs = near_maximizers(op_novo1(), (1, 2, 4, 8, 16, 32), CFG)
    assert top == pytest.approx(32 / 33)
    for n, x in zip((1, 2, 4, 8, 16, 32), xs):
        m = x.support_length()
        assert x == SeqVec.unit(m)
        assert m / (m + 1) >= top - 1 / n


def test_verify_span_nonattaining_report():
    fam = build_nonattaining_family(op_novo1(2, 3), 3)
    rep = verify_span_nonattaining(fam, coeff_samples=6, unit_samples=16)
    assert rep.none_attain and rep.near_attainment_ok and rep.independence_ok
    assert rep.min_strict_margin > 0
    assert rep.combined_norm_defect < 1e-8
    assert rep.additivity_defect < 1e-10
    assert rep.passed and not rep.notes


# --- independence ------------------------------------------------------------


def test_independence_cases():
    fam = build_attaining_family(op_reciprocal(), e1, 4)
    assert independence_check(fam)
    assert not independence_check([fam[0], fam[0]])
    assert independence_check(fam[:1])
    assert not independence_check([interleave(op_explicit([0.0]), 1)])


def test_independence_rank_fallback():
    a = op_dense([[1.0, 0.0], [0.0, 1.0]])
    b = op_dense([[1.0, 1.0], [0.0, 1.0]])
    # same row support, so only the rank test can separate them
    assert independence_check([a, b])
    c = op_dense([[2.0, 1.0], [0.0, 2.0]])
    assert not independence_check([a, b, c])


def test_mixed_bases_rejected_by_combine():
    with pytest.raises(ValueError):
        combine([interleave(op_novo1(), 1), interleave(op_reciprocal(), 2)], [1.0, 1.0])
