import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from seqnorm.sequence_space import (
    SeqVec,
    align_sign,
    check_exponent,
    concavity_check,
    conjugate,
    distance,
    duality_map,
    interpolation_bound,
    leading_index,
    norm,
    norm_pow,
    normalize,
    phi,
    phi_threshold,
    rearrange,
    splitting_bound_constants,
    splitting_lhs,
    sup_norm,
)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
vectors = arrays(np.float64, st.integers(1, 30), elements=finite)
exponents = st.floats(min_value=1.0, max_value=12.0)


# --- SeqVec ------------------------------------------------------------------


def test_trailing_zeros_ignored():
    a, b = SeqVec([1.0, 2.0]), SeqVec([1.0, 2.0, 0.0, 0.0])
    assert a == b
    assert hash(a) == hash(b)
    assert len({a, b}) == 1
    assert SeqVec([1.0, 2.0]) != SeqVec([1.0, 2.0, 1e-300])


def test_unit_vector_is_one_based():
    e = SeqVec.unit(3)
    assert e.coords.tolist() == [0.0, 0.0, 1.0]
    assert SeqVec.unit(2, 5).support_length() == 2
    with pytest.raises(ValueError):
        SeqVec.unit(0)


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        SeqVec([1.0, float("nan")])
    with pytest.raises(ValueError):
        SeqVec([float("inf")])


def test_immutable_and_padded():
    x = SeqVec([1.0, -2.0])
    with pytest.raises(ValueError):
        x.coords[0] = 5.0
    assert x.padded(4).tolist() == [1.0, -2.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        x.padded(1)


def test_arithmetic_pads():
    assert SeqVec([1.0]) + SeqVec([0.0, 2.0]) == SeqVec([1.0, 2.0])
    assert SeqVec([1.0, 2.0]) - SeqVec([1.0]) == SeqVec([0.0, 2.0])
    assert 2 * SeqVec([1.0, -1.0]) == SeqVec([2.0, -2.0])
    assert -SeqVec([1.0]) == SeqVec([-1.0])


def test_json_round_trip():
    x = SeqVec([0.5, -1.0, 0.0])
    assert x.to_json() == "[0.5, -1.0]"
    assert SeqVec.from_json(x.to_json()) == x
    with pytest.raises(ValueError):
        SeqVec.from_json('{"a": 1}')


# --- exponents ---------------------------------------------------------------


def test_exponent_range():
    assert check_exponent(1.0) == 1.0
    with pytest.raises(ValueError):
        check_exponent(1.0, strict=True)
    with pytest.raises(ValueError):
        check_exponent(0.5)
    with pytest.raises(ValueError):
        check_exponent(2e6)
    assert conjugate(2.0) == 2.0
    assert conjugate(3.0) == pytest.approx(1.5)


# --- norms -------------------------------------------------------------------


@pytest.mark.parametrize("x, r, expected", [
    ([3.0, 4.0], 2.0, 5.0),
    (SeqVec.unit(7), 3.3, 1.0),
    ([1.0, 1.0], 1.0, 2.0),
    ([], 2.0, 0.0),
])
def test_norm_examples(x, r, expected):
    assert norm(x, r) == pytest.approx(expected, abs=1e-15)


def test_norm_survives_huge_entries():
    assert norm([1e200, 1e200], 2.0) == pytest.approx(math.sqrt(2) * 1e200)
    assert norm([1e-200, 1e-200], 4.0) == pytest.approx(2 ** 0.25 * 1e-200)


@pytest.mark.parametrize("x, expected", [([1.0, -5.0, 2.0], 5.0), ([], 0.0), (SeqVec.unit(3), 1.0)])
def test_sup_norm_examples(x, expected):
    assert sup_norm(x) == expected


@given(vectors, st.floats(-50, 50), exponents)
def test_norm_homogeneity(x, c, r):
    assert norm(c * x, r) == pytest.approx(abs(c) * norm(x, r), rel=1e-10, abs=1e-12)


@given(vectors, exponents)
def test_norm_pow_matches(x, r):
    assert norm_pow(x, r) == pytest.approx(norm(x, r) ** r, rel=1e-9, abs=1e-300)


# --- rearrangement -----------------------------------------------------------


@pytest.mark.parametrize("x, expected", [
    ([0.0, -3.0, 1.0, 2.0], [3.0, 2.0, 1.0, 0.0]),
    ([4.0, 2.0, 2.0, 0.5], [4.0, 2.0, 2.0, 0.5]),
    ([1.0, 1.0, -1.0], [1.0, 1.0, 1.0]),
])
def test_rearrange_examples(x, expected):
    out = rearrange(x)
    assert out.coords.tolist() == expected
    assert len(out) == len(x)


@given(vectors, exponents)
def test_rearrange_preserves_norms_and_is_idempotent(x, r):
    s = rearrange(x)
    assert norm(s, r) == pytest.approx(norm(x, r), rel=1e-12, abs=1e-300)
    assert rearrange(s) == s
    assert np.all(np.diff(s.coords) <= 0)
    assert sorted(np.abs(x).tolist()) == sorted(s.coords.tolist())


# --- duality map -------------------------------------------------------------


@pytest.mark.parametrize("y, r, expected", [
    ([2.0, -3.0], 2.0, [2.0, -3.0]),
    ([4.0, -9.0], 1.0, [1.0, -1.0]),
    ([2.0, 0.0, -2.0], 3.0, [4.0, 0.0, -4.0]),
    ([0.0, 5.0], 1.0, [0.0, 1.0]),
])
def test_duality_map_examples(y, r, expected):
    assert duality_map(y, r).coords.tolist() == expected


@given(vectors, exponents)
def test_duality_pairing(y, r):
    j = duality_map(y, r)
    pairing = float(np.dot(j.coords, y))
    assert pairing == pytest.approx(norm(y, r) ** r, rel=1e-9, abs=1e-9)


# --- phi ---------------------------------------------------------------------


@pytest.mark.parametrize("X", [5.0, -10.0, 0.0, 0.5, 1.5, 1e12, -1e150])
def test_phi_two_is_two(X):
    assert phi(2.0, X) == pytest.approx(2.0, abs=1e-12)


def test_phi_three_at_hundred():
    # exact rational value |100^3 - 99^3 - 1| / 99^2
    exact = Fraction(100 ** 3 - 99 ** 3 - 1, 99 ** 2)
    assert phi(3.0, 100.0) == pytest.approx(float(exact), rel=1e-13)
    assert abs(phi(3.0, 100.0) - 3.0) < 0.05


def test_phi_rejects_one():
    with pytest.raises(ValueError):
        phi(2.5, 1.0)
    with pytest.raises(ValueError):
        phi(1.0, 3.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(-300, 300), st.floats(1.05, 6.0))
def test_phi_stable_matches_exact_integers(X, r):
    # for moderate integers the naive formula in extended precision is an oracle
    if X == 1:
        return
    num = abs(abs(X) ** r - abs(X - 1) ** r - 1.0)
    naive = num / abs(X - 1) ** (r - 1.0)
    assert phi(r, float(X)) == pytest.approx(naive, rel=1e-7, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(1.01, 5.0), st.floats(0.0, 8.0), st.booleans())
def test_phi_close_to_r_beyond_threshold(r, log_gap, negative):
    x0 = phi_threshold(r)
    X = x0 * 10.0 ** log_gap
    assert abs(phi(r, -X if negative else X) - r) < 0.01


def test_phi_threshold_known_cases():
    assert phi_threshold(2.0) == 2.0
    # the tail is about r(r-1)/(2X), so X0 is near 50 r (r-1)
    for r in (3.0, 4.0):
        assert 0.5 * 50 * r * (r - 1) < phi_threshold(r) < 2 * 50 * r * (r - 1)


# --- splitting bound ---------------------------------------------------------


def test_splitting_constants_r2_exact():
    C, delta = splitting_bound_constants(2.0, 0.5)
    assert C == 2.0
    assert delta == pytest.approx(0.25 + 1.25, abs=1e-15)


@pytest.mark.parametrize("r", [1.5, 2.0, 3.0, 4.0])
@pytest.mark.parametrize("eps", [0.01, 0.1, 0.5])
def test_splitting_bound_on_grid(r, eps):
    C, delta = splitting_bound_constants(r, eps)
    assert C >= r
    X = np.linspace(-1e3, 1e3, 10_000)
    assert np.all(splitting_lhs(r, X) <= C * np.abs(X - 1.0) ** (r - 1.0) + delta)


def test_splitting_bound_r3_points():
    C, delta = splitting_bound_constants(3.0, 0.1)
    for X in (-50.0, 0.0, 0.95, 1.05, 2.0, 50.0):
        lhs = abs(abs(X) ** 3 - abs(X - 1) ** 3 - 1)
        assert lhs <= C * abs(X - 1) ** 2 + delta


def test_splitting_bound_rejects_eps():
    for eps in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            splitting_bound_constants(2.0, eps)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.05, 5.0), st.floats(0.01, 0.9), st.floats(-1e4, 1e4))
def test_splitting_bound_random(r, eps, X):
    C, delta = splitting_bound_constants(r, eps)
    lhs = abs(abs(X) ** r - abs(X - 1) ** r - 1)
    assert lhs <= (C * abs(X - 1) ** (r - 1) + delta) * (1 + 1e-12)


# --- concavity and interpolation --------------------------------------------


@pytest.mark.parametrize("a, b, t", [(1.0, 1.0, 0.5), (0.0, 3.0, 0.3), (3.0, 5.0, 0.7)])
def test_concavity_examples(a, b, t):
    assert concavity_check(a, b, t)


def test_concavity_rejects_bad_input():
    with pytest.raises(ValueError):
        concavity_check(-1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        concavity_check(1.0, 1.0, 1.5)


@given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(0, 1))
def test_concavity_always_true(a, b, t):
    assert concavity_check(a, b, t)


def test_interpolation_examples():
    lhs, rhs = interpolation_bound(SeqVec.unit(1), 2.0, 1.0)
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0)
    lhs, rhs = interpolation_bound([1.0, 1.0], 1.0, 1.0)
    assert lhs == pytest.approx(math.sqrt(2)) and rhs == pytest.approx(math.sqrt(2))
    lhs, rhs = interpolation_bound([1.0, 0.5], 2.0, 2.0)
    assert lhs == pytest.approx((1 + 0.5 ** 4) ** 0.25)
    assert lhs <= rhs


@given(vectors, st.floats(1.0, 8.0), st.floats(0.01, 5.0))
def test_interpolation_bound_holds(x, p, eps):
    lhs, rhs = interpolation_bound(x, p, eps)
    assert lhs <= rhs + 1e-12 * max(1.0, rhs)


# --- helpers -----------------------------------------------------------------


def test_align_sign_and_leading_index():
    assert align_sign([0.1, -0.9]) == SeqVec([-0.1, 0.9])
    assert align_sign([-1.0, 1.0]) == SeqVec([1.0, -1.0])
    assert leading_index([0.0, 1e-20, 3.0]) == 3
    assert leading_index([0.0, 0.0]) == 0


def test_normalize_and_distance():
    x = normalize([3.0, 4.0], 2.0)
    assert norm(x, 2.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        normalize([0.0], 2.0)
    assert distance([1.0], [0.0, 1.0], 2.0) == pytest.approx(math.sqrt(2))
