from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscsum.errors import DomainError
from oscsum.polycore import Poly, ScaleVec, grid_points, index_set, shift_difference, torus_norm


def test_index_set_sizes():
    assert index_set(2, 1) == [(2,)]
    assert index_set(3, 1) == [(2,), (3,)]
    assert len(index_set(2, 2)) == 3
    assert len(index_set(3, 2)) == 7
    assert len(index_set(3, 2, min_degree=1)) == 9


def test_torus_norm_exact_and_float():
    assert torus_norm(Fraction(3, 4)) == Fraction(1, 4)
    assert torus_norm(Fraction(-1, 3)) == Fraction(1, 3)
    assert torus_norm(2.5) == pytest.approx(0.5)
    assert torus_norm(7) == 0


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_torus_norm_range_and_symmetry(x):
    v = float(torus_norm(x))
    assert 0 <= v <= 0.5
    assert v == pytest.approx(float(torus_norm(-x)), abs=1e-9)


def test_poly_rejects_bad_input():
    with pytest.raises(DomainError):
        Poly(0, {})
    with pytest.raises(DomainError):
        Poly(1, {(1, 1): 1.0})
    with pytest.raises(DomainError):
        Poly(1, {(3,): 1.0}, d=2)
    with pytest.raises(DomainError):
        Poly(1, {(1,): 1.0}, restricted=True)


def test_poly_restricted_inference_and_exact():
    P = Poly(1, {(2,): Fraction(1, 3)})
    assert P.restricted and P.exact and P.d == 2
    Q = Poly(1, {(1,): 0.5, (2,): 1.0})
    assert not Q.restricted and not Q.exact


def test_phases_exact_matches_float():
    P = Poly(2, {(2, 0): Fraction(1, 7), (1, 1): Fraction(2, 5), (0, 3): Fraction(3, 11)})
    pts = grid_points([range(-5, 6), range(0, 9)])
    exact = P.phases(pts)
    approx = P.to_float().phases(pts)
    diff = (exact - approx + 0.5) % 1.0 - 0.5
    assert np.max(np.abs(diff)) < 1e-9


def test_json_round_trip():
    P = Poly(2, {(2, 0): Fraction(1, 7), (0, 2): 0.25})
    Q = Poly.from_json(P.to_json())
    assert Q.coeffs == P.coeffs and Q.D == P.D


@given(st.integers(-20, 20), st.lists(st.integers(-50, 50), min_size=3, max_size=3))
def test_shift_difference_identity(h, c):
    P = Poly(1, {(1,): Fraction(c[0], 7), (2,): Fraction(c[1], 5), (3,): Fraction(c[2], 3)})
    dP = shift_difference(P, h, 0)
    for n in range(-4, 5):
        lhs = sum(v * (n + h) ** a[0] for a, v in P.terms()) - sum(v * n ** a[0] for a, v in P.terms())
        rhs = sum((v * n ** a[0] for a, v in dP.terms()), Fraction(0))
        assert lhs == rhs
    assert dP.d == P.d and (P.is_zero() or max((sum(a) for a in dP.alphas()), default=0) < 3)


def test_scalevec():
    R = ScaleVec.of([2, 3], 2)
    assert R.weight((2, 1)) == 12
    with pytest.raises(DomainError):
        ScaleVec.of([1, 2, 3], 2)
