import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscsum.carleson import build_psi
from oscsum.circle import (RationalPoint, assemble_L, check_vanishing, chi, chi_width,
                           cutoff_ok, gauss_sum, gauss_table, kernel_K0_density, multiplier_m,
                           multiplier_phi, orthogonality, recovery_identity, riemann_defect,
                           sample_Xj, uniqueness_regime)
from oscsum.errors import DomainError, PreconditionError
from oscsum.polycore import Poly


def test_small_examples():
    assert gauss_sum(RationalPoint((1,), (1,), 2)).value == pytest.approx(1.0)
    assert abs(gauss_sum(RationalPoint((1,), (0,), 3))) == pytest.approx(3**-0.5, abs=1e-14)
    assert gauss_sum(RationalPoint((5,), (3,), 1)).value == 1


def test_vanishing_example_and_precondition():
    r = check_vanishing(RationalPoint((2,), (1,), 4))
    assert r.should_vanish and r.passed and r.value.exact_zero
    with pytest.raises(PreconditionError):
        check_vanishing(RationalPoint((2,), (2,), 4))


def test_rational_point_validation():
    with pytest.raises(DomainError):
        RationalPoint((1, 2), (0,), 5)
    with pytest.raises(DomainError):
        RationalPoint((1,), (0,), 0)


@given(st.integers(1, 30), st.integers(0, 100))
def test_table_fft_matches_counts(Q, a):
    A = [a % Q]
    fast = gauss_table(A, Q, 2, 1)
    exact = gauss_table(A, Q, 2, 1, exact=True)
    assert np.max(np.abs(fast - exact)) < 1e-10


@given(st.integers(1, 25), st.integers(0, 50), st.integers(0, 50))
def test_parseval(Q, a, b):
    # Parseval: sum_B |S(A/Q, B/Q)|^2 = 1
    vals = gauss_table([a, b], Q, 3, 1)
    assert float(np.sum(np.abs(vals) ** 2)) == pytest.approx(1.0, rel=1e-9)


@given(st.integers(1, 12), st.integers(0, 11), st.integers(-20, 20))
def test_recovery_exact(Q, a, n):
    r = recovery_identity(RationalPoint((a % Q,), None, Q), [n])
    assert r.exact


@given(st.integers(1, 15), st.lists(st.integers(-40, 40), min_size=2, max_size=2))
def test_orthogonality(Q, x):
    v, ok = orthogonality(Q, x)
    assert ok
    assert v == (1 if all(t % Q == 0 for t in x) else 0)


def test_chi_profile():
    w = chi_width(1, 0.1)
    assert chi(1, 0.0, 0.1) == 1.0
    assert chi(1, 0.5 * w, 0.1) == 1.0
    assert chi(1, 11 * w, 0.1) == 0.0
    assert 0.0 <= chi(1, 3 * w, 0.1) <= 1.0
    # width underflow: indicator of 0
    assert chi(200, 0.0, 0.5) == 1.0 and chi(200, 1e-300, 0.5) == 0.0


def test_multiplier_consistency():
    fam = build_psi(1, 8)
    P = Poly(1, {(2,): Fraction(1, 3)})
    m = multiplier_m(6, P, [0.2], fam)
    assert abs(m) < 2
    nu = Poly(1, {(2,): 1e-7})
    assert cutoff_ok(8, nu, 4)
    phi = multiplier_phi(6, nu, [0.01], fam)
    assert abs(phi) < 2


def test_riemann_defect_small():
    fam = build_psi(1, 10)
    rp = RationalPoint((1,), (0,), 3)
    lam = Poly(1, {(2,): Fraction(1, 3) + 1e-9})
    r = riemann_defect(10, lam, [1 / 3 + 1e-5], rp, fam)
    assert r["defect"] < 0.1


def test_assemble_L_reports():
    fam = build_psi(1, 10)
    lam = Poly(1, {(2,): Fraction(1, 3) + 1e-9})
    L = assemble_L(10, lam, [1 / 3], fam, A0=1, rho=0.3)
    m = multiplier_m(10, lam, [1 / 3], fam)
    assert abs(m - L.value) < 0.05


def test_uniqueness_and_sampling():
    assert uniqueness_regime(12, 1, 0.3)
    rng = np.random.default_rng(0)
    P, q = sample_Xj(10, 2, 1, 1.0, rng)
    assert P.d == 2 and q >= 1


def test_K0_density_prime():
    r = kernel_K0_density([1], [2], 31)
    assert float(np.max(r.averages)) == pytest.approx(31**-0.5, rel=1e-9)
