import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscsum.errors import DomainError, PreconditionError
from oscsum.expsum import (Amplitude, Progression, continuous_sublevel, exp_sum, fejer,
                           fit_decay, oscillatory_integral, small_norm_clause,
                           sublevel_large_norm, sublevel_small_norm)
from oscsum.polycore import Poly


def test_progression_validation():
    with pytest.raises(DomainError):
        Progression((-11,), (1,), (3,), (10,))
    with pytest.raises(DomainError):
        Progression((8,), (2,), (3,), (10,))
    p = Progression.interval(10, start=2, gap=3)
    assert p.points()[:, 0].tolist() == [2, 5, 8]


def test_exp_sum_zero_poly_is_density():
    prog = Progression.interval(100, start=1, gap=2)
    assert exp_sum(Poly.zero(1), 1, prog).value == pytest.approx(prog.size / 100)


def test_exp_sum_half_square_vanishes_on_full_period():
    # e(n^2/2) = (-1)^n, 100 terms
    r = exp_sum(Poly(1, {(2,): Fraction(1, 2)}), 1, Progression.full_box(100, 1))
    assert abs(r.value) == 0.0


def test_exp_sum_partition_invariance():
    P = Poly(2, {(2, 0): 0.123, (1, 1): 0.377, (0, 2): 0.91})
    prog = Progression.full_box([40, 30], 2)
    a = exp_sum(P, 3, prog, partitions=1).value
    b = exp_sum(P, 3, prog, partitions=7).value
    assert a == b


@given(st.floats(-50, 50, allow_nan=False))
def test_fejer_nonnegative(s):
    assert fejer(7, s) >= 0


def test_fejer_unit_mass():
    assert math.fsum(fejer(9, k) for k in range(-9, 10)) == pytest.approx(1.0, abs=1e-15)


def test_fit_decay_recovers_rate():
    s = np.arange(1, 10)
    th, err = fit_decay(s, 3 * 2.0 ** (-0.3 * s))
    assert th == pytest.approx(0.3, abs=1e-12)


def test_small_norm_clause_precondition():
    prog = Progression.full_box(64, 1)
    with pytest.raises(PreconditionError):
        small_norm_clause(Poly(1, {(2,): 0.3}), 1, prog, None, 64)


def test_small_norm_clause_holds():
    P = Poly(1, {(2,): 1e-5})
    prog = Progression.full_box(64, 1)
    phi = Amplitude.modulated(1 / (1 + 2 * math.pi * 0.5), 0.0, [0.5], [64])
    assert phi.certificate(prog, 64)["normalized"]
    r = small_norm_clause(P, 1, prog, phi, 64)
    assert r.ratio <= 4


def test_sublevel_reports_and_preconditions():
    P = Poly(1, {(2,): Fraction(1, 3)})
    r = sublevel_small_norm(P, 32, 1, 100)
    assert r.count >= 0 and r.ratio >= 0
    with pytest.raises(PreconditionError):
        sublevel_small_norm(P, 32, 1, 10)
    big = Poly(1, {(2,): 0.37281, (3,): 0.11911})
    assert sublevel_large_norm(big, 256, 0.05).ratio >= 0


def test_oscillatory_integral_and_measure():
    assert oscillatory_integral(Poly(1, {(1,): 100.0}, d=1)).ratio < 10
    m = continuous_sublevel(Poly(1, {(1,): 1.0}, d=1), 0.01, resolution=2**12)
    assert m.ratio < 10
