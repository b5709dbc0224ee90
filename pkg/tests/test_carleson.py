import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oscsum.carleson import (LambdaGrid, build_psi, carleson_apply, classify_level,
                             cz_norm_estimate, delta_closed_form, error_op_norm, kernel_rows,
                             read_grid, schur_rows, split_As_Ek, ttstar_kernel, ttstar_sweep,
                             write_grid)
from oscsum.errors import DomainError, PreconditionError
from oscsum.polycore import Poly


@pytest.fixture(scope="module")
def fam():
    return build_psi(1, 8)


def test_pieces_sum_to_kernel(fam):
    x = np.arange(2, 2**7 + 1)[:, None].astype(float)
    # away from the inner and outer transition regions the pieces telescope to K
    assert np.max(np.abs(fam.sum_on_lattice(x) - 1 / (2 * x[:, 0]))) < 1e-15


def test_pieces_odd_and_supported(fam):
    x = np.arange(-300, 301)[:, None].astype(float)
    for j in range(1, 9):
        v = fam.psi(j, x)
        assert np.allclose(v, -v[::-1], atol=0)
        assert np.all(v[np.abs(x[:, 0]) > 2**j] == 0)
        assert np.all(v[np.abs(x[:, 0]) < 2 ** (j - 2)] == 0)


def test_certificates_recorded(fam):
    c = fam.certificates[4]
    assert abs(c["mean"]) < 1e-12 and c["sup"] > 0


def test_user_kernel_bound_enforced():
    K = lambda x: 5.0 / x[:, 0]
    with pytest.raises(PreconditionError):
        build_psi(1, 4, kernel=K, cz_bound=1.0)
    with pytest.raises(DomainError):
        build_psi(1, 4, kernel=K)
    fam = build_psi(1, 4, kernel=lambda x: 0.1 / np.abs(x[:, 0]), cz_bound=10.0, odd=False)
    assert abs(fam.certificates[3]["mean"]) < 1e-8
    assert cz_norm_estimate(lambda x: 1 / (2 * x[:, 0]), 1) < 3


def test_fft_matches_direct(fam):
    rng = np.random.default_rng(1)
    f = rng.standard_normal(80)
    g = LambdaGrid.uniform(2, 1, 4)
    a = carleson_apply(f, fam, g, j_max=5, method="fft").values
    b = carleson_apply(f, fam, g, j_max=5, method="direct").values
    assert np.max(np.abs(a - b)) < 1e-12


def test_delta_input_closed_form(fam):
    f = np.zeros(513)
    f[256] = 1.0
    r = carleson_apply(f, fam, LambdaGrid.uniform(2, 1, 4))
    pts = (np.arange(513) - 256)[:, None]
    assert np.max(np.abs(r.values - delta_closed_form(fam, pts))) < 1e-10


def test_grid_refine_is_superset():
    g = LambdaGrid.uniform(3, 1, 4)
    h = g.refine()
    assert {tuple(p) for p in g.points} <= {tuple(p) for p in h.points}
    with pytest.raises(DomainError):
        LambdaGrid.windowed(2, 1, 3).refine()


@given(st.integers(0, 6))
def test_sup_monotone_under_refinement(seed):
    fam = build_psi(1, 5)
    f = np.random.default_rng(seed).standard_normal(64)
    g = LambdaGrid.uniform(2, 1, 3)
    a = carleson_apply(f, fam, g).values
    b = carleson_apply(f, fam, g.refine()).values
    assert np.all(b >= a - 1e-12)


def test_classify_and_split():
    assert classify_level(None, 3, 4) == "stationary"
    assert classify_level(0, 3, 4) == "stationary"
    assert classify_level(2, 3, 4) == "A_2"
    assert classify_level(10, 2, 1) == "error"
    table = [Poly(1, {(2,): c}) for c in (0.0001, 0.31, 0.5)]
    rep = split_As_Ek(table, 8, A0=2)
    assert rep.partition_ok and not rep.interval_violations
    assert sum(rep.counts.values()) == 3 * 8


def test_ttstar_kernel_matches_matrix(fam):
    lams = [Poly(1, {(2,): 0.1 * (i % 7)}) for i in range(40)]
    K = kernel_rows(lams, 3, fam)
    T = K @ K.conj().T
    x, n = 20, 23
    direct = ttstar_kernel(x, n, lambda t: lams[t[0]], lambda t: lams[t[0]], 3, 3, fam)
    assert abs(T[x, n] - direct) < 1e-12


def test_schur_rows():
    A = np.array([[1.0, -2.0], [0.5, 0.0]])
    r = schur_rows(A)
    assert (r.row_sup, r.col_sup) == (3.0, 2.0)
    assert r.norm_bound == pytest.approx(math.sqrt(6))
    assert np.linalg.norm(A, 2) <= r.norm_bound


def test_small_ttstar_sweep_runs():
    r = ttstar_sweep(4, [1, 2, 3], n_rows=8, pool=8, max_draws=5000, seed=2)
    assert len(r.rows) == 3 and r.col_sup_max > 0


def test_error_op_norm_bounded():
    rep = error_op_norm(5, 4, A0=1, trials=2, n_lambda=4, seed=1)
    assert rep.regime == "error" and rep.max_ratio is not None and rep.max_ratio < 4


def test_grid_file_round_trip(tmp_path):
    f = np.arange(12.0).reshape(3, 4)
    p = tmp_path / "f.bin"
    write_grid(str(p), f)
    assert np.array_equal(read_grid(str(p)), f)
    q = tmp_path / "f.json"
    q.write_text('{"data": [1, 2, 3, 4], "shape": [2, 2]}')
    assert read_grid(str(q)).shape == (2, 2)
