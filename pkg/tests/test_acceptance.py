"""One test per acceptance criterion; each records a PASS/FAIL line shown in the summary.

Seed 7 throughout, distinct from the calibration seed, so the frozen
constants are checked on cases they were not fitted to.
"""
import io
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oscsum import calibration
from oscsum.carleson import LambdaGrid, build_psi, carleson_apply, delta_closed_form, ttstar_sweep
from oscsum.circle import RationalPoint, gauss_sum, major_arc_sweep, recovery_identity, vanishing_sweep
from oscsum.cli import main
from oscsum.coeffnorm import (OVER_BUDGET, RATIONAL_BOUND_CONSTANT, check_convexity,
                              check_rational_lower_bound, sample_level_set)
from oscsum.expsum import Amplitude, Progression, exp_sum, small_norm_clause, verify_sum_decay
from oscsum.invthm import InverseCertificate, inverse_verify, vdc_difference
from oscsum.polycore import Poly, index_set

SEED = 7


def record(num, name, ok, detail):
    line = f"[{num:>2}] {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_01_gauss_vanishing_exhaustive_cells():
    t = time.time()
    reports = {}
    for D, d in ((1, 2), (1, 3), (2, 2)):
        reports[(D, d)] = vanishing_sweep(D, d, 20, seed=SEED)
    # D = 2, d = 3 has about 10^9 degenerate A-tuples at Q = 20: enumerate up to a
    # tuple budget, sample (seeded) beyond it, and say so
    reports[(2, 3)] = vanishing_sweep(2, 3, 20, max_tuples=3000, seed=SEED)
    dt = time.time() - t
    ok = all(r.passed for r in reports.values()) and dt < 60
    r23 = reports[(2, 3)]
    sampled = sorted(r23.sampled_Q)
    detail = (f"{sum(r.cases for r in reports.values())} cases, 0 nonzero = "
              f"{all(r.passed for r in reports.values())}, {dt:.1f}s; D=2,d=3 enumerated for "
              f"Q<={max(r23.exhaustive_Q)} except Q in {sampled} (sampled 3000 A-tuples each)")
    record(1, "Gauss-sum vanishing (D,d)=(1,2),(1,3),(2,2) exhaustive; (2,3) partial", ok, detail)
    assert ok


@pytest.mark.xfail(run=False, strict=True,
                   reason="full enumeration of D=2, d=3 degenerate tuples up to Q=20 is ~4e9 "
                          "Gauss sums, far beyond the 60 s budget; sampled coverage is in test_01")
def test_01b_gauss_vanishing_full_enumeration_D2_d3():
    ACCEPTANCE_LINES.append("[ 1] FAIL  (xfail) D=2,d=3 full enumeration to Q=20 not run")
    r = vanishing_sweep(2, 3, 20)
    assert r.passed and r.exhaustive


def test_02_recovery_identity():
    t = time.time()
    bad = n = 0
    for Q in range(1, 13):
        for A in range(Q):
            rp = RationalPoint((A,), None, Q)
            for x in range(-20, 21):
                n += 1
                bad += not recovery_identity(rp, [x]).exact
    dt = time.time() - t
    ok = bad == 0 and dt < 30
    record(2, "recovery identity Q<=12, all A, n in [-20,20]", ok, f"{n} cases, {bad} inexact, {dt:.1f}s")
    assert ok


def test_03_classical_magnitude():
    primes = [q for q in range(3, 51) if all(q % p for p in range(2, q))]
    err = max(abs(abs(gauss_sum(RationalPoint((1,), (0,), q)).value) - q**-0.5) for q in primes)
    ok = err <= 1e-10
    record(3, "|S(1/q,0)| = q^-1/2, odd primes q<=50", ok, f"max error {err:.2e}")
    assert ok


def _random_poly(rng):
    D = int(rng.integers(1, 3))
    d = int(rng.integers(2, 4))
    alphas = index_set(d, D)
    if rng.random() < 1 / 3:
        c = {a: float(rng.random()) for a in alphas}
    else:
        q = int(rng.integers(1, 64))
        w = 10.0 ** -rng.uniform(2, 12)
        c = {a: float((rng.integers(0, q) / q + rng.uniform(-w, w)) % 1.0) for a in alphas}
    return Poly(D, c, d=d)


def test_04_coefficient_norm_convexity():
    rng = np.random.default_rng(SEED)
    t = time.time()
    viol = partial = n = 0
    while n < 1000:
        P = _random_poly(rng)
        if P.is_zero():
            continue
        n += 1
        rep = check_convexity(P, 12, max_Q=2**16)
        viol += not rep.passed
        partial += OVER_BUDGET in rep.levels
    dt = time.time() - t
    ok = viol == 0 and dt < 300
    record(4, "level sets of k -> N_{2^k}(P) are intervals", ok,
           f"{n} polys, {viol} violations, {partial} with levels above Q-budget 2^16, {dt:.1f}s")
    assert ok


def test_05_rational_lower_bound():
    rng = np.random.default_rng(SEED)
    worst, n = math.inf, 0
    while n < 200:
        Q = int(rng.integers(2, 65))
        A = int(rng.integers(1, Q))
        if math.gcd(A, Q) != 1:
            continue
        n += 1
        r = check_rational_lower_bound([A], Q, 1.0, Q * Q)
        worst = min(worst, r.N / Q)
    ok = worst >= RATIONAL_BOUND_CONSTANT
    record(5, "N_R(A/Q n^2) >= Q/4 at R = Q^2", ok, f"{n} rationals, min N/Q = {worst:.3f}")
    assert ok


def test_06_sum_decay():
    t = time.time()
    tab = verify_sum_decay(2, 1, range(1, 15), 2**14, trials=30, seed=SEED, max_draws=20000)
    dt = time.time() - t
    mono = tab.monotone_binned(bin_width=2, inversions_allowed=1)
    full = all(r["trials"] >= 30 for r in tab.rows)
    ok = tab.theta_hat is not None and tab.theta_hat >= 0.05 and mono and full and dt < 600
    record(6, "max|sum| decays in s (d=2, R=2^14)", ok,
           f"theta_hat = {tab.theta_hat:.3f} +- {tab.theta_stderr:.3f}, binned monotone = {mono}, "
           f"30 samples per level = {full}, {dt:.1f}s")
    assert ok


def test_07_small_norm_clause():
    rng = np.random.default_rng(SEED)
    worst, n = 0.0, 0
    while n < 1000:
        d = int(rng.integers(2, 4))
        R = 2 ** int(rng.integers(4, 10))
        s = int(rng.integers(-6, 1))
        P = sample_level_set(d, 1, R, s, rng, max_draws=2000)
        if P is None:
            continue
        gap = int(rng.integers(1, 4))
        start = int(rng.integers(1, R + 1))
        count = int(rng.integers(1, (R - start) // gap + 2))
        prog = Progression((start,), (gap,), (count,), (R,))
        b = float(rng.uniform(-1, 1))
        phi = None if n % 2 else Amplitude.modulated(1 / (1 + 2 * math.pi * abs(b)), 0.0, [b], [R])
        if phi is not None:
            assert phi.certificate(prog, R)["normalized"]
        worst = max(worst, small_norm_clause(P, 1, prog, phi, R).ratio)
        n += 1
    ok = worst <= 4
    record(7, "|sum - mean(phi)| <= 4 N_R(P) when N_R(P) <= 1", ok, f"{n} cases, max ratio {worst:.3f}")
    assert ok


def test_08_sublevel_lemmas():
    small = calibration.sublevel_small_suite(100, SEED)
    large = calibration.sublevel_large_suite(100, SEED)
    kappa0 = calibration.large_norm_kappa0(SEED)
    cs, cl = calibration.frozen_bound("sublevel_small"), calibration.frozen_bound("sublevel_large")
    ok = max(small) <= cs and max(large) <= cl and min(kappa0) > 0
    record(8, "sublevel counts <= frozen constant x RHS; kappa0 > 0", ok,
           f"small {max(small):.3f} <= {cs}, large {max(large):.3f} <= {cl}, "
           f"kappa0 fits {min(kappa0):.2f}..{max(kappa0):.2f}")
    assert ok


def test_09_van_der_corput():
    ratios = calibration.vdc_suite(1000, SEED)
    alt = vdc_difference(0.5 * np.arange(1000), 10).lhs
    c = calibration.frozen_bound("vdc")
    ok = max(ratios) <= c and alt == 0.0
    record(9, "van der Corput two-sided ratio", ok,
           f"1000 phases, max ratio {max(ratios):.4f} <= {c}; alternating phase lhs = {alt}")
    assert ok


def test_10_inverse_round_trip():
    rng = np.random.default_rng(SEED)
    prog = Progression.full_box(10**4, 1)
    delta, bound = 0.1, 0.1**-6
    t = time.time()
    found = n = exact = exact_ok = 0
    while n < 100:
        q = int(rng.integers(1, 40))
        a = int(rng.integers(0, q))
        if math.gcd(a, q) != 1:
            continue
        is_exact = n % 4 == 0
        if is_exact:
            P = Poly(1, {(1,): Fraction(int(rng.integers(0, q)), q), (2,): Fraction(a, q)})
        else:
            P = Poly(1, {(1,): float(rng.random()) * 1e-5, (2,): a / q + float(rng.uniform(-1, 1)) * 1e-9})
        val = exp_sum(P, 1, prog).value
        if abs(val) < delta:
            continue
        n += 1
        r = inverse_verify(P, prog, delta, 6, sum_value=val)
        good = (isinstance(r, InverseCertificate) and r.Q <= bound
                and max(r.defects.values(), default=0.0) <= bound and r.check(P, prog.box))
        found += good
        if is_exact:
            exact += 1
            exact_ok += good and r.Q == q
    dt = time.time() - t
    ok = found == n and exact_ok == exact and dt < 300
    record(10, "inverse theorem round trip (delta=0.1, N=10^4)", ok,
           f"{found}/{n} certificates, {exact_ok}/{exact} exact cases recover q, {dt:.1f}s")
    assert ok


def test_11_ttstar_schur_decay():
    t = time.time()
    k = 8
    r = ttstar_sweep(k, range(2, 11), d=2, n_rows=64, pool=64, seed=SEED, max_draws=20000)
    dt = time.time() - t
    fam = build_psi(1, k)
    l1_sq = float(np.sum(np.abs(fam.lattice(k)[1]))) ** 2   # trivial bound for any column sum
    good = [row for row in r.rows if not row["empty"]]
    empty = [row["s"] for row in r.rows if row["empty"]]
    ok = (r.c0 is not None and r.c0 > 0 and all(row["col_sup"] <= l1_sq for row in good)
          and dt < 900)
    record(11, "TT* Schur sums at 2^k = 2^8", ok,
           f"c0 = {r.c0:.3f}, column sup <= {r.col_sup_max:.3f} (bound |psi_k|_1^2 = {l1_sq:.3f}), "
           f"empty levels {empty} (level cannot exceed 2^k by Dirichlet), {dt:.1f}s")
    assert ok


def test_12_carleson_grid_sanity():
    fam = build_psi(1, 10)
    box = 2**10
    f = np.zeros(box + 1)
    f[box // 2] = 1.0
    r = carleson_apply(f, fam, LambdaGrid.uniform(2, 1, 4))
    pts = (np.arange(box + 1) - box // 2)[:, None]
    err = float(np.max(np.abs(r.values - delta_closed_form(fam, pts))))
    rng = np.random.default_rng(SEED)
    steps = []
    for _ in range(3):
        g = rng.standard_normal(box)
        grid = LambdaGrid.uniform(2, 1, 4)
        prev = carleson_apply(g, fam, grid).l2_ratio(g)
        for _ in range(5):
            grid = grid.refine()
            cur = carleson_apply(g, fam, grid).l2_ratio(g)
            steps.append(abs(cur / prev - 1))
            prev = cur
    ok = err <= 1e-10 and max(steps) <= 0.10
    record(12, "Carleson grid sup: delta input and grid doubling", ok,
           f"delta closed-form error {err:.1e}; l2 ratio change per doubling (4->128) max {max(steps):.3f}")
    assert ok


def test_13_major_arc_approximation():
    t = time.time()
    r = major_arc_sweep(range(6, 13), A0=4.0, rho=0.1, seed=SEED)
    dt = time.time() - t
    errs = [row["max_error"] for row in r.rows]
    fitted = r.rate is not None and r.rate > 0
    ok = r.monotone_pairs >= 5
    record(13, "major-arc approximation error decreasing in j", ok,
           f"errors {errs[0]:.1e} -> {errs[-1]:.1e}, {r.monotone_pairs}/{r.pairs} decreasing steps, "
           f"fitted rate {'%.3f' % r.rate if r.rate is not None else 'none'} (positive: {fitted}), {dt:.1f}s")
    assert ok


CLI_RUNS = [
    ["coeffnorm", "--poly", "{(2):0.5}", "--R", "4"],
    ["expsum", "--poly", "{(2):0.123,(3):0.01}", "--N", "500"],
    ["sublevel", "--poly", "{(2):1/3}", "--R", "8"],
    ["gauss", "--Q", "7", "--A", "3", "--table", "--format", "csv"],
    ["recovery", "--Q", "5", "--A", "2", "--n", "7"],
    ["multiplier", "--j", "5", "--poly", "{(2):0.01}", "--beta", "0.1"],
    ["carleson", "--box", "128", "--j-max", "5", "--grid", "8"],
    ["schur", "--k", "4", "--s", "1,2,3", "--rows", "8", "--pool", "8"],
    ["invtest", "--poly", "{(2):3/7}", "--N", "10000", "--delta", "0.1"],
    ["vdc", "--poly", "{(2):0.001}", "--L", "300", "--H", "9"],
    ["condense", "--alpha0", "1/7", "--N", "1000", "--H", "multiples:7"],
    ["rescale", "--N", "60,40", "--K", "2", "--target", "0.25"],
    ["calibrate", "--suite", "vdc,condense"],
]


def test_14_cli_determinism():
    bad = []
    for argv in CLI_RUNS:
        outs = set()
        for threads in (1, 2, 8):
            for _ in range(2):
                buf = io.StringIO()
                code = main(argv + ["--seed", "11", "--threads", str(threads)], stdout=buf)
                assert code == 0, argv
                outs.add(buf.getvalue())
        if len(outs) != 1:
            bad.append(argv[0])
    ok = not bad
    record(14, "CLI output byte-identical across reruns and 1/2/8 threads", ok,
           f"{len(CLI_RUNS)} commands x 6 runs, differing: {bad or 'none'}")
    assert ok
