"""Complete Gauss sums, their vanishing and recovery identities, the
multipliers m_{j,lambda} and Phi_{j,nu}, the glued approximation L_{j,lambda},
and the diagonal kernel average behind the rare-set density estimate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from ._numeric import csum, cyclotomic_is_zero, expi, expi_rational, frac_mul, mod_powers, ordered_map
from .carleson import DyadicKernelFamily, build_psi
from .coeffnorm import coeff_norm
from .errors import BudgetError, DomainError, PreconditionError
from .expsum import eval_real, fit_decay
from .polycore import Poly, grid_points, index_set

MAX_Q = 1000
EPS0 = 2.0**-10


# rational points ------------------------------------------------------------------------

@dataclass(frozen=True)
class RationalPoint:
    """(A/Q, B/Q) with A indexed by index_set(d, D) and B a D-vector; residues kept mod Q."""

    A: tuple
    B: tuple
    Q: int
    d: int = 2
    D: int = 1

    def __post_init__(self):
        if int(self.Q) < 1:
            raise DomainError("Q must be >= 1")
        Q = int(self.Q)
        alphas = index_set(self.d, self.D)
        A = self.A
        if isinstance(A, Mapping):
            A = tuple(int(A.get(a, 0)) for a in alphas)
        A = tuple(int(a) % Q for a in np.atleast_1d(A))
        if len(A) != len(alphas):
            raise DomainError(f"A needs {len(alphas)} entries for d={self.d}, D={self.D}")
        B = tuple(int(b) % Q for b in np.atleast_1d(self.B)) if self.B is not None else (0,) * self.D
        if len(B) != self.D:
            raise DomainError(f"B needs {self.D} entries")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def alphas(self):
        return index_set(self.d, self.D)

    @property
    def gcd_A(self) -> int:
        return reduce(math.gcd, self.A, self.Q)

    @property
    def gcd_AB(self) -> int:
        return reduce(math.gcd, self.B, self.gcd_A)

    def poly(self) -> Poly:
        from fractions import Fraction
        return Poly(self.D, {a: Fraction(x, self.Q) for a, x in zip(self.alphas, self.A)}, d=self.d)


def _residues(Q: int, D: int) -> np.ndarray:
    return grid_points([range(Q)] * D)


def _phase_table(A: Sequence[int], Q: int, d: int, D: int, pts: np.ndarray) -> np.ndarray:
    """sum_alpha A_alpha pts^alpha mod Q, exactly."""
    out = np.zeros(len(pts), dtype=np.int64)
    for a, alpha in zip(A, index_set(d, D)):
        if a % Q:
            out = (out + (a % Q) * mod_powers(pts, alpha, Q)) % Q
    return out


def gauss_counts(A, Q: int, d: int, D: int, B_list) -> np.ndarray:
    """c[b, k] = #{r in (Q)^D : -(P_{A/Q}(r) + B_b . r) = k/Q mod 1}, as integers."""
    if Q > MAX_Q:
        raise BudgetError(f"Q={Q} exceeds the enumeration budget {MAX_Q}")
    if Q ** (2 * D) > 4 * 10**8:
        raise BudgetError("residue enumeration too large")
    r = _residues(Q, D)
    vA = _phase_table(A, Q, d, D, r)
    B_arr = np.asarray(B_list, dtype=np.int64).reshape(-1, D) % Q
    out = np.zeros((len(B_arr), Q), dtype=np.int64)
    step = max(1, 2**22 // max(1, len(r)))
    for lo in range(0, len(B_arr), step):
        blk = B_arr[lo:lo + step]
        ph = (-(vA[None, :] + blk @ r.T)) % Q
        idx = ph + Q * np.arange(len(blk))[:, None]
        out[lo:lo + step] = np.bincount(idx.ravel(), minlength=len(blk) * Q).reshape(len(blk), Q)
    return out


def counts_value(counts: np.ndarray, Q: int, norm: float) -> np.ndarray:
    """sum_k c_k e(k/Q) / norm for each row."""
    roots = expi_rational(np.arange(Q), Q)
    c = np.atleast_2d(counts)
    vals = np.array([csum(row * roots) for row in c]) / norm
    return vals


@dataclass
class GaussValue:
    value: complex
    exact_zero: bool
    counts: tuple

    def __abs__(self):
        return abs(self.value)


def gauss_sum(rp: RationalPoint) -> GaussValue:
    """S(A/Q, B/Q) = Q^-D sum_r e(-P_{A/Q}(r) - B.r/Q), from exact phase counts."""
    c = gauss_counts(rp.A, rp.Q, rp.d, rp.D, [rp.B])
    zero = bool(cyclotomic_is_zero(c)[0])
    val = 0j if zero else complex(counts_value(c, rp.Q, rp.Q**rp.D)[0])
    return GaussValue(val, zero, tuple(int(x) for x in c[0]))


def gauss_table(A, Q: int, d: int = 2, D: int = 1, exact: bool = False) -> np.ndarray:
    """S(A/Q, B/Q) for every B in (Q)^D, array of shape (Q,)*D.

    The float route uses an FFT of e(-P_{A/Q}(r)); exact=True uses counts.
    """
    r = _residues(Q, D)
    if exact:
        c = gauss_counts(A, Q, d, D, r)
        vals = counts_value(c, Q, Q**D)
        vals[cyclotomic_is_zero(c)] = 0
        return vals.reshape((Q,) * D)
    vA = _phase_table(A, Q, d, D, r)
    g = expi_rational(-vA, Q).reshape((Q,) * D)
    return np.fft.fftn(g) / Q**D


@dataclass
class VanishingResult:
    value: GaussValue
    should_vanish: bool
    passed: bool


def check_vanishing(rp: RationalPoint) -> VanishingResult:
    if rp.gcd_AB != 1:
        raise PreconditionError(f"gcd(A, B, Q) = {rp.gcd_AB} != 1")
    S = gauss_sum(rp)
    should = rp.gcd_A > 1
    return VanishingResult(S, should, (S.exact_zero if should else True))


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _degenerate_A(Q: int, m: int):
    """All A in (Z/Q)^m with gcd(A, Q) > 1, each listed once (by its smallest prime)."""
    primes = _prime_factors(Q)
    for i, p in enumerate(primes):
        for tup in product(range(0, Q, p), repeat=m):
            if any(math.gcd(reduce(math.gcd, tup, Q), q) > 1 for q in primes[:i]):
                continue
            yield tup


def _count_degenerate(Q: int, m: int) -> int:
    # inclusion-exclusion over the prime divisors
    primes = _prime_factors(Q)
    total = 0
    for mask in range(1, 1 << len(primes)):
        sub = [p for i, p in enumerate(primes) if mask >> i & 1]
        prod_ = math.prod(sub)
        total += (-1) ** (len(sub) + 1) * (Q // prod_) ** m
    return total


@dataclass
class VanishingSweep:
    D: int
    d: int
    Q_max: int
    cases: int = 0
    failures: list = field(default_factory=list)
    exhaustive_Q: list = field(default_factory=list)
    sampled_Q: dict = field(default_factory=dict)

    @property
    def exhaustive(self) -> bool:
        return not self.sampled_Q

    @property
    def passed(self) -> bool:
        return not self.failures


def vanishing_sweep(D: int, d: int, Q_max: int, max_tuples: int | None = None,
                    seed: int = 0, threads: int | None = None) -> VanishingSweep:
    """Exact check S = 0 for every degenerate A (gcd(A,Q) > 1) and every B making (A,B,Q) reduced.

    Cells with more than ``max_tuples`` degenerate A-tuples are sampled
    (seeded) instead of enumerated; the report says which.
    """
    m = len(index_set(d, D))
    rng = np.random.default_rng(seed)
    rep = VanishingSweep(D, d, Q_max)
    for Q in range(2, Q_max + 1):
        r = _residues(Q, D)
        total = _count_degenerate(Q, m)
        if max_tuples is not None and total > max_tuples:
            primes = _prime_factors(Q)
            tuples = set()
            while len(tuples) < max_tuples:
                p = primes[rng.integers(len(primes))]
                tuples.add(tuple(int(x) for x in p * rng.integers(0, Q // p, size=m)))
            tuples = sorted(tuples)
            rep.sampled_Q[Q] = (len(tuples), total)
        else:
            tuples = list(_degenerate_A(Q, m))
            rep.exhaustive_Q.append(Q)

        def one(A, Q=Q, r=r):
            g = reduce(math.gcd, A, Q)
            Bs = r[np.gcd.reduce(np.concatenate([r, np.full((len(r), 1), g)], axis=1), axis=1) == 1]
            if len(Bs) == 0:
                return 0, []
            c = gauss_counts(A, Q, d, D, Bs)
            z = cyclotomic_is_zero(c)
            bad = [(A, tuple(int(x) for x in b), Q) for b in Bs[~z]]
            return len(Bs), bad

        for n, bad in ordered_map(one, tuples, threads):
            rep.cases += n
            rep.failures.extend(bad)
    return rep


# recovery and orthogonality ---------------------------------------------------------------

@dataclass
class RecoveryResult:
    lhs: complex
    rhs: complex
    diff: float
    exact: bool


def recovery_identity(rp: RationalPoint, n) -> RecoveryResult:
    """sum_B S(A/Q,B/Q) e(B.n/Q) against e(-P_{A/Q}(n)); exact comparison via counts."""
    Q, D = rp.Q, rp.D
    n = np.atleast_1d(np.asarray(n, dtype=np.int64)).reshape(1, D)
    r = _residues(Q, D)
    vA = _phase_table(rp.A, Q, rp.d, D, r)
    # phase index over (B, r): -P(r) - B.r + B.n = -P(r) + B.(n - r)
    ph = (-vA[None, :] + r @ ((n % Q) - r).T % Q) % Q
    counts = np.bincount(ph.ravel(), minlength=Q).astype(np.int64)
    target = int(-_phase_table(rp.A, Q, rp.d, D, n % Q)[0] % Q)
    diff_counts = counts.copy()
    diff_counts[target] -= Q**D
    exact = bool(cyclotomic_is_zero(diff_counts[None, :])[0])
    lhs = complex(counts_value(counts[None, :], Q, Q**D)[0])
    rhs = complex(expi_rational(target, Q))
    return RecoveryResult(lhs, rhs, abs(lhs - rhs), exact)


def orthogonality(Q: int, x) -> tuple[complex, bool]:
    """Q^-D sum_B e(B.x/Q), and whether it equals 1{Q | x} exactly."""
    if Q < 1:
        raise DomainError("Q must be >= 1")
    x = np.atleast_1d(np.asarray(x, dtype=np.int64))
    D = len(x)
    r = _residues(Q, D)
    counts = np.bincount((r @ (x % Q)) % Q, minlength=Q).astype(np.int64)
    expect = 1 if np.all(x % Q == 0) else 0
    dc = counts.copy()
    dc[0] -= expect * Q**D
    ok = bool(cyclotomic_is_zero(dc[None, :])[0])
    val = complex(expect) if ok else complex(counts_value(counts[None, :], Q, Q**D)[0])
    return val, ok


# multipliers --------------------------------------------------------------------------------

def _beta_phase(beta, pts) -> np.ndarray:
    out = np.zeros(len(pts))
    for i, b in enumerate(np.atleast_1d(beta)):
        if b:
            out = out + frac_mul(float(b), pts[:, i])
    return out


def multiplier_m(j: int, P: Poly, beta, fam: DyadicKernelFamily) -> complex:
    """m_{j,lambda}(beta) = sum_m psi_j(m) e(-P(m) - beta.m), a direct lattice sum."""
    if j > fam.j_max:
        raise BudgetError(f"family only has pieces up to j={fam.j_max}")
    pts, vals = fam.lattice(j)
    ph = (0 if P.is_zero() else P.phases(pts)) + _beta_phase(beta, pts)
    return csum(vals * expi(-ph))


def cutoff_ok(j: int, nu: Poly, A0: float) -> bool:
    """|nu_alpha| <= j^A0 2^(-j|alpha|) for every coefficient."""
    return all(abs(float(c)) <= j**A0 * 2.0 ** (-j * sum(a)) for a, c in nu.terms())


def _annulus_nodes(fam: DyadicKernelFamily, j: int, variation: float, max_nodes: int):
    """Quadrature nodes/weights on 2^(j-2) <= |t| <= 2^j, panels split at the kinks."""
    D = fam.D
    breaks = [2.0 ** (j - 2), 2.0 ** (j - 1), 2.0**j]
    per = max(64, int(64 * (1 + variation)))
    xg, wg = np.polynomial.legendre.leggauss(16)
    rs, wr = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        panels = max(1, math.ceil(per / 16))
        e = np.linspace(a, b, panels + 1)
        h = np.diff(e) / 2
        mid = (e[:-1] + e[1:]) / 2
        rs.append((mid[:, None] + h[:, None] * xg).ravel())
        wr.append((h[:, None] * wg).ravel())
    rs, wr = np.concatenate(rs), np.concatenate(wr)
    if D == 1:
        pts = np.concatenate([rs, -rs])[:, None]
        w = np.concatenate([wr, wr])
    elif D == 2:
        nth = max(64, int(8 * (1 + variation)))
        nth = 16 * math.ceil(nth / 16)
        th = 2 * np.pi * np.arange(nth) / nth
        R, T = np.meshgrid(rs, th, indexing="ij")
        pts = np.stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()], axis=1)
        w = (wr[:, None] * R * (2 * np.pi / nth)).ravel()
    else:
        raise DomainError("annulus quadrature supports D <= 2")
    if len(w) > max_nodes:
        raise BudgetError(f"quadrature needs {len(w)} nodes > {max_nodes}")
    return pts, w


def multiplier_phi(j: int, nu: Poly, beta, fam: DyadicKernelFamily, A0: float | None = None,
                   max_nodes: int = 2**22) -> complex:
    """Phi_{j,nu}(beta) = int psi_j(t) e(-P_nu(t) - beta.t) dt; with A0 given, the cutoff Phi*."""
    if A0 is not None and not cutoff_ok(j, nu, A0):
        return 0j
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    variation = sum(abs(float(c)) * 2.0 ** (j * sum(a)) for a, c in nu.terms()) \
        + float(np.abs(beta).sum()) * 2.0**j
    pts, w = _annulus_nodes(fam, j, variation, max_nodes)
    ph = eval_real(nu, pts) + pts @ beta
    return csum(w * fam.psi(j, pts) * np.exp(-2j * np.pi * ph))


def centered(x):
    """Representative of x mod 1 in [-1/2, 1/2)."""
    return np.asarray(x, dtype=np.float64) - np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def riemann_defect(j: int, lam: Poly, beta, rp: RationalPoint, fam: DyadicKernelFamily) -> dict:
    """|m_{j,lambda}(beta) - S(A/Q,B/Q) Phi_{j,lambda-A/Q}(beta - B/Q)| and the scale Q*delta."""
    alphas = index_set(rp.d, rp.D)
    lam_vec = [float(lam.coeffs.get(a, 0)) for a in alphas]
    nu_vec = [float(centered(l - a / rp.Q)) for l, a in zip(lam_vec, rp.A)]
    eta_vec = centered(np.atleast_1d(beta) - np.array(rp.B) / rp.Q)
    nu = Poly(rp.D, dict(zip(alphas, nu_vec)), d=rp.d)
    m = multiplier_m(j, lam, beta, fam)
    approx = gauss_sum(rp).value * multiplier_phi(j, nu, eta_vec, fam)
    delta = max([abs(v) * 2.0 ** (j * (sum(a) - 1)) for v, a in zip(nu_vec, alphas)]
                + list(np.abs(eta_vec)) + [2.0**-j])
    return {"m": m, "approx": approx, "defect": abs(m - approx), "Q_delta": rp.Q * delta}


# glued approximation L -------------------------------------------------------------------------

def smooth_profile(t):
    """1 on [0, 1], 0 on [10, inf), order-4 smoothstep in between."""
    u = np.clip((np.asarray(t, dtype=np.float64) - 1.0) / 9.0, 0.0, 1.0)
    step = u**4 * (35 - 84 * u + 70 * u**2 - 20 * u**3)
    return 1.0 - step


def chi_width(s: int, rho: float) -> float:
    return 2.0 ** (-(2.0 ** (10 * rho * s)))


def chi(s: int, eta, rho: float) -> float:
    """Tensor bump: 1 where every |eta_i| <= w_s, 0 once some |eta_i| >= 10 w_s."""
    w = chi_width(s, rho)
    eta = np.abs(np.atleast_1d(eta))
    if w == 0.0:  # window below the smallest double
        return float(np.all(eta == 0))
    return float(np.prod(smooth_profile(eta / w)))


@dataclass
class LReport:
    value: complex
    terms: list          # (s, Q, A, B, contribution)
    unique: bool
    s_range: list
    A0: float
    rho: float

    def to_dict(self) -> dict:
        return {"value": [self.value.real, self.value.imag], "unique": self.unique,
                "n_terms": len(self.terms), "s_range": self.s_range, "A0": self.A0, "rho": self.rho,
                "terms": [{"s": s, "Q": Q, "A": list(A), "B": list(B), "re": c.real, "im": c.imag}
                          for s, Q, A, B, c in self.terms]}


def _candidates_1d(x: float, Q: int, radius: float) -> list[int]:
    """Residues a mod Q with |centered(x - a/Q)| <= radius."""
    if radius >= 0.5:
        return list(range(Q))
    lo, hi = math.floor((x - radius) * Q), math.ceil((x + radius) * Q)
    out = sorted({a % Q for a in range(lo, hi + 1) if abs(centered(x - a / Q)) <= radius})
    return out


def s_levels(j: int, A0: float, s_cap: int = 6) -> list[int]:
    """s >= 1 with 2^s <= j^A0, capped at s_cap."""
    out = []
    s = 1
    while 2.0**s <= j**A0 and s <= s_cap:
        out.append(s)
        s += 1
    return out


def assemble_L(j: int, lam: Poly, beta, fam: DyadicKernelFamily, A0: float = 4.0,
               rho: float = 0.1, s_cap: int = 6, d: int | None = None) -> LReport:
    """L_{j,lambda}(beta) = sum_s sum_{A/Q: Q~2^s} sum_B S Phi* chi_s, with Q~2^s meaning 2^(s-1) <= Q < 2^s."""
    D = fam.D
    d = lam.d if d is None else d
    alphas = index_set(d, D)
    lam_vec = [float(lam.coeffs.get(a, 0)) for a in alphas]
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    terms = []
    levels = s_levels(j, A0, s_cap)
    for s in levels:
        wmax = 10 * chi_width(s, rho)
        for Q in range(2 ** (s - 1), 2**s):
            cand = [_candidates_1d(l, Q, j**A0 * 2.0 ** (-j * sum(a))) for l, a in zip(lam_vec, alphas)]
            Bcand = [_candidates_1d(b, Q, wmax) for b in beta]
            for A in product(*cand):
                if reduce(math.gcd, A, Q) != 1:
                    continue
                nu_vec = [float(centered(l - a / Q)) for l, a in zip(lam_vec, A)]
                nu = Poly(D, dict(zip(alphas, nu_vec)), d=d)
                if not cutoff_ok(j, nu, A0):
                    continue
                table = None
                for B in product(*Bcand):
                    eta_vec = centered(beta - np.array(B) / Q)
                    c = chi(s, eta_vec, rho)
                    if c == 0:
                        continue
                    if table is None:
                        table = gauss_table(A, Q, d, D)
                    S = complex(table[tuple(B)])
                    if abs(S) < 1e-14:
                        continue
                    val = S * multiplier_phi(j, nu, eta_vec, fam) * c
                    terms.append((s, Q, tuple(A), tuple(B), val))
    value = complex(sum(t[4] for t in terms))
    return LReport(value, terms, len(terms) <= 1, levels, A0, rho)


def uniqueness_regime(j: int, A0: float, rho: float, s_cap: int = 6, d: int = 2) -> bool:
    """Parameters where two distinct contributing fractions cannot coexist.

    Distinct A/Q != A'/Q' (or B/Q != B'/Q') differ by at least 1/(Q Q'); the
    regime holds when every pair of windows is narrower than that gap.
    """
    levels = s_levels(j, A0, s_cap)
    if not levels:
        return True
    qmax = 2 ** max(levels) - 1
    lam_win = j**A0 * 2.0 ** (-2 * j)
    if 2 * lam_win >= 1 / qmax**2:
        return False
    for s in levels:
        for t in levels:
            if 10 * (chi_width(s, rho) + chi_width(t, rho)) >= 1 / ((2**s - 1) * (2**t - 1)):
                return False
    return True


def sample_Xj(j: int, d: int, D: int, A0: float, rng: np.random.Generator,
              s_cap: int = 6) -> tuple[Poly, int]:
    """lambda = A/q + nu with q < 2^s_top (so L sees it) and |nu_alpha| <= j^A0 2^(-j|alpha|)."""
    levels = s_levels(j, A0, s_cap)
    q_hi = 2 ** max(levels) - 1 if levels else 1
    q = int(rng.integers(1, q_hi + 1))
    alphas = index_set(d, D)
    vec = []
    for a in alphas:
        w = j**A0 * 2.0 ** (-j * sum(a))
        vec.append(float((rng.integers(0, q) / q + rng.uniform(-w, w)) % 1.0))
    return Poly(D, dict(zip(alphas, vec)), d=d), q


@dataclass
class MajorArcSweep:
    rows: list
    rate: float | None
    rate_stderr: float | None
    monotone_pairs: int
    pairs: int
    unique_violations: int


def major_arc_sweep(j_values: Sequence[int], d: int = 2, D: int = 1, A0: float = 1.0,
                    rho: float = 0.01, n_lambda: int = 6, n_beta: int = 6, seed: int = 0,
                    s_cap: int = 6, threads: int | None = None) -> MajorArcSweep:
    """max over sampled lambda in X_j and beta of |m_{j,lambda}(beta) - L_{j,lambda}(beta)|."""
    fam = build_psi(D, max(j_values))
    rng = np.random.default_rng(seed)
    rows = []
    viol = 0
    for j in j_values:
        jobs = []
        for _ in range(n_lambda):
            lam, q = sample_Xj(j, d, D, A0, rng, s_cap)
            for t in range(n_beta):
                if t % 2 == 0:
                    b = rng.integers(0, q, size=D) / q + rng.uniform(-1, 1, size=D) * 2.0**-j
                else:
                    b = rng.uniform(0, 1, size=D)
                jobs.append((lam, b % 1.0))

        def one(job, j=j):
            lam, b = job
            m = multiplier_m(j, lam, b, fam)
            L = assemble_L(j, lam, b, fam, A0, rho, s_cap, d)
            return abs(m - L.value), L.unique

        res = ordered_map(one, jobs, threads)
        regime = uniqueness_regime(j, A0, rho, s_cap, d)
        if regime:
            viol += sum(1 for _, u in res if not u)
        rows.append({"j": j, "max_error": max(e for e, _ in res), "samples": len(res),
                     "uniqueness_regime": regime})
    js = [r["j"] for r in rows]
    errs = [r["max_error"] for r in rows]
    rate, se = fit_decay(js, errs)
    mono = sum(1 for a, b in zip(errs, errs[1:]) if b <= a)
    return MajorArcSweep(rows, rate, se, mono, max(0, len(errs) - 1), viol)


# diagonal kernel average ---------------------------------------------------------------------

@dataclass
class K0Report:
    Q: int
    averages: np.ndarray
    threshold: float
    density: float
    max_off: float
    norm_A: float
    norm_A2: float
    hypothesis: bool

    def to_dict(self) -> dict:
        return {"Q": self.Q, "threshold": self.threshold, "density": self.density,
                "max_off_exceptional": self.max_off, "N_Q_A": self.norm_A, "N_Q_A2": self.norm_A2,
                "hypothesis_ok": self.hypothesis}


def kernel_K0_density(A, A2, Q: int, d: int = 2, D: int = 1, threshold: float | None = None
                      ) -> K0Report:
    """For every v in (Q)^D: |Q^-D sum_r e(-P_{A/Q}(v + r) + P_{A2/Q}(r))|, exact phase counts."""
    if Q > MAX_Q or Q ** (2 * D) > 4 * 10**8:
        raise BudgetError("residue enumeration too large")
    r = _residues(Q, D)
    s = max(1, math.ceil(math.log2(Q + 1)))
    threshold = 2.0 ** (-s / 4) if threshold is None else threshold
    v2 = _phase_table(A2, Q, d, D, r)
    avgs = np.zeros(len(r))
    roots = expi_rational(np.arange(Q), Q)
    for i, v in enumerate(r):
        vA = _phase_table(A, Q, d, D, (r + v) % Q)
        c = np.bincount((-vA + v2) % Q, minlength=Q)
        avgs[i] = 0.0 if cyclotomic_is_zero(c[None, :])[0] else abs(csum(c * roots)) / Q**D
    big = avgs > threshold
    off = avgs[~big]
    nA = coeff_norm(RationalPoint(A, None, Q, d, D).poly(), Q).value
    nA2 = coeff_norm(RationalPoint(A2, None, Q, d, D).poly(), Q).value
    hyp = min(nA, nA2) >= 2.0 ** (s - 1)
    return K0Report(Q, avgs.reshape((Q,) * D), threshold, float(big.mean()),
                    float(off.max()) if off.size else 0.0, nA, nA2, bool(hyp))
