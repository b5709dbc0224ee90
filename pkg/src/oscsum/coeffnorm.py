"""The scale-dependent coefficient norm N_R(P) = 2^s0.

s0 is the least integer s such that either
  * s <= 0 and  sum_alpha ||lambda_alpha|| R^alpha <= 2^s, or
  * s >= 1 and  some integer 1 <= Q <= 2^s has sum_alpha ||Q lambda_alpha|| R^alpha <= 2^s.
Constant terms are ignored (they never change the size of an exponential sum).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from ._numeric import frac_mul
from .errors import BudgetError, DomainError, PreconditionError
from .polycore import TORUS_TOL, Poly, ScaleVec, torus_norm

REL_TOL = 1e-12
DEFAULT_MAX_Q = 2**24
RATIONAL_BOUND_CONSTANT = 0.25


@dataclass
class CoeffNormResult:
    s0: int | None
    witness_Q: int | None
    residual: float
    zero: bool = False

    @property
    def value(self) -> float:
        return 0.0 if self.zero else 2.0**self.s0

    def to_dict(self) -> dict:
        if self.zero:
            return {"s0": "zero", "witness_Q": None, "residual": 0.0, "N": 0.0}
        return {"s0": self.s0, "witness_Q": self.witness_Q, "residual": self.residual,
                "N": self.value}


class _Defects:
    """Evaluates f(Q) = sum_alpha ||Q lambda_alpha|| R^alpha for blocks of Q."""

    def __init__(self, P: Poly, R: ScaleVec):
        terms = [(a, c) for a, c in P.coeffs.items() if sum(a) > 0]
        self.weights = [R.weight(a) for a, _ in terms]
        self.exact = P.exact and R.is_integral()
        if self.exact:
            cs = [c for _, c in terms]
            self.L = math.lcm(1, *(c.denominator for c in cs))
            self.nums = [(c.numerator * (self.L // c.denominator)) % self.L for c in cs]
            w = [int(x) for x in self.weights]
            self.iweights = w
            if self.L * sum(w) * 2 >= 2**62:
                self.exact_big = True
            else:
                self.exact_big = False
        else:
            self.lams = [float(c) - math.floor(float(c)) for _, c in terms]

    def block(self, q_lo: int, q_hi: int):
        """Values for Q = q_lo..q_hi.  Exact mode returns integers scaled by L."""
        if self.exact:
            Q = np.arange(q_lo, q_hi + 1, dtype=object if self.exact_big else np.int64)
            tot = np.zeros(Q.shape[0], dtype=Q.dtype)
            for num, w in zip(self.nums, self.iweights):
                r = (Q * num) % self.L
                tot = tot + np.minimum(r, self.L - r) * w
            return tot
        Q = np.arange(q_lo, q_hi + 1, dtype=np.float64)
        tot = np.zeros(Q.shape[0])
        for lam, w in zip(self.lams, self.weights):
            f = frac_mul(lam, Q)
            t = np.minimum(f, 1.0 - f)
            t[t < TORUS_TOL] = 0.0
            tot = tot + t * w
        return tot

    def passes(self, values, s: int):
        """values <= 2^s (closed inequality, float boundary within REL_TOL)."""
        if self.exact:
            if s >= 0:
                return values <= self.L * 2**s
            return values * 2 ** (-s) <= self.L
        return values <= 2.0**s * (1.0 + REL_TOL)

    def to_float(self, v) -> float:
        return float(Fraction(int(v), self.L)) if self.exact else float(v)


def coeff_norm(P: Poly, R, max_Q: int = DEFAULT_MAX_Q) -> CoeffNormResult:
    """Exhaustive minimal-s search; ties in Q resolve to the smallest Q."""
    R = ScaleVec.of(R, P.D)
    dfx = _Defects(P, R)
    base = dfx.block(1, 1)[0]
    if base == 0:
        return CoeffNormResult(None, None, 0.0, zero=True)
    s_first = math.ceil(math.log2(dfx.to_float(base)))
    # correct the float log2 at exact powers of two and near-boundary values
    while s_first > -1070 and dfx.passes(np.array([base]), s_first - 1)[0]:
        s_first -= 1
    while not dfx.passes(np.array([base]), s_first)[0]:
        s_first += 1
    if s_first <= 0:
        return CoeffNormResult(s_first, None, dfx.to_float(base))
    # s >= 1 branch: Q = 1 passes at s_first, so the search terminates there.
    vals = [np.array([base], dtype=object if dfx.exact and dfx.exact_big else None)]
    s = 1
    q_top = 1
    while True:
        hi = 2**s
        if hi > max_Q:
            raise BudgetError(f"Q-search beyond budget max_Q={max_Q}")
        vals.append(dfx.block(q_top + 1, hi))
        q_top = hi
        allv = np.concatenate(vals) if len(vals) > 1 else vals[0]
        vals = [allv]
        ok = np.flatnonzero(dfx.passes(allv, s))
        if ok.size:
            q = int(ok[0]) + 1
            return CoeffNormResult(s, q, dfx.to_float(allv[q - 1]))
        s += 1


def defect_sum(P: Poly, R, Q: int) -> float:
    """sum_alpha ||Q lambda_alpha|| R^alpha at a single Q (float)."""
    R = ScaleVec.of(R, P.D)
    dfx = _Defects(P, R)
    return dfx.to_float(dfx.block(Q, Q)[0])


def brute_force_minimality(P: Poly, R, result: CoeffNormResult) -> bool:
    """Independent re-check: no level below s0 admits a witness."""
    R = ScaleVec.of(R, P.D)
    if result.zero:
        if P.exact:
            return all(Fraction(c).denominator == 1 for a, c in P.coeffs.items() if sum(a) > 0)
        return all(float(torus_norm(c)) < TORUS_TOL for a, c in P.coeffs.items() if sum(a) > 0)
    terms = [(a, c) for a, c in P.coeffs.items() if sum(a) > 0]

    def f(Q):
        tot = Fraction(0) if P.exact else 0.0
        for a, c in terms:
            x = Q * c
            t = abs(x - round(x))
            if not P.exact and t < TORUS_TOL:
                t = 0.0
            tot += t * (Fraction(R.weight(a)) if P.exact else R.weight(a))
        return tot

    def le(v, level):
        return v <= Fraction(level) if P.exact else v <= level * (1 + REL_TOL)

    s0 = result.s0
    if s0 <= 0:
        return le(f(1), 2.0**s0) and not le(f(1), 2.0 ** (s0 - 1))
    if not le(f(result.witness_Q), 2.0**s0):
        return False
    if le(f(1), 1.0):
        return False
    for s in range(1, s0):
        if any(le(f(Q), 2.0**s) for Q in range(1, 2**s + 1)):
            return False
    return True


# structural checks -----------------------------------------------------------

@dataclass
class ConvexityReport:
    levels: list                 # s0 (or None for zero) per k
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return asdict(self) | {"passed": self.passed}


OVER_BUDGET = "over"


def level_profile(P: Poly, k_max: int, max_Q: int = DEFAULT_MAX_Q) -> list:
    """s0 at R = 2^k for k = 0..k_max; None for zero, OVER_BUDGET when the Q-search exceeds max_Q."""
    out = []
    for k in range(k_max + 1):
        try:
            r = coeff_norm(P, 2.0**k, max_Q=max_Q)
        except BudgetError:
            # s0 is nondecreasing in R, so every later k is over budget as well
            out.extend([OVER_BUDGET] * (k_max + 1 - k))
            break
        out.append(None if r.zero else r.s0)
    return out


def check_convexity(P: Poly, k_max: int, max_Q: int = DEFAULT_MAX_Q) -> ConvexityReport:
    """Each level {k : N_{2^k}(P) = 2^s} is an interval for s >= 1 and has at most one k for s <= 0.

    Levels beyond the Q budget are unresolved; they all lie above log2(max_Q),
    so contiguity of the resolved levels is still a complete test for them.
    """
    if P.is_zero():
        raise PreconditionError("convexity check needs a nonzero polynomial")
    levels = level_profile(P, k_max, max_Q)
    rep = ConvexityReport(levels)
    by_level: dict = {}
    for k, s in enumerate(levels):
        if s is not None and s != OVER_BUDGET:
            by_level.setdefault(s, []).append(k)
    for s, ks in sorted(by_level.items()):
        if s >= 1 and ks != list(range(ks[0], ks[-1] + 1)):
            rep.violations.append({"level": s, "ks": ks, "kind": "not an interval"})
        if s <= 0 and len(ks) > 1:
            rep.violations.append({"level": s, "ks": ks, "kind": "level <= 0 hit twice"})
    return rep


@dataclass
class RationalBoundReport:
    N: float
    bound: float
    ratio: float
    passed: bool
    s0: int | None
    witness_Q: int | None


def check_rational_lower_bound(A, Q: int, delta: float, R, d: int | None = None,
                               D: int = 1, c: float = RATIONAL_BOUND_CONSTANT
                               ) -> RationalBoundReport:
    """N_R(P) >= c Q^delta for lambda_alpha = A_alpha / Q with R_i >= Q^(1+delta).

    ``A`` is either a map alpha -> numerator or a sequence in index_set order.
    """
    from .polycore import index_set

    Q = int(Q)
    if Q < 1:
        raise DomainError("Q must be positive")
    if isinstance(A, dict):
        coeffs = {(a,) if isinstance(a, int) else tuple(a): int(v) for a, v in A.items()}
        D = len(next(iter(coeffs))) if coeffs else D
    else:
        A = [int(v) for v in np.atleast_1d(A)]
        if d is None:
            d = 2
            while len(index_set(d, D)) < len(A):
                d += 1
        coeffs = dict(zip(index_set(d, D), A))
    if math.gcd(Q, *coeffs.values()) != 1 or all(v % Q == 0 for v in coeffs.values()):
        raise PreconditionError("A/Q must be reduced with some A_alpha nonzero mod Q")
    Rv = ScaleVec.of(R, D)
    need = Q ** (1 + delta)
    if any(r < need * (1 - 1e-12) for r in Rv.radii):
        raise PreconditionError(f"need every R_i >= Q^(1+delta) = {need:.6g}")
    P = Poly(D, {a: Fraction(v, Q) for a, v in coeffs.items()}, d=d)
    res = coeff_norm(P, Rv)
    bound = Q**delta
    N = res.value
    return RationalBoundReport(N, c * bound, N / bound, N >= c * bound, res.s0, res.witness_Q)


@dataclass
class MultiplicativityReport:
    lhs: float
    rhs: float
    literal_rhs: float
    passed: bool


def check_multiplicativity(P: Poly, k: int, R) -> MultiplicativityReport:
    """N(P) <= 2^ceil(log2 k) * max(1, N(kP)).

    The max(1, .) clamp covers the s <= 0 branch of N(kP), where no
    denominator is available: there Q = k itself witnesses N(P) <= 2^ceil(log2 k).
    """
    k = int(k)
    if k < 1:
        raise DomainError("k must be >= 1")
    lhs = coeff_norm(P, R).value
    nk = coeff_norm(P.scale(k), R).value
    factor = 2.0 ** math.ceil(math.log2(k)) if k > 1 else 1.0
    rhs = factor * (max(1.0, nk) if k > 1 else nk)
    return MultiplicativityReport(lhs, rhs, factor * nk, lhs <= rhs)


# level-set sampling ------------------------------------------------------------

def _proposal(alphas, weights, s: int, rng: np.random.Generator, uniform_share: float):
    m = len(alphas)
    if s >= 1 and rng.random() < uniform_share:
        return rng.random(m)
    split = rng.dirichlet(np.ones(m))
    signs = rng.choice([-1.0, 1.0], size=m)
    if s <= 0:
        total = 2.0**s * rng.uniform(0.5, 1.0)
        return (signs * total * split / weights) % 1.0
    top = 2**s
    if rng.random() < 0.5:
        Q0 = int(rng.integers(top // 2 + 1, top + 1))
    else:
        Q0 = int(rng.integers(1, top + 1))
    a = rng.integers(0, Q0, size=m)
    total = 2.0**s * rng.uniform(0.0, 1.0)
    eps = signs * total * split / (weights * Q0)
    return (a / Q0 + eps) % 1.0


def sample_level_set(d: int, D: int, R, s: int, rng: np.random.Generator,
                     max_draws: int = 100_000, uniform_share: float = 0.25) -> Poly | None:
    """Draw P (restricted, degree d) with N_R(P) = 2^s by rejection; None if the budget runs out.

    Proposals mix uniform coefficients with perturbations of rationals whose
    denominators are at most 2^s; acceptance is decided by coeff_norm alone.
    """
    from .polycore import index_set

    alphas = index_set(d, D)
    Rv = ScaleVec.of(R, D)
    weights = np.array([Rv.weight(a) for a in alphas])
    for _ in range(max_draws):
        lam = _proposal(alphas, weights, s, rng, uniform_share)
        P = Poly(D, dict(zip(alphas, lam.tolist())), d=d)
        if P.is_zero():
            continue
        r = coeff_norm(P, Rv)
        if not r.zero and r.s0 == s:
            return P
    return None
