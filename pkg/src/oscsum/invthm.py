"""Inverse-theorem verifier, van der Corput differencing, Taylor shifts along
progressions, condensation of singularities, progression rescaling, and a
one-pass demonstration of the degree-lowering pipeline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from ._numeric import expi, frac_mul, ordered_map
from .errors import BudgetError, DomainError, PreconditionError
from .expsum import Progression, exp_sum, fejer
from .polycore import Poly, shift_difference, torus_norm

C_MAX_DEFAULT = 6.0
SEARCH_BUDGET = 10**6


def _weight(alpha, N) -> float:
    return float(math.prod(n**a for n, a in zip(N, alpha)))


def _torus_defects(coeff, Qs: np.ndarray) -> np.ndarray:
    """||Q c||_T for an integer array Qs; exact for Fraction c."""
    if isinstance(coeff, Fraction):
        a, b = coeff.numerator % coeff.denominator, coeff.denominator
        if b * int(Qs.max(initial=1)) < 2**62:
            r = (Qs.astype(np.int64) * a) % b
            return np.minimum(r, b - r) / b
        return np.array([float(torus_norm(int(q) * coeff)) for q in Qs])
    f = frac_mul(float(coeff), Qs.astype(np.float64))
    return np.minimum(f, 1.0 - f)


# inverse theorem -----------------------------------------------------------------------

@dataclass
class InverseCertificate:
    Q: int
    defects: dict            # alpha -> ||Q lambda_alpha|| N^alpha
    C_used: float
    bound: float             # delta^-C_used
    sum_abs: float
    notes: list = field(default_factory=list)
    kind: str = "certificate"

    def check(self, P: Poly, N) -> bool:
        """Re-substitute: Q <= bound and each recomputed defect <= bound."""
        if self.Q > self.bound:
            return False
        for alpha, c in P.terms():
            if sum(alpha) == 0:
                continue
            d = float(torus_norm(self.Q * c)) * _weight(alpha, N)
            if d > self.bound * (1 + 1e-12):
                return False
        return True

    def to_dict(self) -> dict:
        return {"kind": self.kind, "Q": self.Q, "C_used": self.C_used, "bound": self.bound,
                "sum_abs": self.sum_abs, "notes": self.notes,
                "defects": {",".join(map(str, a)): v for a, v in self.defects.items()}}


@dataclass
class SmallBox:
    axis: int
    N: int
    C_used: float
    bound: float
    sum_abs: float
    kind: str = "small_box"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "axis": self.axis, "N": self.N, "C_used": self.C_used,
                "bound": self.bound, "sum_abs": self.sum_abs}


@dataclass
class CounterexampleReport:
    best_Q: int
    best_max_defect: float
    C_used: float
    bound: float
    searched: int
    sum_abs: float
    message: str = "constants too small at this scale; not a counterexample to the theorem"
    kind: str = "counterexample_report"

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("kind", "best_Q", "best_max_defect", "C_used",
                                               "bound", "searched", "sum_abs", "message")}


def best_denominator(P: Poly, N, q_max: int, block: int = 2**16) -> tuple[int, float, dict]:
    """Q in 1..q_max minimizing max_alpha ||Q lambda_alpha|| N^alpha (ties to the smaller Q)."""
    terms = [(a, c) for a, c in P.terms() if sum(a) > 0]
    if not terms:
        return 1, 0.0, {}
    best_q, best_v = 1, math.inf
    for lo in range(1, q_max + 1, block):
        Qs = np.arange(lo, min(q_max, lo + block - 1) + 1, dtype=np.int64)
        worst = np.zeros(len(Qs))
        for a, c in terms:
            np.maximum(worst, _torus_defects(c, Qs) * _weight(a, N), out=worst)
        i = int(np.argmin(worst))
        if worst[i] < best_v:
            best_q, best_v = int(Qs[i]), float(worst[i])
        if best_v == 0.0:
            break
    defects = {a: float(torus_norm(best_q * c)) * _weight(a, N) for a, c in terms}
    return best_q, best_v, defects


def inverse_verify(P: Poly, prog: Progression, delta: float, C_max: float = C_MAX_DEFAULT,
                   budget: int = SEARCH_BUDGET, sum_value: complex | None = None):
    """Check the inverse theorem on one instance.

    Returns an InverseCertificate when some Q <= delta^-C_max has all defects
    <= delta^-C_max, else SmallBox if some N_i <= delta^-C_max, else a
    CounterexampleReport.  The certificate is preferred when both apply.
    """
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    if any(g > 1 / delta for g in prog.gaps):
        raise PreconditionError(f"gap sizes {prog.gaps} exceed 1/delta = {1 / delta:g}")
    val = exp_sum(P, 1, prog).value if sum_value is None else sum_value
    if abs(val) < delta:
        raise PreconditionError(f"|sum| = {abs(val):.4g} < delta = {delta}")
    bound = delta ** (-C_max)
    q_max = int(min(math.floor(bound * (1 + 1e-12)), budget))
    N = prog.box
    Q, worst, defects = best_denominator(P, N, q_max)
    notes = []
    if q_max < math.floor(bound):
        notes.append(f"search truncated at budget {q_max}")
    small = [i for i, n in enumerate(N) if n <= bound]
    if worst <= bound:
        if small:
            notes.append("small-box alternative also holds; certificate preferred")
        return InverseCertificate(Q, defects, C_max, bound, abs(val), notes)
    if small:
        return SmallBox(small[0], N[small[0]], C_max, bound, abs(val))
    return CounterexampleReport(Q, worst, C_max, bound, q_max, abs(val))


# van der Corput -------------------------------------------------------------------------

@dataclass
class VdcReport:
    lhs: float
    rhs: float
    ratio: float
    H: int
    length: int

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio, "H": self.H,
                "length": self.length}


def vdc_difference(phases, H: int) -> VdcReport:
    """|avg e(F)|^2 against sum_k mu_H(k) |(1/|I|) sum_{I cap I-k} e(F(n+k) - F(n))| + (H/|I|)^2.

    H = 0 is read as H = 1 (the Fejer weight is then the point mass at 0).
    """
    F = np.asarray(phases, dtype=np.float64)
    L = len(F)
    if not 0 <= H <= L or L == 0:
        raise DomainError("need 0 <= H <= |I| and a nonempty interval")
    H = max(H, 1)
    z = expi(F)
    avg = complex(math.fsum(z.real), math.fsum(z.imag)) / L
    lhs = abs(avg) ** 2
    terms = []
    for k in range(-H + 1, H):
        if k >= 0:
            c = np.vdot(z[: L - k], z[k:])
        else:
            c = np.vdot(z[-k:], z[: L + k])
        terms.append(float(fejer(H, k)) * abs(c) / L)
    rhs = math.fsum(terms) + (H / L) ** 2
    return VdcReport(lhs, rhs, lhs / rhs, H, L)


# Taylor shifts ------------------------------------------------------------------------

def taylor_constant(P: Poly) -> float:
    """sum over non-constant alpha of 2^|alpha| - 1, which makes the shift bound rigorous."""
    return float(sum(2 ** sum(a) - 1 for a, _ in P.terms() if sum(a) > 0))


@dataclass
class TaylorReport:
    deviation: float
    bound: float
    passed: bool
    vacuous: bool
    constant: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def taylor_shift_check(P: Poly, Q: int, Delta: float, t0, M, N, C: float | None = None
                       ) -> TaylorReport:
    """max over l in [M] of ||P(t0 + lQ) - P(t0)||_T against C Delta (sum M_i/N_i) Q^(d-1)."""
    D = P.D
    t0 = np.asarray(np.atleast_1d(t0), dtype=np.int64)
    M, N = [int(v) for v in np.atleast_1d(M)], [int(v) for v in np.atleast_1d(N)]
    if not (len(t0) == len(M) == len(N) == D):
        raise DomainError("t0, M, N must have length D")
    if any(m > n for m, n in zip(M, N)) or any(abs(t) > n for t, n in zip(t0, N)):
        raise DomainError("need M_i <= N_i and |t0_i| <= N_i")
    for alpha, c in P.terms():
        if sum(alpha) == 0:
            continue
        lhs = float(torus_norm(Q * c))
        rhs = Delta / _weight(alpha, N)
        if lhs > rhs * (1 + 1e-9):
            raise PreconditionError(f"||Q lambda|| = {lhs:.3g} > Delta N^-alpha = {rhs:.3g} at alpha={alpha}")
    C = taylor_constant(P) if C is None else C
    mu = sum(m / n for m, n in zip(M, N))
    bound = C * Delta * mu * Q ** (P.d - 1)
    ls = np.stack(np.meshgrid(*[np.arange(1, m + 1) for m in M], indexing="ij"), -1).reshape(-1, D)
    pts = t0[None, :] + Q * ls
    base = P.phases(t0[None, :])[0]
    diff = P.phases(pts) - base
    dev = float(np.max(np.minimum(np.abs(diff - np.round(diff)), 0.5)))
    return TaylorReport(dev, bound, dev <= bound * (1 + 1e-9) + 1e-15, bound >= 0.5, C)


# condensation ------------------------------------------------------------------------------

@dataclass
class CondenseResult:
    q: int | None
    defect: float
    bound: float
    best_q: int
    found: bool
    eps: float
    delta: float
    constant: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def condense(alpha0, H: Sequence[int], N: int, delta: float | None = None, eps=None,
             C: float = 1.0) -> CondenseResult:
    """First q <= ceil(1/delta) with ||q alpha0|| <= C eps q / (delta N).

    Hypotheses (checked): H subset of [1, N], |H| >= delta N, ||n alpha0|| <= eps on H.
    eps defaults to the tight value max_H ||n alpha0||, delta to |H| / N.
    """
    H = sorted(set(int(h) for h in H))
    if not H or H[0] < 1 or H[-1] > N:
        raise PreconditionError("H must be a nonempty subset of [1, N]")
    delta = len(H) / N if delta is None else delta
    if len(H) < delta * N * (1 - 1e-12):
        raise PreconditionError(f"|H| = {len(H)} < delta N = {delta * N:g}")
    tight = max(float(torus_norm(h * alpha0)) for h in H)
    eps = tight if eps is None else eps
    if tight > eps * (1 + 1e-12):
        raise PreconditionError(f"max_H ||n alpha0|| = {tight:.3g} exceeds eps = {eps:.3g}")
    q_hi = math.ceil(1 / delta - 1e-12)
    best_q, best_v = 1, math.inf
    hit = None
    for q in range(1, q_hi + 1):
        v = float(torus_norm(q * alpha0))
        if v / q < best_v:
            best_q, best_v = q, v / q
        if hit is None and v <= C * eps * q / (delta * N) * (1 + 1e-12):
            hit = q
    q = hit
    defect = float(torus_norm((q or best_q) * alpha0))
    bound = C * eps * (q or best_q) / (delta * N)
    return CondenseResult(q, defect, bound, best_q, q is not None, eps, delta, C)


# rescaling ------------------------------------------------------------------------------------

@dataclass
class RescaleResult:
    parts: list                  # sub-progressions
    remainder: np.ndarray        # (n, D) points not covered
    run_lengths: tuple
    remainder_fraction: float


def _axis_runs(start: int, gap: int, count: int, K: int, run: int):
    """Split {start + t gap} by t mod K into runs of `run` consecutive class members."""
    runs, rest = [], []
    for c in range(min(K, count)):
        ts = np.arange(c, count, K)
        full = len(ts) // run
        for b in range(full):
            runs.append((start + int(ts[b * run]) * gap, gap * K, run))
        rest.extend((start + ts[full * run:] * gap).tolist())
    return runs, rest


def rescale(prog: Progression, K: int, target: float, max_remainder: float | None = None
            ) -> RescaleResult:
    """Sub-progressions with gaps sigma_i K and lengths floor(target |P_i|), plus a remainder."""
    if K < 1 or int(K) != K:
        raise DomainError("K must be a positive integer")
    if not 0 < target <= 1:
        raise DomainError("target must lie in (0, 1]")
    lengths = [math.floor(target * n + 1e-9) for n in prog.counts]
    if min(lengths) < 1:
        raise DomainError("target * length < 1: rescaling infeasible")
    axis = [_axis_runs(a, g, n, int(K), r) for a, g, n, r in
            zip(prog.starts, prog.gaps, prog.counts, lengths)]
    parts = [Progression(tuple(r[0] for r in combo), tuple(r[1] for r in combo),
                         tuple(r[2] for r in combo), prog.box)
             for combo in product(*[runs for runs, _ in axis])]
    covered = set()
    for p in parts:
        covered |= p.point_set()
    rem = [pt for pt in map(tuple, prog.points().tolist()) if pt not in covered]
    rem_arr = np.array(rem, dtype=np.int64).reshape(-1, prog.D)
    frac_ = len(rem) / prog.size
    if max_remainder is not None and frac_ > max_remainder:
        raise DomainError(f"remainder fraction {frac_:.3g} exceeds {max_remainder}")
    return RescaleResult(parts, rem_arr, tuple(lengths), frac_)


def is_rescaling(sub: Progression, prog: Progression, delta: float) -> bool:
    """sub inside prog with |sub_i| <= delta |prog_i| and gap_i >= gap_i(prog) / delta."""
    if not sub.point_set() <= prog.point_set():
        return False
    return all(s <= delta * p + 1e-9 and g * delta >= gp - 1e-9 for s, p, g, gp in
               zip(sub.counts, prog.counts, sub.gaps, prog.gaps))


# one pass of the degree-lowering pipeline ------------------------------------------------

@dataclass
class Trace:
    stages: list = field(default_factory=list)
    complete: bool = True
    failed_stage: str | None = None
    result: dict | None = None

    def add(self, name: str, **info):
        self.stages.append({"stage": name, **info})

    def fail(self, name: str, reason: str):
        self.complete = False
        self.failed_stage = name
        self.add(name, status="incomplete", reason=reason)

    def to_dict(self) -> dict:
        return {"complete": self.complete, "failed_stage": self.failed_stage,
                "stages": self.stages, "result": self.result}


def _shorten(prog: Progression, axis: int, h: int) -> Progression | None:
    """prog with axis restricted to P_axis cap (P_axis - h gap_axis)."""
    counts = list(prog.counts)
    counts[axis] -= h
    if counts[axis] < 1:
        return None
    return Progression(prog.starts, prog.gaps, tuple(counts), prog.box)


def induction_demo(P: Poly, prog: Progression, delta: float, C_max: float = C_MAX_DEFAULT,
                   c_shift: float = 0.25, tau: float | None = None, inner_budget: int = 10**4,
                   C_condense: float = 1.0, threads: int | None = None) -> Trace:
    """Difference along the last axis, invert each difference, pigeonhole, condense."""
    if P.D > 2 or P.d > 3:
        raise DomainError("the demonstration supports D <= 2 and d <= 3")
    tr = Trace()
    val = exp_sum(P, 1, prog).value
    if abs(val) < delta:
        raise PreconditionError(f"|sum| = {abs(val):.4g} < delta = {delta}")
    ax = P.D - 1
    sigma = prog.gaps[ax]
    K = max(1, math.floor(c_shift * delta * prog.counts[ax]))
    tau = delta**2 / 2 if tau is None else tau
    tops = [(a, c) for a, c in P.terms() if sum(a) == P.d and a[ax] > 0]
    tr.add("split", top_coefficients=[list(a) for a, _ in tops],
           trivial=(P.D == 1), sum_abs=abs(val), delta=delta, C_max=C_max)
    if not tops:
        tr.fail("split", "no top-degree coefficient involves the last variable")
        return tr

    def one(h):
        sub = _shorten(prog, ax, h)
        if sub is None:
            return h, 0.0, None
        Ph = shift_difference(P, h * sigma, ax)
        v = abs(exp_sum(Ph, 1, sub).value)
        if v < tau:
            return h, v, None
        cert = inverse_verify(Ph, sub, min(tau, 0.5), C_max, budget=inner_budget, sum_value=v)
        return h, v, cert

    res = ordered_map(one, range(1, K + 1), threads)
    weights = [float(fejer(K, h)) for h in range(1, K + 1)]
    tr.add("van_der_corput", K=K, tau=tau, c_shift=c_shift,
           weighted_average=math.fsum(w * v for w, (_, v, _) in zip(weights, res)),
           H_size=sum(1 for _, v, _ in res if v >= tau))
    certs = [(h, c) for h, v, c in res if c is not None and c.kind == "certificate"]
    tr.add("inverse_theorem", attempted=sum(1 for _, v, _ in res if v >= tau),
           certified=len(certs), inner_budget=inner_budget,
           q_values={str(h): c.Q for h, c in certs})
    if not certs:
        tr.fail("inverse_theorem", "no difference polynomial was certified")
        return tr
    buckets: dict = {}
    for h, c in certs:
        buckets.setdefault(c.Q, []).append(h)
    q = min(buckets, key=lambda k: (-len(buckets[k]), k))
    Hp = buckets[q]
    tr.add("pigeonhole", buckets={str(k): len(v) for k, v in sorted(buckets.items())},
           chosen_q=q, H_prime_size=len(Hp))
    out = {}
    for alpha, c in tops:
        a0 = q * c * alpha[ax] * sigma
        cond = condense(a0, Hp, K, C=C_condense)
        qq = cond.q if cond.found else cond.best_q
        Qf = q * qq * alpha[ax] * sigma
        N = prog.box
        out[",".join(map(str, alpha))] = {
            "q_difference": q, "q_condense": qq, "Q": Qf, "found": cond.found,
            "condense_defect": cond.defect, "condense_bound": cond.bound,
            "defect": float(torus_norm(Qf * c)) * _weight(alpha, N)}
        tr.add("condensation", alpha=list(alpha), eps=cond.eps, delta_H=cond.delta,
               q=qq, found=cond.found, constant=C_condense)
        if not cond.found:
            tr.complete = False
            tr.failed_stage = tr.failed_stage or "condensation"
    tr.result = out
    return tr
