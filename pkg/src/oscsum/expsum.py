"""Exponential sums over progressions, Fejer kernels, sublevel counts and
the continuous-side comparisons (oscillatory integrals, sublevel measures)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._numeric import csum, expi, expi_rational, fsum_real, ordered_map
from .coeffnorm import coeff_norm, sample_level_set
from .errors import BudgetError, DomainError, PreconditionError
from .polycore import Poly, ScaleVec, euclid_coeff_norm, grid_points

DEFAULT_MAX_POINTS = 2**24


# progressions and amplitudes ---------------------------------------------------

@dataclass(frozen=True)
class Progression:
    """P_1 x ... x P_D with P_i = {a_i + t sigma_i : 0 <= t < L_i} inside [-N_i, N_i]."""

    starts: tuple
    gaps: tuple
    counts: tuple
    box: tuple

    def __post_init__(self):
        D = len(self.starts)
        if not (len(self.gaps) == len(self.counts) == len(self.box) == D) or D == 0:
            raise DomainError("progression fields must all have length D >= 1")
        for a, g, n, N in zip(self.starts, self.gaps, self.counts, self.box):
            if g < 1 or n < 1 or N < 1:
                raise DomainError("gaps, counts and box sizes must be >= 1")
            if abs(a) > N or abs(a + (n - 1) * g) > N:
                raise DomainError(f"progression leaves the box [-{N}, {N}]")
        for name in ("starts", "gaps", "counts", "box"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))

    @classmethod
    def interval(cls, N: int, start: int = 1, gap: int = 1, count: int | None = None,
                 box: int | None = None) -> "Progression":
        count = (N - start) // gap + 1 if count is None else count
        return cls((start,), (gap,), (count,), (box or N,))

    @classmethod
    def full_box(cls, N, D: int = 1) -> "Progression":
        """The box (N_1] x ... x (N_D], i.e. 1..N_i on each axis."""
        Ns = (int(N),) * D if np.ndim(N) == 0 else tuple(int(v) for v in N)
        return cls((1,) * len(Ns), (1,) * len(Ns), Ns, Ns)

    @property
    def D(self) -> int:
        return len(self.starts)

    @property
    def size(self) -> int:
        return math.prod(self.counts)

    @property
    def normalization(self) -> float:
        return float(math.prod(self.box))

    def axis_values(self, i: int) -> np.ndarray:
        return self.starts[i] + self.gaps[i] * np.arange(self.counts[i], dtype=np.int64)

    def points(self) -> np.ndarray:
        return grid_points(self.axis_values(i) for i in range(self.D))

    def point_set(self) -> set:
        return set(map(tuple, self.points().tolist()))


@dataclass
class Amplitude:
    """A function on Z^D used as the weight phi(n); evaluated on integer point arrays."""

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = "custom"

    @classmethod
    def constant(cls, c: complex = 1.0) -> "Amplitude":
        return cls(lambda pts: np.full(len(pts), c, dtype=complex), f"constant({c})")

    @classmethod
    def modulated(cls, c: complex, theta: float, b: Sequence[float], R: Sequence[float]
                  ) -> "Amplitude":
        """phi(n) = c e(theta + sum_j b_j n_j / R_j): smooth at scale R."""
        b = np.asarray(b, float)
        R = np.asarray(R, float)

        def fn(pts):
            ph = theta + (np.asarray(pts, float) * (b / R)).sum(axis=1)
            return c * expi(ph)

        return cls(fn, "modulated")

    def __call__(self, pts) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(pts, dtype=np.int64)), dtype=complex)

    def certificate(self, prog: Progression, R) -> dict:
        """sup|phi| + sum_j R_j sup|phi - phi(. - e_j)| over the progression."""
        R = ScaleVec.of(R, prog.D)
        pts = prog.points()
        vals = self(pts)
        sup = float(np.max(np.abs(vals))) if len(vals) else 0.0
        lips = []
        for j in range(prog.D):
            shifted = pts.copy()
            shifted[:, j] -= 1
            diff = np.abs(vals - self(shifted))
            lips.append(R.radii[j] * float(np.max(diff)) if len(diff) else 0.0)
        total = sup + sum(lips)
        return {"sup": sup, "lipschitz": lips, "total": total, "normalized": total <= 1 + 1e-12}


@dataclass
class SumReport:
    value: complex
    n_terms: int
    normalization: float
    order: str = "row-major-lex"
    partitions: int = 1

    def to_dict(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag, "abs": abs(self.value),
                "n_terms": self.n_terms, "normalization": self.normalization,
                "order": self.order, "partitions": self.partitions}


# Fejer kernels ----------------------------------------------------------------

def fejer(K: float, s):
    """(1/K)(1 - |s|/K)_+."""
    if not K > 0:
        raise DomainError("Fejer scale K must be positive")
    s = np.asarray(s, dtype=np.float64)
    out = np.maximum(1.0 - np.abs(s) / K, 0.0) / K
    return float(out) if out.ndim == 0 else out


def fejer_transform(K: int, beta):
    """sum_k mu_K(k) e(k beta), summed directly over |k| < K (real by symmetry)."""
    K = int(K)
    k = np.arange(1, K)
    w = fejer(K, k)
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    out = np.array([1.0 / K + 2.0 * fsum_real(w * np.cos(2 * np.pi * k * b)) for b in beta])
    return out


def fejer_majorant(B: int, beta):
    """(pi^2/4) * sum_k mu_K(k) e(k beta) with K = floor(B/2).

    Dominates the indicator of ||beta|| <= 1/B pointwise: on that set
    K|beta| <= 1/2, and there the Fejer sum is at least (2/pi)^2.
    """
    K = max(1, int(B) // 2)
    return (np.pi**2 / 4.0) * fejer_transform(K, beta)


# sums ---------------------------------------------------------------------------

def _terms(P: Poly, k: int, pts: np.ndarray, phi: Amplitude | None) -> np.ndarray:
    if P.is_zero():
        z = np.ones(len(pts), dtype=complex)
    elif P.exact:
        num, L = P.phase_numerators(pts, k)
        z = expi_rational(num, L)
    else:
        z = expi(P.phases(pts, k))
    if phi is not None:
        z = z * phi(pts)
    return z


def exp_sum(P: Poly, k: int = 1, prog: Progression | None = None,
            phi: Amplitude | None = None, partitions: int = 1,
            normalization: float | None = None, threads: int | None = None,
            max_points: int = DEFAULT_MAX_POINTS) -> SumReport:
    """(1/|R|) sum_{n in prog} e(k P(n)) phi(n), correctly rounded.

    The terms are computed per partition (possibly on worker threads) and
    then added with math.fsum, so the value is independent of the partition
    and thread counts.
    """
    if prog is None:
        raise DomainError("a progression is required")
    if prog.D != P.D:
        raise DomainError(f"progression has D={prog.D}, polynomial has D={P.D}")
    if prog.size > max_points:
        raise BudgetError(f"{prog.size} terms exceed the budget of {max_points}")
    pts = prog.points()
    parts = np.array_split(np.arange(len(pts)), max(1, int(partitions)))
    chunks = ordered_map(lambda idx: _terms(P, k, pts[idx], phi), parts, threads)
    z = np.concatenate(chunks) if chunks else np.zeros(0, complex)
    norm = prog.normalization if normalization is None else float(normalization)
    return SumReport(csum(z) / norm, len(pts), norm, partitions=len(parts))


def amplitude_mean(phi: Amplitude | None, prog: Progression,
                   normalization: float | None = None) -> complex:
    norm = prog.normalization if normalization is None else normalization
    if phi is None:
        return prog.size / norm
    return csum(phi(prog.points())) / norm


@dataclass
class SmallNormReport:
    s: int | None
    deviation: float
    bound_unit: float
    ratio: float


def small_norm_clause(P: Poly, k: int, prog: Progression, phi: Amplitude | None, R
                      ) -> SmallNormReport:
    """|sum - mean(phi)| against N_R(kP) = 2^s when that is <= 1."""
    r = coeff_norm(P.scale(k), R)
    if not r.zero and r.s0 > 0:
        raise PreconditionError("clause applies only when N_R(kP) <= 1")
    val = exp_sum(P, k, prog, phi).value
    dev = abs(val - amplitude_mean(phi, prog))
    unit = 0.0 if r.zero else 2.0**r.s0
    return SmallNormReport(r.s0, dev, unit, dev / unit if unit else (0.0 if dev == 0 else math.inf))


# decay experiment ---------------------------------------------------------------

DECAY_COLUMNS = ("d", "D", "s", "R", "k", "trials", "median_abs", "max_abs", "bound", "ratio")


@dataclass
class DecayTable:
    rows: list
    theta_hat: float | None
    theta_stderr: float | None
    empty_cells: list = field(default_factory=list)
    theta_assumed: float = 0.0

    def monotone_binned(self, k: int = 1, bin_width: int = 2, inversions_allowed: int = 1) -> bool:
        """max|sum| over bins of consecutive s is non-increasing, up to the allowed inversions."""
        by_s = {r["s"]: r["max_abs"] for r in self.rows if r["k"] == k and r["trials"] > 0}
        if not by_s:
            return False
        s_lo = min(by_s)
        bins: dict = {}
        for s, v in by_s.items():
            b = (s - s_lo) // bin_width
            bins[b] = max(bins.get(b, 0.0), v)
        seq = [bins[b] for b in sorted(bins)]
        inv = sum(1 for a, b in zip(seq, seq[1:]) if b > a)
        return inv <= inversions_allowed


def fit_decay(s_values, max_abs) -> tuple[float | None, float | None]:
    """Least squares of log(max|sum|) on -s log 2; returns (theta_hat, stderr)."""
    s = np.asarray(s_values, float)
    y = np.log(np.asarray(max_abs, float))
    ok = np.isfinite(y)
    s, y = s[ok], y[ok]
    if len(s) < 2:
        return None, None
    x = -s * math.log(2.0)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    theta = float(coef[0])
    if len(s) > 2:
        resid = y - A @ coef
        sigma2 = float(resid @ resid) / (len(s) - 2)
        cov = sigma2 * np.linalg.inv(A.T @ A)
        err = float(math.sqrt(max(cov[0, 0], 0.0)))
    else:
        err = None
    return theta, err


def verify_sum_decay(d: int, D: int, s_values, R, trials: int = 30, seed: int = 0,
                     ks=(1,), theta: float | None = None, max_draws: int = 100_000
                     ) -> DecayTable:
    """Sample P on each level N_R(P) = 2^s and tabulate |exp_sum| over the full box."""
    if trials < 1:
        raise DomainError("trials must be positive")
    theta = 1.0 / (2 * d) if theta is None else theta
    rng = np.random.default_rng(seed)
    Rv = ScaleVec.of(R, D)
    prog = Progression.full_box([int(r) for r in Rv.radii], D)
    rows, empty = [], []
    for s in s_values:
        polys = []
        for _ in range(trials):
            P = sample_level_set(d, D, Rv, s, rng, max_draws=max_draws)
            if P is None:
                break
            polys.append(P)
        if not polys:
            empty.append(s)
        for k in ks:
            vals = [abs(exp_sum(P, k, prog).value) for P in polys]
            bound = (abs(k) / 2.0**s) ** theta + sum(r ** (-theta) for r in Rv.radii)
            mx = max(vals) if vals else float("nan")
            rows.append({"d": d, "D": D, "s": s, "R": Rv.radii[0], "k": k, "trials": len(vals),
                         "median_abs": float(np.median(vals)) if vals else float("nan"),
                         "max_abs": mx, "bound": bound, "ratio": mx / bound})
    base = [r for r in rows if r["k"] == ks[0] and r["trials"] > 0 and r["s"] >= 1]
    th, err = fit_decay([r["s"] for r in base], [r["max_abs"] for r in base])
    return DecayTable(rows, th, err, empty, theta)


# sublevel counts ----------------------------------------------------------------

def _lattice_box(R: int, D: int, max_points: int) -> np.ndarray:
    n = (2 * R + 1) ** D
    if n > max_points:
        raise BudgetError(f"(2R+1)^D = {n} lattice points exceed the budget {max_points}; "
                          "use a smaller instance")
    return grid_points([range(-R, R + 1)] * D)


def _min_q_torus(P: Poly, pts: np.ndarray, q_max: int) -> np.ndarray:
    """min_{1<=q<=q_max} ||q P(v)|| for each point."""
    if P.exact:
        num, L = P.phase_numerators(pts)
        best = np.full(len(pts), L, dtype=np.int64)
        for q in range(1, q_max + 1):
            r = (num * q) % L
            best = np.minimum(best, np.minimum(r, L - r))
        return best / float(L)
    x = P.phases(pts)
    best = np.full(len(pts), 0.5)
    for q in range(1, q_max + 1):
        y = (x * q) % 1.0
        best = np.minimum(best, np.minimum(y, 1.0 - y))
    return best


@dataclass
class SublevelReport:
    count: int
    rhs: float
    ratio: float
    N: float
    extra: dict = field(default_factory=dict)


def sublevel_small_norm(P: Poly, R: int, A: int, B: float, theta: float | None = None,
                        max_points: int = DEFAULT_MAX_POINTS) -> SublevelReport:
    """#{|v| <= R : min_{q<=A} ||q P(v)|| <= 1/B} against R^D A (N^-t + B^-t + R^-t)."""
    R = int(R)
    theta = 1.0 / (2 * P.d) if theta is None else theta
    if B < 100 or A < 1:
        raise PreconditionError("need B >= 100 and A >= 1")
    cn = coeff_norm(P, R)
    if cn.zero or cn.value < 2:
        raise PreconditionError("need N_R(P) >= 2")
    N = cn.value
    if A > N**theta * (1 + 1e-12):
        raise PreconditionError(f"need A <= N_R(P)^theta = {N ** theta:.6g}")
    pts = _lattice_box(R, P.D, max_points)
    dist = _min_q_torus(P, pts, int(A))
    count = int(np.count_nonzero(dist <= 1.0 / B + 1e-15))
    rhs = R**P.D * A * (N ** (-theta) + B ** (-theta) + R ** (-theta))
    return SublevelReport(count, rhs, count / rhs, N, {"theta": theta, "A": A, "B": B})


def sublevel_large_norm(P: Poly, R: int, kappa: float, eta: float = 0.5,
                        kappa0_ref: float = 0.2,
                        max_points: int = DEFAULT_MAX_POINTS) -> SublevelReport:
    """#{|v| <= R : min_{q<=R^kappa} ||q P(v)|| <= R^(kappa-1)}.

    Reports count/R^D, the implied kappa0 = -log_R(count/R^D), and the ratio
    count / R^(D - kappa0_ref) used for the frozen-constant assertion.
    """
    R = int(R)
    if not 0 <= kappa < 1:
        raise DomainError("kappa must lie in [0, 1)")
    cn = coeff_norm(P, R)
    if cn.zero or cn.value < R**eta:
        raise PreconditionError(f"need N_R(P) >= R^eta = {R ** eta:.6g}")
    pts = _lattice_box(R, P.D, max_points)
    q_max = int(math.floor(R**kappa + 1e-9))
    dist = _min_q_torus(P, pts, max(q_max, 1))
    count = int(np.count_nonzero(dist <= R ** (kappa - 1.0) + 1e-15))
    frac_ = count / R**P.D
    kappa0 = -math.log(frac_) / math.log(R) if count else math.inf
    rhs = R ** (P.D - kappa0_ref)
    return SublevelReport(count, rhs, count / rhs, cn.value,
                          {"density": frac_, "kappa0": kappa0, "kappa": kappa, "q_max": q_max})


def fit_kappa0(R_values, counts, D: int = 1) -> float:
    """Slope fit of log(count/R^D) against log R; kappa0 = -slope."""
    x = np.log(np.asarray(R_values, float))
    y = np.log(np.asarray(counts, float) / np.asarray(R_values, float) ** D)
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


# continuous side ------------------------------------------------------------------

def _gl_panels(n_nodes: int, a: float = 0.0, b: float = 1.0, order: int = 16):
    panels = max(1, math.ceil(n_nodes / order))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    h = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def eval_real(P: Poly, pts: np.ndarray) -> np.ndarray:
    """P at real points (npts, D), float arithmetic in grlex order."""
    pts = np.asarray(pts, dtype=np.float64)
    out = np.zeros(pts.shape[0])
    for alpha, c in P.coeffs.items():
        mono = np.ones(pts.shape[0])
        for i, a in enumerate(alpha):
            if a:
                mono = mono * pts[:, i] ** a
        out = out + float(c) * mono
    return out


@dataclass
class IntegralReport:
    value: complex
    magnitude: float
    scale: float          # (1 + ||P||)^(-1/d)
    ratio: float
    nodes_per_axis: int


def oscillatory_integral(P: Poly, max_nodes: int = 2**22) -> IntegralReport:
    """|int_{[0,1]^D} e(P(t)) dt| by composite Gauss-Legendre."""
    if P.D > 2:
        raise DomainError("oscillatory_integral supports D <= 2")
    norm = euclid_coeff_norm(P)
    n = int(64 * (1 + norm))
    nodes, w = _gl_panels(n)
    if len(nodes) ** P.D > max_nodes:
        raise BudgetError("quadrature node budget exceeded")
    if P.D == 1:
        pts, ww = nodes[:, None], w
    else:
        pts = np.stack([g.ravel() for g in np.meshgrid(nodes, nodes, indexing="ij")], axis=1)
        ww = np.outer(w, w).ravel()
    val = csum(ww * expi(eval_real(P, pts)))
    d = max(P.d, 1)
    scale = (1.0 + norm) ** (-1.0 / d)
    return IntegralReport(val, abs(val), scale, abs(val) / scale, len(nodes))


@dataclass
class MeasureReport:
    measure: float
    scale: float          # (eps/||P||)^(1/d)
    ratio: float
    resolution: int


def continuous_sublevel(P: Poly, eps: float, resolution: int = 2**10,
                        max_points: int = 2**24) -> MeasureReport:
    """|{t in [0,1]^D : |P(t)| <= eps}| by midpoint-grid counting."""
    norm = euclid_coeff_norm(P)
    if norm <= 0:
        raise PreconditionError("need ||P|| > 0")
    resolution = max(int(resolution), 2**10)
    if resolution**P.D > max_points:
        raise BudgetError("grid budget exceeded")
    axis = (np.arange(resolution) + 0.5) / resolution
    if P.D == 1:
        pts = axis[:, None]
    else:
        pts = np.stack([g.ravel() for g in np.meshgrid(*([axis] * P.D), indexing="ij")], axis=1)
    meas = float(np.count_nonzero(np.abs(eval_real(P, pts)) <= eps)) / len(pts)
    scale = (eps / norm) ** (1.0 / max(P.d, 1))
    return MeasureReport(meas, scale, meas / scale, resolution)
