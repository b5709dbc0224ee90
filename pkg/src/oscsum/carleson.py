"""Dyadic Calderon-Zygmund pieces, the grid-discretized maximally modulated
operator, the oscillatory/error split, and TT* kernels with Schur sums."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Callable, Sequence

import numpy as np

from ._numeric import csum, expi, ordered_map
from .coeffnorm import coeff_norm, level_profile, sample_level_set
from .errors import BudgetError, DomainError, PreconditionError
from .polycore import Poly, grid_points, index_set

KernelFn = Callable[[np.ndarray], np.ndarray]


# the cutoff eta and kernels ---------------------------------------------------------

def smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def eta(t):
    """Radial C^1 cutoff: 1 for t <= 1/2, 0 for t >= 1."""
    return 1.0 - smoothstep(2.0 * np.asarray(t, dtype=np.float64) - 1.0)


def riesz_kernel(D: int) -> KernelFn:
    """x_1 / ((D+1) |x|^(D+1)); for D = 1 this is 1/(2x).

    |x|^D |K| <= 1/(D+1) and |x|^(D+1) |grad K| <= D/(D+1), and K is odd,
    so the Calderon-Zygmund norm is exactly 1.
    """
    def K(x):
        x = np.asarray(x, dtype=np.float64).reshape(-1, D)
        r = np.sqrt((x * x).sum(axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = x[:, 0] / ((D + 1) * r ** (D + 1))
        out[r == 0] = 0.0
        return out

    return K


def _norms(x: np.ndarray) -> np.ndarray:
    return np.sqrt((np.asarray(x, dtype=np.float64) ** 2).sum(axis=1))


def _radial_shell_integral(fn: KernelFn, D: int, r0: float, r1: float, n: int = 2048) -> float:
    """Integral of fn over r0 <= |x| <= r1, for D in {1, 2}."""
    xs, ws = np.polynomial.legendre.leggauss(64)
    edges = np.linspace(r0, r1, max(2, n // 64) + 1)
    rs = ((edges[:-1, None] + edges[1:, None]) / 2 + (np.diff(edges)[:, None] / 2) * xs).ravel()
    wr = ((np.diff(edges)[:, None] / 2) * ws).ravel()
    if D == 1:
        vals = fn(rs[:, None]) + fn(-rs[:, None])
        return float(np.sum(wr * vals))
    if D == 2:
        nth = 256
        th = 2 * np.pi * np.arange(nth) / nth
        R, T = np.meshgrid(rs, th, indexing="ij")
        pts = np.stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()], axis=1)
        vals = fn(pts).reshape(R.shape)
        return float(np.sum(wr[:, None] * R * vals) * (2 * np.pi / nth))
    raise DomainError("annulus quadrature supports D <= 2")


@dataclass
class DyadicKernelFamily:
    """psi_j(x) = K(x) (eta(|x|/2^j) - eta(|x|/2^(j-1))) - c_j b_j(x), j = 1..j_max."""

    D: int
    j_max: int
    kernel: KernelFn
    name: str = "riesz"
    odd: bool = True
    corrections: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)

    def annulus_weight(self, j: int, x) -> np.ndarray:
        r = _norms(np.asarray(x, dtype=np.float64).reshape(-1, self.D))
        return eta(r / 2.0**j) - eta(r / 2.0 ** (j - 1))

    def psi(self, j: int, x) -> np.ndarray:
        """psi_j at real points of shape (n, D)."""
        x = np.asarray(x, dtype=np.float64).reshape(-1, self.D)
        w = self.annulus_weight(j, x)
        out = self.kernel(x) * w
        c = self.corrections.get(j, 0.0)
        if c:
            out = out - c * w / self._bump_mass(j)
        return out

    def _bump_mass(self, j: int) -> float:
        return _radial_shell_integral(lambda x: self.annulus_weight(j, x), self.D,
                                      2.0 ** (j - 2), 2.0**j)

    def support_radius(self, j: int) -> int:
        return 2**j

    def lattice(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """(points, values) of psi_j on the integer lattice, nonzero entries only."""
        return self._lattice_cache[j]

    @cached_property
    def _lattice_cache(self) -> dict:
        out = {}
        for j in range(1, self.j_max + 1):
            r = 2**j
            pts = grid_points([range(-r, r + 1)] * self.D)
            vals = self.psi(j, pts)
            keep = vals != 0
            out[j] = (pts[keep], vals[keep])
        return out

    def lattice_array(self, j: int) -> np.ndarray:
        """psi_j on the cube [-2^j_max, 2^j_max]^D as a dense array (center at the middle)."""
        r = 2**self.j_max
        arr = np.zeros((2 * r + 1,) * self.D)
        pts, vals = self.lattice(j)
        arr[tuple((pts + r).T)] = vals
        return arr

    def sum_on_lattice(self, pts) -> np.ndarray:
        return sum(self.psi(j, pts) for j in range(1, self.j_max + 1))


def _sample_annulus(D: int, r0: float, r1: float, n: int) -> np.ndarray:
    if D == 1:
        t = np.linspace(r0, r1, n)
        return np.concatenate([t, -t])[:, None]
    axis = np.linspace(-r1, r1, n)
    pts = np.stack([g.ravel() for g in np.meshgrid(*([axis] * D), indexing="ij")], axis=1)
    r = _norms(pts)
    return pts[(r >= r0) & (r <= r1)]


def _certificate(fam: DyadicKernelFamily, j: int, n: int) -> dict:
    D = fam.D
    pts = _sample_annulus(D, 2.0 ** (j - 2), 2.0**j, n)
    vals = fam.psi(j, pts)
    h = 2.0**j * 1e-6
    grad2 = np.zeros(len(pts))
    for i in range(D):
        e = np.zeros(D)
        e[i] = h
        g = (fam.psi(j, pts + e) - fam.psi(j, pts - e)) / (2 * h)
        grad2 += g * g
    sup = float(np.max(np.abs(vals)))
    gsup = float(np.sqrt(np.max(grad2)))
    mean = _radial_shell_integral(lambda x: fam.psi(j, x), D, 2.0 ** (j - 2), 2.0**j) \
        if D <= 2 else float("nan")
    return {"sup": sup, "grad_sup": gsup,
            "constant": sup * 2.0 ** (D * j) + gsup * 2.0 ** (D * (j + 1)),
            "support": [2.0 ** (j - 2), 2.0**j], "mean": mean}


def cz_norm_estimate(K: KernelFn, D: int, n: int = 4096) -> float:
    """Sampled estimate of sup|int_annulus K| + sup |x|^D|K| + sup |x|^(D+1)|grad K|."""
    pts = _sample_annulus(D, 0.25, 4.0, n if D == 1 else 257)
    r = _norms(pts)
    size = float(np.max(r**D * np.abs(K(pts))))
    h = 1e-6
    grad2 = np.zeros(len(pts))
    for i in range(D):
        e = np.zeros(D)
        e[i] = h
        g = (K(pts + e) - K(pts - e)) / (2 * h)
        grad2 += g * g
    grad = float(np.max(r ** (D + 1) * np.sqrt(grad2)))
    ann = 0.0
    if D <= 2:
        for r0, r1 in ((0.25, 1.0), (0.5, 4.0), (1.0, 2.0)):
            ann = max(ann, abs(_radial_shell_integral(K, D, r0, r1)))
    return ann + size + grad


def build_psi(D: int = 1, j_max: int = 8, kernel: KernelFn | None = None,
              cz_bound: float | None = None, odd: bool | None = None,
              certificate_samples: int = 2048) -> DyadicKernelFamily:
    """Dyadic pieces of the built-in odd kernel, or of a user kernel with declared CZ bound."""
    if j_max < 1:
        raise DomainError("j_max must be >= 1")
    if kernel is None:
        fam = DyadicKernelFamily(D, j_max, riesz_kernel(D), "riesz", True)
    else:
        if cz_bound is None:
            raise DomainError("a user kernel needs a declared CZ bound")
        measured = cz_norm_estimate(kernel, D)
        if measured > cz_bound * (1 + 1e-6):
            raise PreconditionError(f"kernel CZ norm ~{measured:.4g} exceeds declared {cz_bound}")
        fam = DyadicKernelFamily(D, j_max, kernel, "user", bool(odd))
        if not odd:
            for j in range(1, j_max + 1):
                fam.corrections[j] = _radial_shell_integral(
                    lambda x, j=j: kernel(x) * fam.annulus_weight(j, x), D,
                    2.0 ** (j - 2), 2.0**j)
    n = certificate_samples if D == 1 else 129
    fam.certificates = {j: _certificate(fam, j, n) for j in range(1, j_max + 1)}
    return fam


# lambda grids ----------------------------------------------------------------------

@dataclass
class LambdaGrid:
    """A finite set of coefficient vectors (graded lex order of index_set(d, D))."""

    d: int
    D: int
    points: np.ndarray  # (n_grid, |Gamma|)
    label: str = "grid"

    @classmethod
    def uniform(cls, d: int, D: int, n: int) -> "LambdaGrid":
        m = len(index_set(d, D))
        axis = np.arange(n) / n
        pts = np.array(list(product(axis, repeat=m)), dtype=np.float64).reshape(-1, m)
        return cls(d, D, pts, f"uniform({n})")

    @classmethod
    def windowed(cls, d: int, D: int, k0: int, G: int = 4, center=None, half_width: int = 4
                 ) -> "LambdaGrid":
        """Spacing 2^(-k0 |alpha|)/G per coordinate, 2*half_width+1 points around center."""
        alphas = index_set(d, D)
        center = np.zeros(len(alphas)) if center is None else np.asarray(center, float)
        axes = [center[i] + (2.0 ** (-k0 * sum(a)) / G) * np.arange(-half_width, half_width + 1)
                for i, a in enumerate(alphas)]
        pts = np.array(list(product(*axes)), dtype=np.float64).reshape(-1, len(alphas)) % 1.0
        return cls(d, D, pts, f"windowed(k0={k0},G={G})")

    def refine(self) -> "LambdaGrid":
        """Uniform grids only: n -> 2n, a superset of the current points."""
        if not self.label.startswith("uniform("):
            raise DomainError("refine() is defined for uniform grids")
        n = int(self.label[len("uniform("):-1])
        return LambdaGrid.uniform(self.d, self.D, 2 * n)

    def polys(self) -> list[Poly]:
        return [Poly.from_vector(p.tolist(), self.d, self.D) for p in self.points]


# the operator ---------------------------------------------------------------------------

@dataclass
class CarlesonResult:
    values: np.ndarray
    label: str = "grid lower bound of the supremum"
    grid: str = ""
    j_max: int = 0

    def l2_ratio(self, f) -> float:
        nf = float(np.sqrt(np.sum(np.abs(f) ** 2)))
        return float(np.sqrt(np.sum(self.values**2))) / nf if nf else 0.0


def _modulated_pieces(fam: DyadicKernelFamily, P: Poly, j_max: int) -> np.ndarray:
    """Stack of psi_k(m) e(P(m)) on the cube [-2^j_max, 2^j_max]^D, k = 1..j_max."""
    r = 2**fam.j_max
    shape = (2 * r + 1,) * fam.D
    out = np.zeros((j_max,) + shape, dtype=complex)
    for k in range(1, j_max + 1):
        pts, vals = fam.lattice(k)
        z = vals * (expi(P.phases(pts)) if not P.is_zero() else 1.0)
        out[(k - 1,) + tuple((pts + r).T)] = z
    return out


class _FFTConvolver:
    def __init__(self, box_shape, r: int):
        self.box_shape = tuple(box_shape)
        self.r = r
        self.full = tuple(n + 2 * r for n in self.box_shape)
        self.fshape = tuple(int(2 ** math.ceil(math.log2(n + 2 * r))) for n in self.full)

    def kernel_hat(self, arr):
        axes = tuple(range(-len(self.box_shape), 0))
        return np.fft.fftn(arr, s=self.fshape, axes=axes)

    def apply(self, f_hat, k_hat):
        axes = tuple(range(-len(self.box_shape), 0))
        full = np.fft.ifftn(f_hat * k_hat, axes=axes)
        sl = tuple(slice(self.r, self.r + n) for n in self.box_shape)
        return full[(Ellipsis,) + sl]


def carleson_apply(f, fam: DyadicKernelFamily, grid: LambdaGrid | Sequence[Poly],
                   j_max: int | None = None, method: str = "fft",
                   threads: int | None = None) -> CarlesonResult:
    """x -> max over grid lambda and k0 <= j_max of |sum_{k<=k0} sum_m psi_k(m) e(P(m)) f(x-m)|.

    f lives on the box 0..n_i-1 and is zero outside.
    """
    f = np.asarray(f)
    if f.ndim != fam.D:
        raise DomainError(f"f has {f.ndim} axes, family has D={fam.D}")
    j_max = fam.j_max if j_max is None else min(j_max, fam.j_max)
    polys = grid.polys() if isinstance(grid, LambdaGrid) else list(grid)
    if not polys:
        raise DomainError("empty lambda grid")
    out = _apply_many(f[None, ...], fam, polys, j_max, method, threads)[0]
    label = grid.label if isinstance(grid, LambdaGrid) else f"{len(polys)} polynomials"
    return CarlesonResult(out, grid=label, j_max=j_max)


def carleson_apply_batch(fs, fam, grid, j_max=None, method="fft", threads=None) -> np.ndarray:
    """Same operator on a stack of inputs of identical shape (leading axis = batch)."""
    fs = np.asarray(fs)
    j_max = fam.j_max if j_max is None else min(j_max, fam.j_max)
    polys = grid.polys() if isinstance(grid, LambdaGrid) else list(grid)
    return _apply_many(fs, fam, polys, j_max, method, threads)


def _apply_many(fs, fam, polys, j_max, method, threads):
    box = fs.shape[1:]
    r = 2**fam.j_max
    if method == "fft":
        conv = _FFTConvolver(box, r)
        f_hat = np.fft.fftn(fs, s=conv.fshape, axes=tuple(range(1, fs.ndim)))

        def one(P):
            pieces = np.cumsum(_modulated_pieces(fam, P, j_max), axis=0)
            k_hat = conv.kernel_hat(pieces)
            best = np.zeros(fs.shape)
            for k in range(j_max):
                vals = np.abs(conv.apply(f_hat, k_hat[k][None, ...]))
                np.maximum(best, vals, out=best)
            return best
    elif method == "direct":
        def one(P):
            best = np.zeros(fs.shape)
            acc = np.zeros(fs.shape, dtype=complex)
            pad = np.pad(fs, [(0, 0)] + [(r, r)] * fam.D)
            for k in range(1, j_max + 1):
                pts, vals = fam.lattice(k)
                z = vals * (expi(P.phases(pts)) if not P.is_zero() else 1.0)
                for m, c in zip(pts, z):
                    sl = tuple(slice(r - mi, r - mi + n) for mi, n in zip(m, box))
                    acc = acc + c * pad[(slice(None),) + sl]
                np.maximum(best, np.abs(acc), out=best)
            return best
    else:
        raise DomainError(f"unknown method {method!r}")
    results = ordered_map(one, polys, threads)
    out = results[0]
    for res in results[1:]:
        np.maximum(out, res, out=out)
    return out


def delta_closed_form(fam: DyadicKernelFamily, pts, j_max: int | None = None) -> np.ndarray:
    """max_{k0} |sum_{k<=k0} psi_k(x)|: the operator applied to a point mass at 0."""
    j_max = fam.j_max if j_max is None else j_max
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, fam.D)
    acc = np.zeros(len(pts))
    best = np.zeros(len(pts))
    for k in range(1, j_max + 1):
        acc = acc + fam.psi(k, pts)
        best = np.maximum(best, np.abs(acc))
    return best


# oscillatory / error split -------------------------------------------------------------

@dataclass
class SplitReport:
    classes: list                 # per x: list of (k, class, s) triples
    counts: dict
    interval_violations: list
    partition_ok: bool
    A0: float

    def to_dict(self) -> dict:
        return {"counts": self.counts, "interval_violations": self.interval_violations,
                "partition_ok": self.partition_ok, "A0": self.A0, "classes": self.classes}


def classify_level(s, k: int, A0: float) -> str:
    if s is None or s <= 0:
        return "stationary"
    if 2.0**s <= k**A0:
        return f"A_{s}"
    return "error"


def split_As_Ek(table: Sequence[Poly], k_max: int, A0: float = 4.0) -> SplitReport:
    """Classify each (x, k), 1 <= k <= k_max, by N_{2^k}(P_lambda(x))."""
    classes, counts, viol = [], {"stationary": 0, "oscillatory": 0, "error": 0}, []
    total = 0
    for xi, P in enumerate(table):
        prof = level_profile(P, k_max)
        row = []
        for k in range(1, k_max + 1):
            s = prof[k]
            c = classify_level(s, k, A0)
            row.append((k, c, s))
            counts["oscillatory" if c.startswith("A_") else c] += 1
            total += 1
        classes.append(row)
        by_level: dict = {}
        for k, s in enumerate(prof):
            if s is not None:
                by_level.setdefault(s, []).append(k)
        for s, ks in by_level.items():
            if (s >= 1 and ks != list(range(ks[0], ks[-1] + 1))) or (s <= 0 and len(ks) > 1):
                viol.append({"x": xi, "level": s, "ks": ks})
    ok = sum(counts.values()) == total
    return SplitReport(classes, counts, viol, ok, A0)


# TT* kernels ------------------------------------------------------------------------------

def _as_poly(lam, d: int | None, D: int) -> Poly:
    if isinstance(lam, Poly):
        return lam
    return Poly.from_vector(list(lam), d, D)


def ttstar_kernel(x, n, lam_map, mu_map, k: int, r: int, fam: DyadicKernelFamily,
                  d: int = 2) -> complex:
    """sum_m e(P_lam(x)(x-m) - P_mu(n)(n-m)) psi_k(x-m) psi_r(n-m), by direct summation."""
    D = fam.D
    x = np.atleast_1d(np.asarray(x, dtype=np.int64))
    n = np.atleast_1d(np.asarray(n, dtype=np.int64))
    Pl = _as_poly(lam_map(tuple(x)) if callable(lam_map) else lam_map, d, D)
    Pm = _as_poly(mu_map(tuple(n)) if callable(mu_map) else mu_map, d, D)
    u, vk = fam.lattice(k)           # u = x - m
    w = n - x + u                    # n - m
    vr = fam.psi(r, w)
    keep = vr != 0
    if not np.any(keep):
        return 0j
    u, vk, w, vr = u[keep], vk[keep], w[keep], vr[keep]
    ph = Pl.phases(u) - Pm.phases(w)
    return csum(expi(ph) * vk * vr)


def kernel_rows(lams: Sequence[Poly], k: int, fam: DyadicKernelFamily) -> np.ndarray:
    """Matrix K[x, m] = e(P_lam(x)(x - m)) psi_k(x - m) for x in 0..L-1, m in -2^k..L-1+2^k."""
    L = len(lams)
    if fam.D != 1:
        raise DomainError("kernel_rows is implemented for D = 1")
    rad = 2**k
    u, vk = fam.lattice(k)
    Kmat = np.zeros((L, L + 2 * rad + 1), dtype=complex)
    for xi, P in enumerate(lams):
        z = vk * (expi(P.phases(u)) if not P.is_zero() else 1.0)
        cols = xi - u[:, 0] + rad
        Kmat[xi, cols] = z
    return Kmat


@dataclass
class SchurReport:
    row_sup: float
    col_sup: float
    norm_bound: float

    def to_dict(self) -> dict:
        return {"row_sup": self.row_sup, "col_sup": self.col_sup, "norm_bound": self.norm_bound}


def schur_rows(kernel: np.ndarray, rows=None, cols=None) -> SchurReport:
    """sup_x sum_n |K(x,n)|, sup_n sum_x |K(x,n)| and their geometric mean.

    ``rows``/``cols`` restrict the suprema to interior indices when the
    matrix is a window of an infinite kernel.
    """
    A = np.abs(np.asarray(kernel))
    if A.size == 0:
        return SchurReport(0.0, 0.0, 0.0)
    rs = A.sum(axis=1)
    cs = A.sum(axis=0)
    rs = rs if rows is None else rs[rows]
    cs = cs if cols is None else cs[cols]
    r, c = float(rs.max()), float(cs.max())
    return SchurReport(r, c, math.sqrt(r * c))


def sample_linearizer(L: int, d: int, D: int, k: int, s: int, rng, max_draws: int = 100_000,
                      pool: int | None = None) -> list[Poly] | None:
    """L polynomials on the level N_{2^k}(P) = 2^s (drawn from a pool of that size)."""
    pool = L if pool is None else pool
    polys = []
    for _ in range(pool):
        P = sample_level_set(d, D, 2.0**k, s, rng, max_draws=max_draws)
        if P is None:
            return None
        polys.append(P)
    idx = rng.integers(0, len(polys), size=L)
    return [polys[i] for i in idx]


@dataclass
class TTStarSweep:
    rows: list
    c0: float | None
    col_sup_max: float


def ttstar_sweep(k: int, s_values, d: int = 2, L: int | None = None, n_rows: int = 128,
                 seed: int = 0, pool: int = 256, max_draws: int = 100_000,
                 fam: DyadicKernelFamily | None = None) -> TTStarSweep:
    """Row and column Schur sums of K K* for sampled level-set linearizers (D = 1)."""
    fam = fam or build_psi(1, k)
    rad = 2**k
    L = L or 6 * rad
    rng = np.random.default_rng(seed)
    interior = np.arange(2 * rad, L - 2 * rad)
    pick = interior[np.linspace(0, len(interior) - 1, min(n_rows, len(interior))).astype(int)]
    out = []
    for s in s_values:
        lams = sample_linearizer(L, d, 1, k, s, rng, max_draws, pool)
        if lams is None:
            out.append({"s": s, "empty": True})
            continue
        Kmat = kernel_rows(lams, k, fam)
        row_block = Kmat[pick] @ Kmat.conj().T           # K(x, n) for x in pick, all n
        col_block = Kmat @ Kmat[pick].conj().T           # K(x, n) for all x, n in pick
        rsup = float(np.abs(row_block).sum(axis=1).max())
        csup = float(np.abs(col_block).sum(axis=0).max())
        out.append({"s": s, "empty": False, "row_sup": rsup, "col_sup": csup,
                    "norm_bound": math.sqrt(rsup * csup)})
    good = [r for r in out if not r["empty"]]
    c0 = None
    if len(good) >= 2:
        sv = np.array([r["s"] for r in good], float)
        y = np.log2([r["row_sup"] for r in good])
        c0 = float(-np.polyfit(sv, y, 1)[0])
    return TTStarSweep(out, c0, max((r["col_sup"] for r in good), default=float("nan")))


# single-scale error operator -----------------------------------------------------------------

@dataclass
class ErrorOpReport:
    k: int
    s: int
    A0: float
    ratios: list
    max_ratio: float | None
    regime: str
    empty: bool = False


def error_op_norm(k: int, s: int, A0: float = 4.0, trials: int = 4, n_lambda: int = 16,
                  box: int | None = None, seed: int = 0, d: int = 2,
                  fam: DyadicKernelFamily | None = None, max_draws: int = 20_000,
                  f=None) -> ErrorOpReport:
    """||sup_{lambda in sample} |sum_m e(P(m)) psi_k(m) f(x-m)| ||_2 / ||f||_2 (D = 1)."""
    fam = fam or build_psi(1, k)
    rng = np.random.default_rng(seed)
    regime = "error" if 2.0**s > k**A0 else ("stationary" if s <= 0 else "oscillatory")
    lams = []
    for _ in range(n_lambda):
        P = sample_level_set(d, 1, 2.0**k, s, rng, max_draws=max_draws)
        if P is None:
            break
        lams.append(P)
    if not lams:
        return ErrorOpReport(k, s, A0, [], None, regime, empty=True)
    box = box or 4 * 2**k
    ratios = []
    u, vk = fam.lattice(k)
    for t in range(trials):
        g = rng.standard_normal(box) if f is None else np.asarray(f, float)
        pad = 2**k
        gp = np.pad(g, (pad, pad))
        best = np.zeros(box + 2 * pad)
        for P in lams:
            z = vk * expi(P.phases(u))
            ker = np.zeros(2 * pad + 1, dtype=complex)
            ker[u[:, 0] + pad] = z
            conv = np.convolve(gp, ker, mode="same")
            best = np.maximum(best, np.abs(conv))
        ratios.append(float(np.sqrt(np.sum(best**2)) / np.sqrt(np.sum(g**2))))
        if f is not None:
            break
    return ErrorOpReport(k, s, A0, ratios, max(ratios), regime)


# lattice function files ------------------------------------------------------------------

def write_grid(path: str, f) -> None:
    """Binary grid: int64 D, D int64 extents, then row-major float64 values (little endian)."""
    f = np.asarray(f, dtype="<f8")
    with open(path, "wb") as fh:
        np.asarray([f.ndim, *f.shape], dtype="<i8").tofile(fh)
        f.tofile(fh)


def read_grid(path: str) -> np.ndarray:
    import json
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:1] in (b"{", b"["):
        obj = json.loads(raw.decode("utf-8"))
        data = obj["data"] if isinstance(obj, dict) else obj
        arr = np.asarray(data, dtype=np.float64)
        if isinstance(obj, dict) and "shape" in obj:
            arr = arr.reshape(obj["shape"])
        return arr
    if len(raw) < 8:
        raise DomainError("grid file too short")
    D = int(np.frombuffer(raw[:8], dtype="<i8")[0])
    if not 1 <= D <= 8 or len(raw) < 8 * (1 + D):
        raise DomainError("bad grid header")
    shape = tuple(int(v) for v in np.frombuffer(raw[8:8 * (1 + D)], dtype="<i8"))
    vals = np.frombuffer(raw[8 * (1 + D):], dtype="<f8")
    if vals.size != math.prod(shape):
        raise DomainError("grid data length does not match the header")
    return vals.reshape(shape).copy()
