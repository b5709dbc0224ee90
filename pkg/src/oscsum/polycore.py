"""Multi-index polynomials, torus arithmetic and Euclidean coefficient norms.

A polynomial is a sparse map from multi-indices (tuples of non-negative ints)
to coefficients.  Coefficients are floats, or ``fractions.Fraction`` in exact
mode.  Terms are always traversed in graded lexicographic order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from numbers import Rational
from typing import Iterable, Mapping

import numpy as np

from ._numeric import frac, frac_mul, int_powers, mod_powers
from .errors import DomainError

MultiIndex = tuple
TORUS_TOL = 1e-12


def degree(alpha: MultiIndex) -> int:
    return sum(alpha)


def leq(beta: MultiIndex, alpha: MultiIndex) -> bool:
    """Componentwise order beta <= alpha."""
    return len(beta) == len(alpha) and all(b <= a for b, a in zip(beta, alpha))


def unit_vector(D: int, axis: int) -> MultiIndex:
    return tuple(1 if i == axis else 0 for i in range(D))


def grlex_key(alpha: MultiIndex):
    return (sum(alpha), tuple(-a for a in alpha))


def index_set(d: int, D: int, min_degree: int = 2) -> list[MultiIndex]:
    """All alpha with min_degree <= |alpha| <= d, in graded lex order."""
    if D < 1 or d < 0:
        raise DomainError("need D >= 1 and d >= 0")
    out = [a for a in product(range(d + 1), repeat=D) if min_degree <= sum(a) <= d]
    return sorted(out, key=grlex_key)


def torus_norm(x):
    """Distance to the nearest integer. Works on floats, Fractions and arrays."""
    if isinstance(x, Rational):
        r = Fraction(x) - math.floor(x)
        return min(r, 1 - r)
    if isinstance(x, np.ndarray):
        if not np.all(np.isfinite(x)):
            raise DomainError("torus_norm of a non-finite value")
        return np.abs(x - np.round(x))
    x = float(x)
    if not math.isfinite(x):
        raise DomainError("torus_norm of a non-finite value")
    return abs(x - round(x))


def _coerce_coeff(c):
    if isinstance(c, (Fraction, int, np.integer)) and not isinstance(c, bool):
        return Fraction(int(c)) if isinstance(c, (int, np.integer)) else c
    c = float(c)
    if not math.isfinite(c):
        raise DomainError("non-finite coefficient")
    return c


@dataclass(frozen=True)
class ScaleVec:
    """Per-axis scales R = (R_1, ..., R_D), each >= 1."""

    radii: tuple

    def __post_init__(self):
        r = tuple(float(x) for x in self.radii)
        if not r:
            raise DomainError("empty scale vector")
        if any(not math.isfinite(x) or x < 1 for x in r):
            raise DomainError(f"scales must be finite and >= 1, got {r}")
        object.__setattr__(self, "radii", r)

    @classmethod
    def of(cls, R, D: int) -> "ScaleVec":
        if isinstance(R, ScaleVec):
            if R.D != D:
                raise DomainError(f"scale vector has dimension {R.D}, expected {D}")
            return R
        if np.ndim(R) == 0:
            return cls((float(R),) * D)
        R = tuple(R)
        if len(R) != D:
            raise DomainError(f"scale vector has dimension {len(R)}, expected {D}")
        return cls(R)

    @property
    def D(self) -> int:
        return len(self.radii)

    def weight(self, alpha: MultiIndex) -> float:
        return math.prod(r**a for r, a in zip(self.radii, alpha))

    def volume(self) -> float:
        return math.prod(self.radii)

    def is_integral(self) -> bool:
        return all(float(r).is_integer() for r in self.radii)


@dataclass(frozen=True)
class Poly:
    """P(x) = sum_alpha coeffs[alpha] x^alpha in D variables.

    ``restricted`` marks membership in the class of degree-d polynomials
    without constant or linear terms; it is inferred from the terms when omitted.
    """

    D: int
    coeffs: Mapping = field(default_factory=dict)
    d: int | None = None
    restricted: bool | None = None

    def __post_init__(self):
        if self.D < 1:
            raise DomainError("dimension must be >= 1")
        clean = {}
        for alpha, c in dict(self.coeffs).items():
            alpha = (int(alpha),) if np.ndim(alpha) == 0 else tuple(int(a) for a in alpha)
            if len(alpha) != self.D or any(a < 0 for a in alpha):
                raise DomainError(f"bad multi-index {alpha} for D={self.D}")
            c = _coerce_coeff(c)
            if c != 0:
                clean[alpha] = clean.get(alpha, 0) + c
        clean = {a: clean[a] for a in sorted(clean, key=grlex_key) if clean[a] != 0}
        top = max((sum(a) for a in clean), default=0)
        d = top if self.d is None else int(self.d)
        if top > d:
            raise DomainError(f"term of degree {top} exceeds declared degree {d}")
        low = any(sum(a) < 2 for a in clean)
        if self.restricted and low:
            raise DomainError("restricted polynomials may not have constant or linear terms")
        object.__setattr__(self, "restricted", not low if self.restricted is None else self.restricted)
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "d", d)

    # construction helpers
    @classmethod
    def from_coeffs(cls, coeffs: Mapping, D: int | None = None, d: int | None = None) -> "Poly":
        keys = [(k,) if np.ndim(k) == 0 else tuple(k) for k in coeffs]
        if D is None:
            if not keys:
                raise DomainError("cannot infer dimension of an empty polynomial")
            D = len(keys[0])
        restricted = all(sum(k) >= 2 for k in keys)
        return cls(D, dict(zip(keys, coeffs.values())), d=d, restricted=restricted)

    @classmethod
    def zero(cls, D: int, d: int = 2) -> "Poly":
        return cls(D, {}, d=d)

    @classmethod
    def from_vector(cls, lam, d: int, D: int) -> "Poly":
        """Coefficients listed in the graded lex order of index_set(d, D)."""
        alphas = index_set(d, D)
        lam = list(lam)
        if len(lam) != len(alphas):
            raise DomainError(f"expected {len(alphas)} coefficients, got {len(lam)}")
        return cls(D, dict(zip(alphas, lam)), d=d)

    # basic queries
    def terms(self) -> list[tuple[MultiIndex, object]]:
        return list(self.coeffs.items())

    def alphas(self) -> list[MultiIndex]:
        return list(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.coeffs.values())

    def common_denominator(self) -> int:
        if not self.exact:
            raise DomainError("common denominator requires exact coefficients")
        return math.lcm(1, *(c.denominator for c in self.coeffs.values()))

    def to_float(self) -> "Poly":
        return Poly(self.D, {a: float(c) for a, c in self.coeffs.items()}, d=self.d,
                    restricted=self.restricted)

    def vector(self, d: int | None = None) -> list:
        return [self.coeffs.get(a, 0) for a in index_set(d or self.d, self.D)]

    # arithmetic
    def scale(self, k) -> "Poly":
        return Poly(self.D, {a: k * c for a, c in self.coeffs.items()}, d=self.d,
                    restricted=self.restricted)

    def __neg__(self) -> "Poly":
        return self.scale(-1)

    def __add__(self, other: "Poly") -> "Poly":
        if other.D != self.D:
            raise DomainError("dimension mismatch")
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, 0) + c
        return Poly(self.D, out, d=max(self.d, other.d),
                    restricted=self.restricted and other.restricted)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def drop_constant(self) -> "Poly":
        zero = (0,) * self.D
        return Poly(self.D, {a: c for a, c in self.coeffs.items() if a != zero}, d=self.d,
                    restricted=self.restricted)

    # evaluation
    def __call__(self, x):
        return eval_poly(self, x)

    def phases(self, points, k: int = 1) -> np.ndarray:
        """Fractional parts of k*P(n) in [0,1) for integer points (npts, D)."""
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.D)
        if self.exact:
            num, L = self.phase_numerators(pts, k)
            return num / float(L)
        acc = np.zeros(pts.shape[0])
        for alpha, c in self.coeffs.items():
            lam = float(c) - math.floor(float(c))
            m = int_powers(pts, alpha) * int(k)
            acc = acc + frac_mul(lam, m.astype(np.float64))
        return frac(acc)

    def phase_numerators(self, points, k: int = 1) -> tuple[np.ndarray, int]:
        """Exact mode: integers a(n) with k*P(n) = a(n)/L mod 1."""
        L = self.common_denominator()
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.D)
        acc = np.zeros(pts.shape[0], dtype=np.int64)
        for alpha, c in self.coeffs.items():
            num = (c.numerator * (L // c.denominator) * int(k)) % L
            acc = (acc + num * mod_powers(pts, alpha, L)) % L
        return acc, L

    # serialization
    def to_json_obj(self) -> dict:
        terms = []
        for alpha, c in self.coeffs.items():
            if isinstance(c, Fraction):
                cj = {"num": c.numerator, "den": c.denominator}
            else:
                cj = float(c)
            terms.append({"alpha": list(alpha), "coeff": cj})
        return {"d": self.d, "D": self.D, "terms": terms}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "Poly":
        try:
            D = int(obj["D"])
            d = int(obj["d"]) if obj.get("d") is not None else None
            coeffs = {}
            for t in obj.get("terms", []):
                c = t["coeff"]
                if isinstance(c, Mapping):
                    c = Fraction(int(c["num"]), int(c["den"]))
                elif isinstance(c, int) and not isinstance(c, bool):
                    c = Fraction(c)
                coeffs[tuple(int(a) for a in t["alpha"])] = c
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"malformed polynomial JSON: {exc}") from exc
        restricted = all(sum(a) >= 2 for a in coeffs)
        return cls(D, coeffs, d=d, restricted=restricted)

    @classmethod
    def from_json(cls, text: str) -> "Poly":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"malformed polynomial JSON: {exc}") from exc
        return cls.from_json_obj(obj)


def eval_poly(P: Poly, x):
    """P(x), summed in graded lex term order.

    Exact (Fraction) when P is exact and x is integral; float otherwise.
    """
    x = tuple(x) if np.ndim(x) else (x,)
    if len(x) != P.D:
        raise DomainError(f"point has dimension {len(x)}, polynomial has D={P.D}")
    if P.exact and all(isinstance(v, (int, np.integer, Fraction)) for v in x):
        total = Fraction(0)
        for alpha, c in P.coeffs.items():
            total += c * math.prod(Fraction(v) ** a for v, a in zip(x, alpha))
        return total
    vals = [float(c) * math.prod(float(v) ** a for v, a in zip(x, alpha))
            for alpha, c in P.coeffs.items()]
    return math.fsum(vals)


def euclid_coeff_norm(P: Poly, t: float = 1.0) -> float:
    """sum |lambda_alpha| t^|alpha| over non-constant terms."""
    if not t > 0:
        raise DomainError("scale t must be positive")
    return math.fsum(abs(float(c)) * float(t) ** sum(a) for a, c in P.coeffs.items() if sum(a) > 0)


@dataclass
class ScaleProfile:
    values: list          # (j, ||P(2^j .)||) for j = 0..j_max
    level_sets: dict      # l -> sorted list of j with 2^(l-1) <= value < 2^l
    j_lambda: int | None  # max j with value <= 1, None if value(0) > 1
    zero: bool = False

    def level_sets_are_intervals(self) -> bool:
        return all(js == list(range(js[0], js[-1] + 1)) for js in self.level_sets.values())


def dyadic_scale_profile(P: Poly, j_max: int) -> ScaleProfile:
    if j_max < 1:
        raise DomainError("j_max must be >= 1")
    values = [(j, euclid_coeff_norm(P, 2.0**j)) for j in range(j_max + 1)]
    if all(sum(a) == 0 for a in P.coeffs):
        return ScaleProfile(values, {}, None, zero=True)
    levels: dict = {}
    for j, v in values:
        levels.setdefault(math.floor(math.log2(v)) + 1, []).append(j)
    if values[0][1] > 1:
        jl = None
    else:
        jl = 0
        while euclid_coeff_norm(P, 2.0 ** (jl + 1)) <= 1:
            jl += 1
    return ScaleProfile(values, levels, jl)


def shift_difference(P: Poly, h: int, axis: int) -> Poly:
    """The polynomial n -> P(n + h e_axis) - P(n), axis counted from 0."""
    if not 0 <= axis < P.D:
        raise DomainError(f"axis {axis} out of range for D={P.D}")
    h = int(h)
    out: dict = {}
    for alpha, c in P.coeffs.items():
        a = alpha[axis]
        for i in range(a):  # keep n_axis^i, drop the i = a term (cancels with -P)
            beta = alpha[:axis] + (i,) + alpha[axis + 1:]
            out[beta] = out.get(beta, 0) + c * math.comb(a, i) * h ** (a - i)
    return Poly(P.D, out, d=P.d, restricted=False)


def grid_points(extents: Iterable[Iterable[int]]) -> np.ndarray:
    """Row-major cartesian product of per-axis integer value arrays, shape (n, D)."""
    axes = [np.asarray(list(e), dtype=np.int64) for e in extents]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)
