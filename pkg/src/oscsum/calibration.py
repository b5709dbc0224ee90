"""Calibrate-then-freeze for the implicit constants.

Each suite draws its cases from a seeded generator and returns the observed
ratios (measured quantity / stated right-hand side).  ``run_calibration``
records the maxima with CALIBRATION_SEED; FROZEN holds the bounds that the
tests assert, set to twice the recorded maximum and never tuned afterwards.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .coeffnorm import coeff_norm, sample_level_set
from .errors import PreconditionError
from .expsum import (continuous_sublevel, oscillatory_integral, sublevel_large_norm,
                     sublevel_small_norm)
from .invthm import condense, vdc_difference
from .polycore import Poly, torus_norm

CALIBRATION_SEED = 20240917

# max ratios observed by run_calibration(CALIBRATION_SEED)
RECORDED = {
    "sublevel_small": 0.4411582717723828,
    "sublevel_large": 0.6102460010921748,
    "oscillatory_integral": 1.518569034647474,
    "continuous_sublevel": 2.011824360635638,
    "vdc": 1.0280837772262035,
    "condense": 1.0000000000000002,
}

# bounds asserted by the tests: 2 x recorded rounded up, except vdc whose bound 2 is proven
FROZEN = {
    "sublevel_small": 0.89,
    "sublevel_large": 1.23,
    "oscillatory_integral": 3.04,
    "continuous_sublevel": 4.03,
    "vdc": 2.0,
    "condense": 2.0,
}


def _random_poly(rng, d: int, D: int = 1, scale: float = 1.0) -> Poly:
    from .polycore import index_set
    alphas = index_set(d, D)
    return Poly(D, {a: float(rng.uniform(-scale, scale)) for a in alphas}, d=d)


def sublevel_small_suite(n: int, seed: int) -> list[float]:
    """D = 1, R <= 2^12, N_R(P) >= 2, A <= N^theta, B >= 100."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        d = int(rng.integers(2, 4))
        R = 2 ** int(rng.integers(6, 13))
        s = int(rng.integers(2, 2 * d + 4))
        P = sample_level_set(d, 1, R, s, rng, max_draws=5000)
        if P is None:
            continue
        N = coeff_norm(P, R).value
        theta = 1.0 / (2 * d)
        A = max(1, int(math.floor(N**theta)))
        B = float(rng.choice([100, 256, 1000, 4096]))
        try:
            out.append(sublevel_small_norm(P, R, A, B).ratio)
        except PreconditionError:
            continue
    return out


def sublevel_large_suite(n: int, seed: int) -> list[float]:
    """D = 1, R <= 2^12, N_R(P) >= R^(1/2), kappa in [0.02, 0.2]."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        d = int(rng.integers(2, 4))
        R = 2 ** int(rng.integers(6, 13))
        P = _random_poly(rng, d)
        kappa = float(rng.uniform(0.02, 0.2))
        try:
            out.append(sublevel_large_norm(P, R, kappa).ratio)
        except PreconditionError:
            continue
    return out


def large_norm_kappa0(seed: int, R_exps=range(6, 13), kappa: float = 0.05, d: int = 2,
                      n_poly: int = 5) -> list[float]:
    """Fitted kappa0 = -slope of log(count / R) in log R, one value per random polynomial."""
    from .expsum import fit_kappa0
    rng = np.random.default_rng(seed)
    fits = []
    while len(fits) < n_poly:
        P = _random_poly(rng, d)
        Rs, cs = [], []
        try:
            for e in R_exps:
                rep = sublevel_large_norm(P, 2**e, kappa)
                Rs.append(2**e)
                cs.append(max(rep.count, 1))
        except PreconditionError:
            continue
        fits.append(fit_kappa0(Rs, cs))
    return fits


def oscillatory_integral_suite(n: int, seed: int) -> list[float]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        d = int(rng.integers(1, 4))
        D = 1 if i % 4 else 2
        scale = 10 ** float(rng.uniform(0, 3)) if D == 1 else 10 ** float(rng.uniform(0, 1.3)) / (d + 1) ** 2
        P = _random_poly_full(rng, d, D, scale)
        out.append(oscillatory_integral(P).ratio)
    return out


def _random_poly_full(rng, d: int, D: int, scale: float) -> Poly:
    from .polycore import index_set
    alphas = index_set(d, D, min_degree=1)
    return Poly(D, {a: float(rng.uniform(-scale, scale)) for a in alphas}, d=d)


def continuous_sublevel_suite(n: int, seed: int) -> list[float]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        d = int(rng.integers(1, 4))
        P = Poly(1, {(k,): float(rng.uniform(-1, 1)) for k in range(0, d + 1)}, d=d)
        eps = 10 ** float(rng.uniform(-4, -1))
        out.append(continuous_sublevel(P, eps, resolution=2**14).ratio)
    return out


def vdc_suite(n: int, seed: int) -> list[float]:
    """Constant, linear, quadratic and random-coefficient phases on intervals up to 2^12."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        L = int(2 ** rng.integers(4, 13))
        H = int(rng.integers(0, L + 1)) if i % 3 == 0 else int(rng.integers(1, max(2, L // 8)))
        t = np.arange(L, dtype=np.float64)
        kind = i % 4
        if kind == 0:
            F = np.full(L, float(rng.uniform()))
        elif kind == 1:
            F = float(rng.uniform()) * t
        elif kind == 2:
            F = float(rng.uniform()) * t**2 / L
        else:
            F = sum(float(rng.uniform(-1, 1)) * t**k / L ** (k - 1) for k in range(1, 4))
        out.append(vdc_difference(F, H).ratio)
    return out


def condense_suite(n: int, seed: int) -> list[float]:
    """Smallest constant C for which some q <= ceil(1/delta) has ||q a0|| <= C eps q / (delta N).

    a0 = a/q0 + tiny shift, H = multiples of q0 in [N], eps the tight value on H.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        q0 = int(rng.integers(1, 30))
        a = int(rng.integers(0, q0))
        if math.gcd(a, q0) != 1:
            continue
        N = int(rng.integers(500, 5000))
        shift = float(rng.uniform(-1, 1)) * 10.0 ** float(rng.uniform(-9, -5))
        alpha0 = a / q0 + shift
        H = list(range(q0, N + 1, q0))
        res = condense(alpha0, H, N)
        unit = res.eps / (res.delta * N)
        need = [float(torus_norm(q * alpha0)) / (unit * q) for q in range(1, math.ceil(1 / res.delta - 1e-12) + 1)]
        out.append(min(need))
    return out


SUITES = {
    "sublevel_small": (sublevel_small_suite, 100),
    "sublevel_large": (sublevel_large_suite, 100),
    "oscillatory_integral": (oscillatory_integral_suite, 100),
    "continuous_sublevel": (continuous_sublevel_suite, 100),
    "vdc": (vdc_suite, 1000),
    "condense": (condense_suite, 200),
}


def run_calibration(seed: int = CALIBRATION_SEED, names=None) -> dict:
    names = list(SUITES) if names is None else list(names)
    out = {}
    for name in names:
        fn, n = SUITES[name]
        ratios = fn(n, seed)
        out[name] = {"max_ratio": max(ratios), "n": len(ratios),
                     "proposed_bound": 2 * max(ratios)}
    return out


def frozen_bound(name: str) -> float:
    v = FROZEN[name]
    if v is None:
        raise RuntimeError(f"constant {name!r} has not been frozen")
    return v
