"""Low-level numerics shared by the sum kernels.

Phases are always reduced mod 1 before exponentiation.  Products of a real
coefficient with a large integer go through an error-free transformation so
that the fractional part is accurate to about one ulp of 1 even when the
product itself is of size 2^50.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np

from .errors import BudgetError

_SPLITTER = 134217729.0  # 2**27 + 1
EXACT_INT_LIMIT = 2**53


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_product(a, b):
    """Return (p, e) with p = fl(a*b) and a*b = p + e exactly (Dekker)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def frac_mul(lam, m):
    """Fractional part of lam*m in [0, 1), for float lam and integer-valued m.

    m must satisfy |m| < 2^53 so that it is represented exactly.
    """
    p, e = two_product(lam, m)
    f = p - np.floor(p)
    r = f + e
    return r - np.floor(r)


def frac(x):
    x = np.asarray(x, dtype=np.float64)
    return x - np.floor(x)


def expi(phase):
    """e(phase) = exp(2 pi i phase) with exact values at multiples of 1/4.

    The phase is reduced to [-1/8, 1/8] by quarter turns before calling
    sin/cos, so e(1/2) is exactly -1 and e(1/4) exactly i.
    """
    x = np.asarray(phase, dtype=np.float64)
    x = x - np.round(x)
    q = np.round(4.0 * x)
    r = x - 0.25 * q
    c = np.cos(2.0 * np.pi * r)
    s = np.sin(2.0 * np.pi * r)
    q = q.astype(np.int64) % 4
    re = np.where(q == 0, c, np.where(q == 1, -s, np.where(q == 2, -c, s)))
    im = np.where(q == 0, s, np.where(q == 1, c, np.where(q == 2, -s, -c)))
    return re + 1j * im


def expi_rational(k, L: int):
    """e(k/L) for integer arrays k, using integer quarter-turn reduction."""
    k = np.asarray(k, dtype=np.int64) % L
    q = (4 * k + L // 2) // L  # nearest quarter turn, in 0..4
    r = (4 * k - q * L) / (4.0 * L)
    c = np.cos(2.0 * np.pi * r)
    s = np.sin(2.0 * np.pi * r)
    q = q % 4
    re = np.where(q == 0, c, np.where(q == 1, -s, np.where(q == 2, -c, s)))
    im = np.where(q == 0, s, np.where(q == 1, c, np.where(q == 2, -s, -c)))
    return re + 1j * im


def csum(z) -> complex:
    """Correctly rounded sum of a complex array (math.fsum on each part).

    The result does not depend on the order or partitioning of the terms.
    """
    z = np.asarray(z).ravel()
    return complex(math.fsum(z.real.tolist()), math.fsum(z.imag.tolist()))


def fsum_real(x) -> float:
    return math.fsum(np.asarray(x, dtype=np.float64).ravel().tolist())


def int_powers(points, alpha) -> np.ndarray:
    """Exact integer monomials n^alpha for an (npts, D) integer array."""
    pts = np.asarray(points, dtype=np.int64)
    out = np.ones(pts.shape[0], dtype=np.int64)
    bound = np.ones(pts.shape[0], dtype=np.float64)
    for i, a in enumerate(alpha):
        if a:
            col = pts[:, i]
            bound = bound * np.abs(col).astype(np.float64) ** a
            out = out * col**a
    if bound.size and bound.max() >= EXACT_INT_LIMIT:
        raise BudgetError("monomial values exceed 2^53; reduce the box")
    return out


def mod_powers(points, alpha, modulus: int) -> np.ndarray:
    """n^alpha mod modulus, computed with reduction after every multiply."""
    if modulus >= 3_000_000_000:
        raise BudgetError("modulus too large for int64 modular arithmetic")
    pts = np.asarray(points, dtype=np.int64) % modulus
    out = np.ones(pts.shape[0], dtype=np.int64) % modulus
    for i, a in enumerate(alpha):
        for _ in range(a):
            out = (out * pts[:, i]) % modulus
    return out


@lru_cache(maxsize=256)
def cyclotomic(n: int) -> tuple[int, ...]:
    """Integer coefficients (low degree first) of the n-th cyclotomic polynomial."""
    num = [0] * (n + 1)
    num[0], num[n] = -1, 1  # x^n - 1
    for dvs in range(1, n):
        if n % dvs == 0:
            num = _poly_exact_div(num, list(cyclotomic(dvs)))
    return tuple(num)


def _poly_exact_div(num, den):
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    for i in range(len(out) - 1, -1, -1):
        c = num[i + len(den) - 1] // den[-1]
        out[i] = c
        for j, dj in enumerate(den):
            num[i + j] -= c * dj
    if any(num[: len(den) - 1]):
        raise ArithmeticError("inexact polynomial division")
    return out


@lru_cache(maxsize=256)
def _reduction_matrix(n: int) -> np.ndarray:
    """Row k holds the coefficients of x^k mod Phi_n(x), for k < n."""
    phi = cyclotomic(n)
    deg = len(phi) - 1
    rows = np.zeros((n, max(deg, 1)), dtype=np.int64)
    cur = [0] * deg
    if deg:
        cur[0] = 1
    for k in range(n):
        if deg == 0:
            break
        rows[k, :] = cur
        # multiply by x and reduce (Phi_n is monic)
        top = cur[-1]
        cur = [0] + cur[:-1]
        for j in range(deg):
            cur[j] -= top * phi[j]
    return rows


def cyclotomic_is_zero(counts) -> np.ndarray:
    """Exact test that sum_k c_k zeta_n^k == 0, zeta_n a primitive n-th root.

    ``counts`` has shape (..., n) with integer entries.  The value vanishes iff
    the polynomial sum c_k x^k is divisible by Phi_n, i.e. its remainder is 0.
    """
    c = np.asarray(counts, dtype=np.int64)
    n = c.shape[-1]
    if n == 1:
        return c[..., 0] == 0
    rem = c @ _reduction_matrix(n)
    return np.all(rem == 0, axis=-1)


def thread_count() -> int:
    raw = os.environ.get("OSCSUM_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            return 1
    return os.cpu_count() or 1


def ordered_map(fn, items, threads: int | None = None) -> list:
    """map() over a thread pool; results come back in input order."""
    items = list(items)
    n = thread_count() if threads is None else threads
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
