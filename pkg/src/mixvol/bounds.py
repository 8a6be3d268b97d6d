"""Closed-form bound factors: truncated binomial polynomials, lambda(n, k),
g(k), Newton-type coefficient checks and the lower bounds they imply."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

INF = math.inf
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class BoundsError(ValueError):
    pass


def _check_nk(n, k):
    if k < 1 or (n != INF and (int(n) != n or k > n)):
        raise BoundsError(f"need 1 <= k <= n, got n={n}, k={k}")


def sv_coefficients(n, k: int) -> np.ndarray:
    """``c_i = C(n, i) / n^i`` for ``i = 0..k``; ``1 / i!`` when ``n`` is infinite."""
    _check_nk(n, k)
    c = np.empty(k + 1)
    c[0] = 1.0
    for i in range(1, k + 1):
        ratio = 1.0 / i if n == INF else (n - i + 1) / (n * i)
        c[i] = c[i - 1] * ratio
    return c


def sv_eval(n, k: int, x: float) -> float:
    if x < 0:
        raise BoundsError("sv is evaluated at x >= 0")
    return float(np.polynomial.polynomial.polyval(x, sv_coefficients(n, k)))


def g_factor(k: int) -> float:
    if k < 1:
        raise BoundsError("g(k) needs k >= 1")
    return ((k - 1) / k) ** (k - 1)


def g_factor_exact(k: int) -> Fraction:
    if k < 1:
        raise BoundsError("g(k) needs k >= 1")
    return Fraction((k - 1) ** (k - 1), k ** (k - 1))


def vdw_factor(n: int) -> float:
    return math.factorial(n) / n**n


def lambda_closed_form(n, k: int) -> float | None:
    """Known closed forms of lambda(n, k), or None."""
    _check_nk(n, k)
    if k == 1:
        return 1.0
    if n != INF and k == n:
        return g_factor(k)
    if k == 2:
        ratio = 1.0 if n == INF else (n - 1) / n
        return 1.0 / (1.0 + math.sqrt(2.0) * math.sqrt(ratio))
    return None


def lambda_factor(n, k: int, numeric: bool = False) -> float:
    """``1 / min_{x > 0} sv_{n,k}(x) / x``.

    k = 1 gives 1 (the ratio ``1 + 1/x`` only approaches its infimum).
    Closed forms are used unless ``numeric`` is set; the numeric route is a
    golden-section search in ``log x`` polished by Newton steps on the
    stationarity condition ``x sv'(x) = sv(x)``.
    """
    _check_nk(n, k)
    if k == 1:
        return 1.0
    if not numeric:
        closed = lambda_closed_form(n, k)
        if closed is not None:
            return closed
    c = sv_coefficients(n, k)
    P = np.polynomial.Polynomial(c)
    dP = P.deriv()
    d2P = dP.deriv()

    def ratio(s):
        x = math.exp(s)
        return P(x) / x

    lo, hi = math.log(1e-6), math.log(10.0 * (k if n == INF else n))
    a, b = lo, hi
    s1 = b - _GOLDEN * (b - a)
    s2 = a + _GOLDEN * (b - a)
    f1, f2 = ratio(s1), ratio(s2)
    while b - a > 1e-7:
        if f1 <= f2:
            b, s2, f2 = s2, s1, f1
            s1 = b - _GOLDEN * (b - a)
            f1 = ratio(s1)
        else:
            a, s1, f1 = s1, s2, f2
            s2 = a + _GOLDEN * (b - a)
            f2 = ratio(s2)
    x = math.exp(0.5 * (a + b))
    for _ in range(50):
        h = x * dP(x) - P(x)
        dh = x * d2P(x)
        if dh <= 0:
            break
        step = h / dh
        x -= step
        if abs(step) <= 1e-16 * x:
            break
    return float(x / P(x))


def newton_check(coeffs: Sequence[float], n: int, rtol: float = 1e-10) -> bool:
    """Binomially normalized coefficients are log-concave:
    ``(a_i / C(n,i))^2 >= (a_{i-1} / C(n,i-1)) (a_{i+1} / C(n,i+1))``."""
    a = np.asarray(coeffs, dtype=float)
    m = len(a) - 1
    if m > n:
        raise BoundsError("polynomial degree exceeds n")
    if np.any(a < 0):
        raise BoundsError("coefficients must be nonnegative")
    b = np.array([a[i] / math.comb(n, i) for i in range(m + 1)])
    slack = rtol * max(float(b.max()), 0.0) ** 2
    return all(b[i] ** 2 >= b[i - 1] * b[i + 1] - slack for i in range(1, m))


def univariate_capacity(coeffs: Sequence[float]) -> float:
    """``inf_{t > 0} R(t) / t`` for a nonnegative-coefficient polynomial ``R``."""
    a = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if not len(a):
        raise BoundsError("R must not be identically zero")
    if np.any(a < 0):
        raise BoundsError("coefficients must be nonnegative")
    if a[0] == 0:
        return float(a[1]) if len(a) > 1 else 0.0
    if len(a) <= 2:
        return float(a[1]) if len(a) == 2 else 0.0
    P = np.polynomial.Polynomial(a)
    dP = P.deriv()

    def psi(s):
        t = math.exp(s)
        return t * dP(t) / P(t) - 1.0

    lo, hi = -1.0, 1.0
    while psi(lo) > 0:
        lo *= 2
    while psi(hi) < 0:
        hi *= 2
    s = brentq(psi, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    t = math.exp(s)
    return float(P(t) / t)


def aux_inequality_holds(coeffs: Sequence[float], n: int, atol: float = 1e-9) -> bool:
    """``R'(0) >= lambda(n, deg R) inf R(t)/t`` for an n-Newton ``R``."""
    a = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    deg = len(a) - 1
    if deg < 1:
        return True
    return a[1] >= lambda_factor(n, deg) * univariate_capacity(a) - atol


@dataclass(frozen=True)
class BoundFactors:
    n: int
    D: tuple
    lambdas: tuple
    product: float
    vdw: float


def _lambda_or_one(i: int, k: int) -> float:
    # k = 0 only occurs for point bodies, where capacity and mixed volume vanish
    return 1.0 if k == 0 else lambda_factor(i, k)


def bound_factors(aff_dims: Sequence[int]) -> BoundFactors:
    n = len(aff_dims)
    D = tuple(min(i, int(a)) for i, a in enumerate(aff_dims, start=1))
    lams = tuple(_lambda_or_one(i, d) for i, d in enumerate(D, start=1))
    return BoundFactors(n, D, lams, float(np.prod(lams)), vdw_factor(n))


def schrijver_factor(n: int, k: int) -> float:
    """``k!/k^k * lambda(n, k)^(n-k)``."""
    _check_nk(n, k)
    return math.factorial(k) / k**k * lambda_factor(n, k) ** (n - k)


def af2_factor(n: int) -> float:
    return 0.5 * (1.0 + math.sqrt(2.0)) ** (2 - n)


def schrijver_admissible(aff_dims: Sequence[int], k: int) -> bool:
    """After sorting by affine dimension (mixed volume is symmetric), all but
    the ``k`` largest dimensions are at most ``k``."""
    srt = sorted(aff_dims, reverse=True)
    return all(a <= k for a in srt[k:])


def lower_bounds_report(cap: float, aff_dims: Sequence[int], k: int | None = None) -> dict:
    if cap < 0:
        raise BoundsError("capacity must be nonnegative")
    n = len(aff_dims)
    bf = bound_factors(aff_dims)
    report = {
        "n": n,
        "D": list(bf.D),
        "lambdas": list(bf.lambdas),
        "svg_factor": bf.product,
        "vdw_factor": bf.vdw,
        "vdw": bf.vdw * cap,
        "svg": bf.product * cap,
        "schrijver": None,
        "schrijver_k": None,
        "schrijver_factor": None,
    }
    ks = [k] if k is not None else range(1, n + 1)
    best = None
    for kk in ks:
        if 1 <= kk <= n and schrijver_admissible(aff_dims, kk):
            f = schrijver_factor(n, kk)
            if best is None or f > best[1]:
                best = (kk, f)
    if best is not None:
        report["schrijver_k"], report["schrijver_factor"] = best
        report["schrijver"] = best[1] * cap
        if best[0] == 2:
            report["af2"] = af2_factor(n) * cap
    return report


def newton_polytope_degrees(polytopes) -> tuple[list[int], int]:
    """``d(i)``: largest coordinate sum over the vertices of ``P_i``."""
    d = []
    for P in polytopes:
        V = np.asarray(P.vertices, dtype=float)
        if np.any(np.abs(V - np.round(V)) > 1e-9) or np.any(V < -1e-9):
            raise BoundsError("Newton polytopes need nonnegative integer vertices")
        d.append(int(round(float(V.sum(axis=1).max()))))
    return d, int(np.prod(d))
