"""Exact desk-scale oracles for mixed volumes and homogeneous polynomials.

Mixed volumes use the derivative normalization throughout: ``V(K_1..K_n)``
is the coefficient of ``x_1 * ... * x_n`` in ``Vol(x_1 K_1 + ... + x_n K_n)``,
i.e. ``n!`` times the classical mixed volume.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from . import geometry as geo
from ._util import zero_sum_basis
from .geometry import BodyTuple

POLARIZATION_CAP = 12
PERMANENT_CAP = 20
COEFFICIENT_CAP = 5


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class MixedVolumeResult:
    value: float
    method: str

    def classical(self, n: int):
        return self.value / math.factorial(n)


# -- Minkowski polynomial -----------------------------------------------------


@functools.lru_cache(maxsize=200_000)
def _cached_volume(tup: BodyTuple, weights: tuple) -> float:
    if not any(w > 0 for w in weights):
        return 0.0
    return geo.volume_exact(geo.minkowski_combine(weights, tup.bodies))


def tuple_volume(tup: BodyTuple, weights: Sequence) -> float:
    """``Vol(sum_i w_i K_i)`` for nonnegative weights (zeros allowed)."""
    key = tuple(w if isinstance(w, Fraction) else float(w) for w in weights)
    return _cached_volume(tup, key)


def minkowski_poly_eval(tup: BodyTuple, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (tup.n,) or np.any(x <= 0):
        raise OracleError("Minkowski polynomial is evaluated at strictly positive points")
    return float(tuple_volume(tup, x))


def mixed_volume_polarization(tup: BodyTuple) -> MixedVolumeResult:
    """``sum over nonempty S of (-1)^(n-|S|) Vol(sum_{i in S} K_i)``.

    Exact (Fraction) when all bodies are exact boxes or zonotopes.
    """
    n = tup.n
    if n > POLARIZATION_CAP:
        raise OracleError(f"polarization is capped at n = {POLARIZATION_CAP}")
    exact = all(getattr(b, "exact", False) for b in tup.bodies)
    one = Fraction(1) if exact else 1
    total = Fraction(0) if exact else 0.0
    for mask in range(1, 1 << n):
        weights = tuple(one if mask >> i & 1 else 0 * one for i in range(n))
        sign = -1 if (n - bin(mask).count("1")) % 2 else 1
        total += sign * tuple_volume(tup, weights)
    if not exact:
        total = float(total)
    return MixedVolumeResult(total, "polarization")


def permanent_ryser(A) -> float:
    """Permanent by Ryser's inclusion-exclusion formula.

    Integer or Fraction matrices are handled exactly with a Gray-code loop;
    float matrices are vectorized over subset chunks.
    """
    A_obj = np.asarray(A, dtype=object)
    n = A_obj.shape[0]
    if A_obj.shape != (n, n):
        raise OracleError("permanent needs a square matrix")
    if n > PERMANENT_CAP:
        raise OracleError(f"permanent is capped at n = {PERMANENT_CAP}")
    if n == 0:
        return 1
    if all(isinstance(v, (int, Fraction, np.integer)) for v in A_obj.flat):
        return _ryser_exact([[Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v) for v in row] for row in A_obj])

    A = np.asarray(A, dtype=float)
    total = 0.0
    chunk = 1 << 14
    for start in range(1, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n))
        bits = (masks[:, None] >> np.arange(n)) & 1
        prods = np.prod(bits @ A.T, axis=1)
        signs = np.where((n - bits.sum(axis=1)) % 2, -1.0, 1.0)
        total += float(np.dot(signs, prods))
    return total


def _ryser_exact(rows: list[list[Fraction]]) -> Fraction:
    n = len(rows)
    row_sums = [Fraction(0)] * n
    total = Fraction(0)
    gray_prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        j = (gray ^ gray_prev).bit_length() - 1
        step = 1 if gray & (1 << j) else -1
        for i in range(n):
            row_sums[i] += step * rows[i][j]
        prod = Fraction(1)
        for s in row_sums:
            prod *= s
        total += -prod if (n - bin(gray).count("1")) % 2 else prod
        gray_prev = gray
    if total.denominator == 1:
        return int(total)
    return total


def mixed_volume_segments(vectors) -> float:
    """Mixed volume of the segments ``[0, v_i]``: ``|det(v_1..v_n)|``."""
    V = np.asarray(vectors, dtype=object)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise OracleError("need exactly n vectors in R^n")
    if any(isinstance(v, Fraction) for v in V.flat):
        return abs(geo.fraction_det(V.tolist()))
    return float(abs(np.linalg.det(np.asarray(V, dtype=float))))


def _chebyshev_multipliers(k: int) -> np.ndarray:
    """``k`` Chebyshev points of [-0.5, 0.5]."""
    if k == 1:
        return np.zeros(1)
    j = np.arange(k)
    return 0.5 * np.cos((2 * j + 1) * np.pi / (2 * k))


def partial_derivative_exact(tup: BodyTuple, x: Sequence[float], i: int, aff: int | None = None) -> float:
    """``dV_K/dx_i`` at ``x`` by interpolating ``V`` along coordinate ``i``.

    ``V`` has degree ``aff(K_i)`` in ``x_i``; the fit uses that many plus one
    Chebyshev nodes spread over ``[0.5 x_i, 1.5 x_i]``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise OracleError("partial derivatives are taken at strictly positive points")
    d = geo.affine_dimension(tup[i]) if aff is None else aff
    if d == 0:
        return 0.0
    t = _chebyshev_multipliers(d + 1)
    vander = np.vander(t, d + 1, increasing=True)
    if np.linalg.cond(vander) > 1e10:
        raise OracleError("interpolation nodes are ill-conditioned")
    vals = np.empty(d + 1)
    for k, tk in enumerate(t):
        xk = x.copy()
        xk[i] = x[i] * (1.0 + tk)
        vals[k] = tuple_volume(tup, xk)
    coef = np.linalg.solve(vander, vals)
    return float(coef[1] / x[i])


# -- dense coefficient tables ---------------------------------------------------


@dataclass(frozen=True)
class PolyCoefficients:
    """Homogeneous polynomial with nonnegative coefficients, keyed by exponent."""

    n: int
    degree: int
    entries: dict

    def __post_init__(self):
        clean = {}
        for alpha, c in self.entries.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or sum(alpha) != self.degree:
                raise OracleError(f"exponent {alpha} does not match arity {self.n} and degree {self.degree}")
            if c < 0:
                raise OracleError(f"negative coefficient {c} at {alpha}")
            if c > 0:
                clean[alpha] = c
        object.__setattr__(self, "entries", clean)

    @classmethod
    def from_function(cls, n: int, func) -> "PolyCoefficients":
        return cls(n, n, {a: func(a) for a in _exponents(n, n, [n] * n)})

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.entries:
            return np.zeros((0, self.n), dtype=int), np.zeros(0)
        keys = sorted(self.entries)
        return np.array(keys, dtype=int), np.array([float(self.entries[k]) for k in keys])

    def __call__(self, x) -> float:
        E, c = self.arrays()
        x = np.asarray(x, dtype=float)
        return float(np.sum(c * np.prod(x[None, :] ** E, axis=1)))

    def gradient(self, x) -> np.ndarray:
        E, c = self.arrays()
        x = np.asarray(x, dtype=float)
        g = np.zeros(self.n)
        for i in range(self.n):
            Ei = E.copy()
            mask = Ei[:, i] > 0
            Ei[mask, i] -= 1
            g[i] = np.sum((c * E[:, i] * np.prod(x[None, :] ** Ei, axis=1))[mask])
        return g

    def coefficient(self, alpha) -> float:
        return self.entries.get(tuple(alpha), 0.0)

    def var_degree(self, i: int) -> int:
        return max((a[i] for a in self.entries), default=0)

    def univariate(self, i: int, x) -> np.ndarray:
        """Coefficients ``a_0..a_d`` of ``t -> p(x with x_i = t)``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.degree + 1)
        for alpha, c in self.entries.items():
            rest = np.prod([x[j] ** alpha[j] for j in range(self.n) if j != i])
            out[alpha[i]] += float(c) * rest
        return out


def _exponents(n: int, total: int, caps: Sequence[int]):
    if n == 1:
        if total <= caps[0]:
            yield (total,)
        return
    for a in range(min(total, caps[0]) + 1):
        for rest in _exponents(n - 1, total - a, caps[1:]):
            yield (a,) + rest


COEFF_ATOL = 1e-9


def minkowski_coefficients(tup: BodyTuple) -> PolyCoefficients:
    """All coefficients of ``V_K`` by interpolation on a tensor grid.

    Homogeneity lets the variable of largest degree be pinned to 1, so the
    grid runs over the other ``n - 1`` variables with ``aff(i) + 1`` nodes
    each; the fit is least squares onto the admissible monomials.
    """
    n = tup.n
    if n > COEFFICIENT_CAP:
        raise OracleError(f"coefficient extraction is capped at n = {COEFFICIENT_CAP}")
    aff = tup.aff_dims()
    monos = list(_exponents(n, n, aff))
    if not monos:
        return PolyCoefficients(n, n, {})
    pin = int(np.argmax(aff))
    free = [i for i in range(n) if i != pin]
    node_sets = [1.0 + _chebyshev_multipliers(aff[i] + 1) for i in free]
    rows, vals = [], []
    for combo in itertools.product(*node_sets):
        x = np.ones(n)
        x[free] = combo
        rows.append([np.prod(x ** np.array(a)) for a in monos])
        vals.append(tuple_volume(tup, x))
    coef, *_ = np.linalg.lstsq(np.array(rows), np.array(vals), rcond=None)
    scale = max(float(np.max(np.abs(coef))), 1e-300)
    if np.any(coef < -COEFF_ATOL * scale):
        raise OracleError(f"negative Minkowski coefficient {coef.min():.3e}: geometry inconsistency")
    coef = np.where(coef < COEFF_ATOL * scale, 0.0, coef)
    return PolyCoefficients(n, n, {a: float(c) for a, c in zip(monos, coef)})


def derivative_truncation(poly: PolyCoefficients, keep: int) -> PolyCoefficients:
    """``q_keep = d^(n-keep)/dx_(keep+1)..dx_n p(x_1..x_keep, 0..0)``."""
    if not 1 <= keep <= poly.n:
        raise OracleError("keep must lie in [1, n]")
    if keep == poly.n:
        return poly
    tail = (1,) * (poly.n - keep)
    entries = {a[:keep]: c for a, c in poly.entries.items() if a[keep:] == tail}
    return PolyCoefficients(keep, keep, entries)


# -- capacity of a coefficient table -------------------------------------------


@dataclass(frozen=True)
class PolyCapacity:
    cap: float
    minimizer: np.ndarray
    zero: bool = False


DIVERGENCE_RADIUS = 50.0


def _ones_in_newton_polytope(E: np.ndarray) -> bool:
    m, n = E.shape
    A_eq = np.vstack([E.T.astype(float), np.ones((1, m))])
    b_eq = np.concatenate([np.ones(n), [1.0]])
    res = linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m, method="highs")
    return res.status == 0


def polynomial_capacity(poly: PolyCoefficients, tol: float = 1e-12) -> PolyCapacity:
    """``inf_{x > 0} p(x) / prod(x)`` by damped Newton on ``log p(e^y)``, ``sum(y) = 0``.

    The all-ones exponent outside the Newton polytope means the infimum is 0;
    that case is settled by a linear program before any descent.
    """
    E, c = poly.arrays()
    n = poly.n
    if not len(c):
        raise OracleError("polynomial has no positive coefficient")
    if poly.degree != n:
        raise OracleError("capacity needs degree equal to arity")
    if not _ones_in_newton_polytope(E):
        return PolyCapacity(0.0, np.ones(n), zero=True)
    if n == 1:
        return PolyCapacity(float(c.sum()), np.ones(1))

    U = zero_sum_basis(n)
    B = E @ U
    logc = np.log(c)

    def parts(z):
        s = logc + B @ z
        top = s.max()
        w = np.exp(s - top)
        tot = w.sum()
        w /= tot
        val = top + math.log(tot)
        g = B.T @ w
        mean = B.T @ w
        H = (B * w[:, None]).T @ B - np.outer(mean, mean)
        return val, g, H

    z = np.zeros(n - 1)
    val, g, H = parts(z)
    for _ in range(500):
        try:
            step = -np.linalg.solve(H + 1e-14 * np.eye(n - 1), g)
        except np.linalg.LinAlgError:
            step = -g
        dec = -float(g @ step)
        if dec <= 2 * tol or np.linalg.norm(g) < 1e-15:
            break
        t = 1.0
        while t > 1e-12:
            cand = z + t * step
            cval = parts(cand)[0]
            if cval <= val - 0.25 * t * dec:
                break
            t *= 0.5
        else:
            break
        z = cand
        val, g, H = parts(z)
        if np.linalg.norm(z) > DIVERGENCE_RADIUS:
            # infimum approached at infinity; the value has converged to within e^-50 terms
            break
    y = U @ z
    return PolyCapacity(float(math.exp(val)), np.exp(y))
