"""Generalized Sinkhorn scaling ``X <- Nor(SH(X))`` on positive homogeneous functionals."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import BodyTuple
from .mvexact import PolyCoefficients, partial_derivative_exact, tuple_volume

MONOTONE_SLACK = 1e-9


class ScalingError(ValueError):
    pass


class ClassViolation(ScalingError):
    pass


@dataclass(frozen=True)
class Functional:
    """An ``n``-homogeneous functional with positive partial derivatives.

    ``cls`` declares membership in Cav (``f^(1/n)`` concave on positive
    half-lines) or Vex (convex); it is not verified on construction.
    """

    n: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    cls: str = "cav"
    name: str = ""

    def __post_init__(self):
        if self.cls not in ("cav", "vex"):
            raise ScalingError("class must be 'cav' or 'vex'")

    def gamma(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x * self.gradient(x) / self.value(x)


def minkowski_functional(tup: BodyTuple) -> Functional:
    aff = tup.aff_dims()

    def value(x):
        return float(tuple_volume(tup, np.asarray(x, dtype=float)))

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.array([partial_derivative_exact(tup, x, i, aff[i]) for i in range(tup.n)])

    return Functional(tup.n, value, gradient, "cav", "minkowski")


def polynomial_functional(poly: PolyCoefficients, cls: str = "cav") -> Functional:
    return Functional(poly.n, poly, poly.gradient, cls, "polynomial")


def product_functional(n: int) -> Functional:
    return Functional(n, lambda x: float(np.prod(x)), lambda x: np.prod(x) / np.asarray(x, float), "cav", "product")


def power_sum_functional(n: int, p: float) -> Functional:
    """``(sum x_i^p)^(n/p)``: Cav for ``p <= 1``, Vex for ``p >= 1``."""
    if p == 0:
        raise ScalingError("p must be nonzero")

    def value(x):
        return float(np.sum(np.asarray(x, float) ** p) ** (n / p))

    def gradient(x):
        x = np.asarray(x, float)
        s = np.sum(x**p)
        return n * s ** (n / p - 1) * x ** (p - 1)

    return Functional(n, value, gradient, "cav" if p <= 1 else "vex", f"power_sum(p={p})")


# -- iteration ----------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingState:
    x: np.ndarray
    f_value: float
    gamma: np.ndarray

    @property
    def deviation(self) -> float:
        return float(np.max(np.abs(self.gamma - 1.0)))


@dataclass
class Trajectory:
    states: list = field(default_factory=list)
    converged: bool = False

    @property
    def values(self) -> list[float]:
        return [s.f_value for s in self.states]

    @property
    def last(self) -> ScalingState:
        return self.states[-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "f_value", "max_abs_gamma_minus_1"])
            for k, s in enumerate(self.states):
                w.writerow([k, repr(s.f_value), repr(s.deviation)])


def nor(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ScalingError("Nor needs a strictly positive vector")
    return x / math.exp(np.mean(np.log(x)))


def sh_step(f: Functional, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ScalingError("SH needs a strictly positive vector")
    d = f.gradient(x)
    if np.any(d <= 0):
        raise ScalingError("a partial derivative vanishes: functional is outside PoH")
    return f.value(x) / d


def _state(f: Functional, x) -> ScalingState:
    return ScalingState(x, f.value(x), f.gamma(x))


def sinkhorn_iterate(f: Functional, x0: Sequence[float] | None = None, max_iters: int = 500,
                     tol: float = 1e-8) -> Trajectory:
    """Iterate until ``max|gamma - 1| <= tol``.

    The class-dependent inequality between ``f(SH(x))`` and ``f(x)`` is
    checked at every step; a violation beyond ``MONOTONE_SLACK`` (relative)
    raises ``ClassViolation``.
    """
    x = nor(np.ones(f.n) if x0 is None else x0)
    traj = Trajectory([_state(f, x)])
    for _ in range(max_iters):
        cur = traj.last
        if cur.deviation <= tol:
            traj.converged = True
            return traj
        y = sh_step(f, cur.x)
        fy = f.value(y)
        slack = MONOTONE_SLACK * max(1.0, abs(cur.f_value))
        if f.cls == "cav" and fy > cur.f_value + slack:
            raise ClassViolation(f"f(SH(x)) = {fy} exceeds f(x) = {cur.f_value}")
        if f.cls == "vex" and fy < cur.f_value - slack:
            raise ClassViolation(f"f(SH(x)) = {fy} is below f(x) = {cur.f_value}")
        traj.states.append(_state(f, nor(y)))
    traj.converged = traj.last.deviation <= tol
    return traj


def near_optimality_check(state: ScalingState, epsilon: float) -> tuple[bool, float]:
    """``sum (1 - gamma_i)^2 <= 10 eps`` for a point with ``f <= Cap e^eps``."""
    if not 0 < epsilon <= 0.1:
        raise ScalingError("epsilon must lie in (0, 1/10]")
    s = float(np.sum((1.0 - state.gamma) ** 2))
    return s <= 10.0 * epsilon, s


def state_at(f: Functional, x) -> ScalingState:
    return _state(f, nor(x))


# -- class and curvature probes ---------------------------------------------------


def class_check(f: Functional, lines: int = 20, seed: int = 0, h: float = 1e-3, rtol: float = 1e-6) -> bool:
    """Sample half-lines ``X + tY`` and test the sign of second differences of ``f^(1/n)``."""
    rng = np.random.default_rng(seed)
    sign = -1.0 if f.cls == "cav" else 1.0
    for _ in range(lines):
        X, Y = rng.uniform(0.2, 2.0, f.n), rng.uniform(0.2, 2.0, f.n)
        for t in (h, 0.5, 2.0):
            vals = [f.value(X + s * Y) ** (1.0 / f.n) for s in (t - h, t, t + h)]
            d2 = vals[0] - 2 * vals[1] + vals[2]
            if sign * d2 < -rtol * abs(vals[1]) * h:
                return False
    return True


def root_concavity_bound(d: float, m: float) -> float:
    """Largest ``q''`` for degree-``d`` restrictions whose ``m``-th root is concave."""
    return d - d * d / m if d <= m / 2 else m / 4


@dataclass(frozen=True)
class CurvatureProbe:
    estimate: float
    degree: int
    log_concave_bound: float
    root_concave_bound: float | None
    quadratic_bound: float


def _univariate_log_second(coeffs: np.ndarray, y: float, h: float) -> float:
    def q(s):
        k = np.arange(len(coeffs))
        return math.log(float(np.sum(coeffs * np.exp(k * s))))

    return (q(y + h) - 2 * q(y) + q(y - h)) / (h * h)


def second_derivative_probe(source, i: int, y: Sequence[float] | float, h: float = 1e-4) -> CurvatureProbe:
    """``q(s) = log p(e^{y + s e_i})`` second difference at ``s = 0``.

    ``source`` is a BodyTuple (Minkowski polynomial: root-concave of order
    ``n``), a PolyCoefficients table, or univariate coefficients ``[a_0, ...]``.
    """
    if isinstance(source, BodyTuple):
        n = source.n
        yv = np.asarray(y, dtype=float)
        deg = source.aff_dims()[i]

        def q(s):
            z = yv.copy()
            z[i] += s
            return math.log(float(tuple_volume(source, np.exp(z))))

        est = (q(h) - 2 * q(0.0) + q(-h)) / (h * h)
        return CurvatureProbe(est, deg, float(deg), root_concavity_bound(deg, n), 0.25 * deg * deg)
    if isinstance(source, PolyCoefficients):
        yv = np.asarray(y, dtype=float)
        coeffs = np.asarray(source.univariate(i, np.exp(yv)), dtype=float)
        deg = len(np.trim_zeros(coeffs, "b")) - 1
        return CurvatureProbe(_univariate_log_second(coeffs, yv[i], h), deg, float(deg), None, 0.25 * deg * deg)
    coeffs = np.asarray(source, dtype=float)
    deg = len(np.trim_zeros(coeffs, "b")) - 1
    return CurvatureProbe(_univariate_log_second(coeffs, float(y), h), deg, float(deg), None, 0.25 * deg * deg)
