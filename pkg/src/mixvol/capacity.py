"""The log-capacity objective ``f(y) = log V_K(e^y)`` and its oracles.

An objective exposes ``n``, ``value(y)`` and ``gradient(y)``; each returns
the estimate together with an additive error bound, so the minimizers can
treat exact and noisy oracles alike.  ``y`` is given in ambient coordinates;
points off the zero-sum hyperplane are allowed internally (the unconstrained
extension satisfies ``f(y + c) = f(y) + n c``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Sequence

import numpy as np

from . import geometry as geo
from ._util import derive_seed
from .geometry import BodyTuple
from .mvexact import PolyCoefficients, partial_derivative_exact, tuple_volume

ZERO_SUM_ATOL = 1e-12
EXACT_GRAD_ERR = 1e-9
MC_VALUE_FLOOR = 1e-12


class ObjectiveError(ValueError):
    pass


@dataclass(frozen=True)
class OracleQuality:
    value_err: float = 0.0
    grad_err: float = 0.0
    failure_prob: float = 0.0

    def __post_init__(self):
        if min(self.value_err, self.grad_err, self.failure_prob) < 0:
            raise ObjectiveError("oracle error bounds are nonnegative")


@dataclass(frozen=True)
class ObjectivePoint:
    y: np.ndarray
    value: float
    gradient: np.ndarray


def _check_zero_sum(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if abs(y.sum()) > ZERO_SUM_ATOL * max(1.0, np.abs(y).max(initial=0.0)):
        raise ObjectiveError("objective points must satisfy sum(y) = 0")
    return y


def _z_scale(failure_prob: float) -> float:
    """Ratio of the two-sided normal quantile at ``failure_prob`` to the 95% one."""
    return NormalDist().inv_cdf(1.0 - failure_prob / 2.0) / NormalDist().inv_cdf(0.975)


@dataclass
class MinkowskiObjective:
    """``log Vol(sum e^{y_i} K_i)`` with an exact or hit-or-miss volume oracle."""

    tup: BodyTuple
    mode: str = "exact"
    samples: int = 100_000
    seed: int = 0
    failure_prob: float = 0.05
    workers: int = 1
    calls: dict = field(default_factory=lambda: {"value": 0, "gradient": 0, "volume": 0})
    _counter: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "mc"):
            raise ObjectiveError(f"unknown oracle mode {self.mode!r}")
        self.aff = self.tup.aff_dims()

    @property
    def n(self) -> int:
        return self.tup.n

    @property
    def degree_bounds(self) -> list[int]:
        return self.aff

    def _log_volume(self, y) -> tuple[float, float]:
        x = np.exp(np.asarray(y, dtype=float))
        self.calls["volume"] += 1
        if self.mode == "exact":
            vol = tuple_volume(self.tup, x)
            if vol <= 0:
                raise ObjectiveError("Minkowski sum has zero volume: tuple is not full-dimensional")
            return math.log(vol), 0.0
        body = geo.minkowski_combine(list(x), self.tup.bodies)
        seed = derive_seed(self.seed, self._counter)
        self._counter += 1
        try:
            est = geo.volume_mc(body, self.samples, seed, workers=self.workers)
        except geo.DegenerateBody as exc:
            raise ObjectiveError("Minkowski sum has zero volume: tuple is not full-dimensional") from exc
        if est.estimate <= 0:
            raise ObjectiveError("hit-or-miss estimate is zero")
        a = est.half_width * _z_scale(self.failure_prob) / est.estimate
        return math.log(est.estimate), max(a, MC_VALUE_FLOOR)

    def value(self, y) -> tuple[float, OracleQuality]:
        self.calls["value"] += 1
        val, a = self._log_volume(y)
        return val, OracleQuality(value_err=a, failure_prob=0.0 if self.mode == "exact" else self.failure_prob)

    def gradient(self, y, value: tuple[float, float] | None = None) -> tuple[np.ndarray, float]:
        """Gradient and an l2 error bound."""
        self.calls["gradient"] += 1
        y = np.asarray(y, dtype=float)
        if self.mode == "exact":
            x = np.exp(y)
            vol = tuple_volume(self.tup, x)
            gamma = np.array([x[i] * partial_derivative_exact(self.tup, x, i, self.aff[i]) for i in range(self.n)]) / vol
            return gamma, EXACT_GRAD_ERR
        f0, a = value if value is not None else self._log_volume(y)
        gamma = np.empty(self.n)
        for i in range(self.n):
            gamma[i] = _forward_difference(self._log_volume, y, i, f0, a, self.n)
        return gamma, 2.0 * self.n * math.sqrt(a)


def _forward_difference(log_volume, y, i, f0, a, n) -> float:
    delta = 2.0 * math.sqrt(a / n)
    yd = np.array(y, dtype=float)
    yd[i] += delta
    return (log_volume(yd)[0] - f0) / delta


@dataclass
class PolynomialObjective:
    """``log p(e^y)`` for an explicit coefficient table."""

    poly: PolyCoefficients
    calls: dict = field(default_factory=lambda: {"value": 0, "gradient": 0, "volume": 0})

    @property
    def n(self) -> int:
        return self.poly.n

    @property
    def degree_bounds(self) -> list[int]:
        return [self.poly.var_degree(i) for i in range(self.n)]

    def _terms(self, y):
        E, c = self.poly.arrays()
        s = np.log(c) + E @ np.asarray(y, dtype=float)
        top = s.max()
        w = np.exp(s - top)
        return E, top, w

    def value(self, y):
        self.calls["value"] += 1
        _, top, w = self._terms(y)
        return top + math.log(w.sum()), OracleQuality()

    def gradient(self, y, value=None):
        self.calls["gradient"] += 1
        E, _, w = self._terms(y)
        return E.T @ (w / w.sum()), EXACT_GRAD_ERR


# -- functional API -------------------------------------------------------------


def objective_eval(tup: BodyTuple, y, mode: str = "exact", samples: int = 100_000, seed: int = 0,
                   failure_prob: float = 0.05) -> tuple[float, OracleQuality]:
    y = _check_zero_sum(y)
    obj = MinkowskiObjective(tup, mode=mode, samples=samples, seed=seed, failure_prob=failure_prob)
    return obj.value(y)


def objective_gradient(tup: BodyTuple, y) -> np.ndarray:
    y = _check_zero_sum(y)
    gamma, _ = MinkowskiObjective(tup).gradient(y)
    return gamma


def objective_point(tup: BodyTuple, y) -> ObjectivePoint:
    y = _check_zero_sum(y)
    obj = MinkowskiObjective(tup)
    return ObjectivePoint(y, obj.value(y)[0], obj.gradient(y)[0])


def fd_gradient_component(tup: BodyTuple, y, i: int, value_err: float, oracle=None) -> float:
    """One-sided difference with the step ``2 sqrt(a / n)`` balancing
    truncation (second derivative at most n) against value noise ``a``.

    ``oracle`` maps ``y`` to ``(log volume, error)``; the exact one by default.
    Guaranteed error: ``2 sqrt(n a)``.
    """
    if value_err <= 0:
        raise ObjectiveError("value error bound must be positive")
    y = np.asarray(y, dtype=float)
    if oracle is None:
        oracle = MinkowskiObjective(tup)._log_volume
    f0 = oracle(y)[0]
    return _forward_difference(oracle, y, i, f0, value_err, tup.n)


def fd_error_bound(n: int, value_err: float) -> float:
    return 2.0 * math.sqrt(n * value_err)


def lipschitz_bound_check(tup: BodyTuple, y, delta, slack: float = 1e-8) -> bool:
    """``|f(y + delta) - f(y)| <= n ||delta||_2``."""
    y = _check_zero_sum(y)
    delta = _check_zero_sum(delta)
    obj = MinkowskiObjective(tup)
    f0 = obj.value(y)[0]
    f1 = obj.value(y + delta)[0]
    return abs(f1 - f0) <= tup.n * float(np.linalg.norm(delta)) + slack


def coordinate_second_difference(value, y: Sequence[float], i: int, h: float = 1e-4) -> float:
    """Central second difference of ``s -> value(y + s e_i)`` at ``s = 0``."""
    y = np.asarray(y, dtype=float)
    e = np.zeros_like(y)
    e[i] = h
    return (value(y + e) - 2.0 * value(y) + value(y - e)) / h**2
