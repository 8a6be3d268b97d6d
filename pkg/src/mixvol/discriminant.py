"""Determinantal polynomials ``det(sum x_i A_i)``: mixed discriminants, their
capacity, and the ellipsoid mixed-volume bracket."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .bounds import g_factor
from .capacity import EXACT_GRAD_ERR, OracleQuality
from .geometry import BodyTuple
from .mvexact import mixed_volume_polarization
from .solver import CapacityReport, SolverError, minimize_objective

SYM_ATOL = 1e-12
PSD_ATOL = 1e-10
POLARIZATION_CAP = 12


class DiscriminantError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MatrixTuple:
    matrices: tuple

    def __post_init__(self):
        mats = tuple(np.array(A, dtype=float) for A in self.matrices)
        n = len(mats)
        if n == 0:
            raise DiscriminantError("empty matrix tuple")
        for A in mats:
            if A.shape != (n, n):
                raise DiscriminantError(f"expected {n} matrices of shape {n}x{n}")
            if np.max(np.abs(A - A.T)) > SYM_ATOL * max(1.0, np.max(np.abs(A))):
                raise DiscriminantError("matrices must be symmetric")
            if np.linalg.eigvalsh(A).min() < -PSD_ATOL * max(1.0, np.max(np.abs(A))):
                raise DiscriminantError("matrices must be positive semidefinite")
            A.flags.writeable = False
        object.__setattr__(self, "matrices", mats)

    @property
    def n(self) -> int:
        return len(self.matrices)

    def __getitem__(self, i):
        return self.matrices[i]

    def weighted_sum(self, x) -> np.ndarray:
        return np.tensordot(np.asarray(x, dtype=float), np.stack(self.matrices), axes=1)

    def replaced(self, j: int, A) -> "MatrixTuple":
        mats = list(self.matrices)
        mats[j] = A
        return MatrixTuple(tuple(mats))


def diagonal_tuple(B) -> MatrixTuple:
    """``A_i = diag(B[i])``; the mixed discriminant is ``perm(B)``."""
    B = np.asarray(B, dtype=float)
    return MatrixTuple(tuple(np.diag(row) for row in B))


def det_poly_eval(A: MatrixTuple, x) -> float:
    return float(np.linalg.det(A.weighted_sum(x)))


def mixed_discriminant_polarization(A: MatrixTuple) -> float:
    """``sum_S (-1)^{n-|S|} det(sum_S A_i)``: the coefficient of ``x_1...x_n``."""
    n = A.n
    if n > POLARIZATION_CAP:
        raise DiscriminantError(f"polarization is limited to n <= {POLARIZATION_CAP}")
    total = 0.0
    for size in range(1, n + 1):
        sign = (-1) ** (n - size)
        for S in itertools.combinations(range(n), size):
            total += sign * np.linalg.det(sum(A[i] for i in S))
    return float(total)


def _rank(M) -> int:
    return geo.numeric_rank(np.asarray(M, dtype=float))


def indecomposable(A: MatrixTuple) -> tuple[bool, tuple | None]:
    """``rank(sum_S A_i) > |S|`` for all proper nonempty ``S``."""
    n = A.n
    for size in range(1, n):
        for S in itertools.combinations(range(n), size):
            if _rank(sum(A[i] for i in S)) <= size:
                return False, S
    return True, None


@dataclass
class DeterminantObjective:
    """``log det(sum e^{y_i} A_i)`` with exact value and gradient."""

    A: MatrixTuple
    mode: str = "exact"
    calls: dict = field(default_factory=lambda: {"value": 0, "gradient": 0, "volume": 0})

    @property
    def n(self) -> int:
        return self.A.n

    def value(self, y):
        self.calls["value"] += 1
        sign, logdet = np.linalg.slogdet(self.A.weighted_sum(np.exp(y)))
        if sign <= 0:
            raise DiscriminantError("weighted sum is singular")
        return float(logdet), OracleQuality()

    def gradient(self, y, value=None):
        self.calls["gradient"] += 1
        x = np.exp(np.asarray(y, dtype=float))
        M = self.A.weighted_sum(x)
        gamma = np.array([x[i] * np.trace(np.linalg.solve(M, self.A[i])) for i in range(self.n)])
        return gamma, EXACT_GRAD_ERR


def det_search_radius(A: MatrixTuple) -> float:
    n = A.n
    stf = min(mixed_discriminant_polarization(A.replaced(j, A[i]))
              for i in range(n) for j in range(n) if i != j)
    if stf <= 0:
        raise SolverError("Stf <= 0: the tuple is decomposable")
    U = det_poly_eval(A, np.ones(n))
    return math.sqrt(n) * math.log(max(2.0 * U / stf, math.e))


def det_capacity(A: MatrixTuple, tol: float = 1e-4, method: str = "ellipsoid",
                 budget: int | None = None) -> CapacityReport:
    """Capacity of ``det(sum x_i A_i)``; bracket ``n!/n^n Cap <= D <= Cap``."""
    ok, cert = indecomposable(A)
    if not ok:
        raise DiscriminantError(f"tuple is decomposable (subset {cert})")
    n = A.n
    factors = [g_factor(i) for i in range(1, n + 1)]
    r = det_search_radius(A) if n > 1 else 0.0
    return minimize_objective(DeterminantObjective(A), factors, r, tol=tol, budget=budget, method=method)


# -- ellipsoids -----------------------------------------------------------------------


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


NORMALIZATIONS = ("partial-D/partial-V", "partial-D/classical-V", "classical-D/classical-V")


def barvinok_bracket(factors, normalization: str = "classical-D/classical-V") -> tuple[float, float]:
    """``3^{-(n+1)/2} v_n sqrt(D) <= V <= v_n sqrt(D)`` for ``E_i = A_i B^n``.

    ``D`` is the mixed discriminant of ``A_i A_i^T`` in the normalization
    named by the first half of ``normalization``; the second half names the
    mixed volume the bracket is meant for.
    """
    if normalization not in NORMALIZATIONS:
        raise DiscriminantError(f"unknown normalization {normalization!r}")
    F = [np.asarray(a, dtype=float) for a in factors]
    n = len(F)
    D = mixed_discriminant_polarization(MatrixTuple(tuple(a @ a.T for a in F)))
    D = max(D, 0.0)
    if normalization.startswith("classical"):
        D /= math.factorial(n)
    upper = unit_ball_volume(n) * math.sqrt(D)
    return 3.0 ** (-(n + 1) / 2) * upper, upper


def polygonal_ellipse(factor, vertices: int = 256) -> geo.VPolytope:
    """Inscribed polygon of ``factor @ unit disk``."""
    t = 2.0 * math.pi * np.arange(vertices) / vertices
    circle = np.stack([np.cos(t), np.sin(t)], axis=1)
    return geo.VPolytope(circle @ np.asarray(factor, dtype=float).T)


def random_factor(rng: np.random.Generator, n: int = 2) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return Q @ np.diag(rng.uniform(0.3, 2.0, n))


@dataclass(frozen=True)
class NormalizationResolution:
    chosen: str
    holds: dict          # convention -> number of pairs inside the bracket
    pairs: int
    rel_tol: float


def resolve_normalization(pairs: int = 20, seed: int = 0, vertices: int = 256,
                          rel_tol: float = 1e-3) -> NormalizationResolution:
    """Test each convention on random ellipse pairs via the polygon oracle.

    The tightest convention that contains every polygon mixed volume wins.
    """
    rng = np.random.default_rng(seed)
    holds = {c: 0 for c in NORMALIZATIONS}
    for _ in range(pairs):
        F = [random_factor(rng) for _ in range(2)]
        mv_partial = float(mixed_volume_polarization(BodyTuple(tuple(polygonal_ellipse(a, vertices) for a in F))).value)
        for c in NORMALIZATIONS:
            lo, hi = barvinok_bracket(F, c)
            mv = mv_partial if c.endswith("partial-V") else mv_partial / 2.0
            if lo * (1 - rel_tol) <= mv <= hi * (1 + rel_tol):
                holds[c] += 1
    valid = [c for c in NORMALIZATIONS if holds[c] == pairs]
    # classical-D gives the narrowest upper end among conventions measuring classical V
    order = ["classical-D/classical-V", "partial-D/classical-V", "partial-D/partial-V"]
    chosen = next((c for c in order if c in valid), "none")
    return NormalizationResolution(chosen, holds, pairs, rel_tol)
