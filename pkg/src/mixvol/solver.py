"""Decomposition, the a-priori search ball and certified capacity minimization."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry as geo
from ._util import zero_sum_basis
from .bounds import bound_factors
from .capacity import EXACT_GRAD_ERR, MinkowskiObjective, ObjectiveError
from .geometry import BodyTuple
from .mvexact import mixed_volume_polarization, tuple_volume

SUBSET_CAP = 15
KIJ_CAP = 10
KIJ_ATOL = 1e-12
MAX_DOUBLINGS = 10
BOUNDARY_FRACTION = 0.99
MC_TOTAL_FAILURE = 0.25
NOISE_SHARE = 0.2


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class CapacityReport:
    cap_estimate: float
    minimizer_y: tuple
    additive_gap: float
    mv_lower: float
    mv_upper: float
    factors: tuple
    oracle_mode: str
    iterations: int
    seed: int
    certified: bool
    method: str = "ellipsoid"
    tol: float = 0.0
    var_hat: float = 0.0
    radius: float = 0.0
    zero: bool = False
    calls: dict = field(default_factory=dict)
    blocks: tuple = ()

    def __post_init__(self):
        if self.mv_lower > self.mv_upper * (1 + 1e-12):
            raise SolverError("report bracket is inverted")

    @property
    def log_cap(self) -> float:
        return math.log(self.cap_estimate) if self.cap_estimate > 0 else -math.inf

    def to_dict(self) -> dict:
        d = asdict(self)
        d["minimizer_y"] = list(self.minimizer_y)
        d["factors"] = list(self.factors)
        d["blocks"] = [list(b) for b in self.blocks]
        return d


@dataclass(frozen=True)
class DecompositionResult:
    blocks: tuple          # (indices, basis) with basis an n x k matrix of orthonormal columns
    certificate: tuple     # violating subsets, in extraction order
    zero: bool = False

    @property
    def sizes(self) -> list[int]:
        return [len(ix) for ix, _ in self.blocks]


# -- affine dimensions of partial sums ------------------------------------------


def _directions(tup: BodyTuple) -> list[np.ndarray]:
    return [np.asarray(geo.direction_vectors(b), dtype=float).reshape(-1, tup.n) for b in tup]


def _sum_rank(dirs, S) -> int:
    M = np.vstack([dirs[i] for i in S])
    return geo.numeric_rank(M) if len(M) else 0


def indecomposability_check(tup: BodyTuple) -> tuple[bool, tuple | None]:
    """True iff ``aff(sum_S K_i) > |S|`` for every proper nonempty ``S``.

    The certificate is the first violating subset (smallest first), or None.
    """
    n = tup.n
    if n > SUBSET_CAP:
        raise SolverError(f"brute-force subset search is limited to n <= {SUBSET_CAP}")
    dirs = _directions(tup)
    for size in range(1, n):
        for S in itertools.combinations(range(n), size):
            if _sum_rank(dirs, S) <= size:
                return False, S
    return True, None


def kij_values(tup: BodyTuple) -> np.ndarray:
    """``V(K^{ij})``: the mixed volume with ``K_j`` replaced by ``K_i``."""
    n = tup.n
    if n > KIJ_CAP:
        raise SolverError(f"K^ij tuples are limited to n <= {KIJ_CAP}")
    V = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            if i != j:
                V[i, j] = float(mixed_volume_polarization(tup.replaced(j, tup[i])).value)
    return V


def kij_positivity(tup: BodyTuple) -> np.ndarray:
    V = kij_values(tup)
    out = np.zeros((tup.n, tup.n), dtype=bool)
    off = ~np.eye(tup.n, dtype=bool)
    out[off] = V[off] > KIJ_ATOL
    return out


def _span_basis(M: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of the row span of ``M`` (rank ``k``) and its complement."""
    n = M.shape[1]
    _, _, vt = np.linalg.svd(M, full_matrices=True) if len(M) else (None, None, np.eye(n))
    return vt[:k].T, vt[k:].T


def decompose(tup: BodyTuple) -> DecompositionResult:
    """Split off minimal violating subsets recursively.

    Bodies in ``S`` are restricted to the span ``W`` of their sum; the others
    are projected onto ``W``'s orthogonal complement.  With orthonormal bases
    the mixed volume (derivative normalization) is the product of the blocks.
    """
    if tup.n > SUBSET_CAP:
        raise SolverError(f"brute-force subset search is limited to n <= {SUBSET_CAP}")
    blocks, cert = [], []
    zero = _decompose(tup, list(range(tup.n)), np.eye(tup.n), blocks, cert)
    return DecompositionResult(tuple(blocks), tuple(cert), zero)


def _decompose(tup, labels, basis, blocks, cert) -> bool:
    n = tup.n
    dirs = _directions(tup)
    for size in range(1, n):
        for S in itertools.combinations(range(n), size):
            rank = _sum_rank(dirs, S)
            if rank > size:
                continue
            cert.append(tuple(labels[i] for i in S))
            if rank < size:
                return True
            M = np.vstack([dirs[i] for i in S])
            W, Wc = _span_basis(M, size)
            rest = [i for i in range(n) if i not in S]
            inner = BodyTuple(tuple(geo.linear_map(tup[i], W.T) for i in S))
            outer = BodyTuple(tuple(geo.linear_map(tup[i], Wc.T) for i in rest))
            if _decompose(inner, [labels[i] for i in S], basis @ W, blocks, cert):
                return True
            return _decompose(outer, [labels[i] for i in rest], basis @ Wc, blocks, cert)
    if _sum_rank(dirs, range(n)) < n:
        cert.append(tuple(labels))
        return True
    blocks.append((tuple(labels), basis))
    return False


def block_tuple(tup: BodyTuple, block) -> BodyTuple:
    """The bodies of one block, written in the block's coordinates."""
    idx, basis = block
    if basis.shape == (tup.n, tup.n) and np.array_equal(basis, np.eye(tup.n)):
        return tup
    return BodyTuple(tuple(geo.linear_map(tup[i], basis.T) for i in idx),
                     tuple(tup.labels[i] for i in idx))


def search_radius(tup: BodyTuple) -> float:
    """``sqrt(n) log(2 U / Stf)``, ``U = V_K(1,...,1)``, ``Stf = min V(K^{ij})``."""
    n = tup.n
    if n == 1:
        return 0.0
    V = kij_values(tup)
    stf = float(np.nanmin(V))
    if stf <= 0:
        raise SolverError("Stf <= 0: the tuple is decomposable")
    U = float(tuple_volume(tup, [1.0] * n))
    return math.sqrt(n) * math.log(max(2.0 * U / stf, math.e))


def polynomial_search_radius(poly) -> float:
    """The same radius read off a coefficient table: ``V(K^{ij})`` is twice
    the coefficient of ``x_i^2 prod_{k != i, j} x_k``."""
    n = poly.n
    if n == 1:
        return 0.0
    stf = math.inf
    for i in range(n):
        for j in range(n):
            if i != j:
                alpha = [1] * n
                alpha[i], alpha[j] = 2, 0
                stf = min(stf, 2.0 * float(poly.coefficient(alpha)))
    if stf <= 0:
        raise SolverError("Stf <= 0: the polynomial is decomposable")
    U = float(poly(np.ones(n)))
    return math.sqrt(n) * math.log(max(2.0 * U / stf, math.e))


# -- minimization -----------------------------------------------------------------


@dataclass
class _Trace:
    best_f: float = math.inf
    best_u: np.ndarray | None = None
    cut_floor: float = math.inf     # min over cut points of a lower bound on f there
    lower: float = -math.inf        # max over ellipsoids of the linear lower bound
    a_max: float = 0.0
    eta_max: float = 0.0
    iterations: int = 0

    def bound(self) -> float:
        return min(self.cut_floor, self.lower)

    def gap(self) -> float:
        return self.best_f + self.a_max - self.bound()


def _var_hat(fval, B, r, n) -> float:
    """Twice the spread of ``f`` over 2n boundary points of the search ball and
    its center (the center keeps symmetric tuples from giving zero)."""
    vals = [fval(np.zeros(B.shape[1]))]
    for i in range(n):
        e = np.full(n, -1.0 / n)
        e[i] += 1.0
        u = B.T @ e
        u *= r / np.linalg.norm(u)
        vals += [fval(u), fval(-u)]
    return 2.0 * (max(vals) - min(vals))


def default_budget(n: int, eps: float, r: float) -> int:
    d = max(n - 1, 1)
    return int(math.ceil(8 * (d + 1) ** 2 * (math.log(1.0 / eps) + math.log(n * r + 1.0) + 5.0)))


def _ellipsoid(fg, d, r, tol, budget, trace: _Trace):
    c = np.zeros(d)
    P = np.eye(d) * r * r
    for _ in range(budget):
        trace.iterations += 1
        norm_c = float(np.linalg.norm(c))
        if norm_c > r:
            g = c / norm_c
        else:
            f, a, g, eta = fg(c)
            trace.a_max = max(trace.a_max, a)
            trace.eta_max = max(trace.eta_max, eta)
            if f < trace.best_f:
                trace.best_f, trace.best_u = f, c.copy()
            slack = a + eta * (norm_c + r)
            width = math.sqrt(max(float(g @ P @ g), 0.0))
            trace.cut_floor = min(trace.cut_floor, f - slack)
            trace.lower = max(trace.lower, f - width - slack)
            if trace.gap() <= tol:
                return True
            if width == 0.0:
                return trace.gap() <= tol
        Pg = P @ g
        gPg = float(g @ Pg)
        if gPg <= 0:
            break
        gt = Pg / math.sqrt(gPg)
        if d == 1:
            c = c - gt / 2.0
            P = P / 4.0
        else:
            c = c - gt / (d + 1)
            P = d * d / (d * d - 1.0) * (P - 2.0 / (d + 1) * np.outer(gt, gt))
            P = 0.5 * (P + P.T)
    return trace.gap() <= tol


def _projected_gradient(fg, d, r, tol, budget, trace: _Trace):
    u = np.zeros(d)
    f, a, g, eta = fg(u)
    step = 1.0
    for _ in range(budget):
        trace.iterations += 1
        trace.a_max = max(trace.a_max, a)
        trace.eta_max = max(trace.eta_max, eta)
        if f < trace.best_f:
            trace.best_f, trace.best_u = f, u.copy()
        gn = float(np.linalg.norm(g))
        # convexity: f(u) - f* <= |g| |u - u*| <= |g| (|u| + r)
        trace.lower = max(trace.lower, f - a - (gn + eta) * (float(np.linalg.norm(u)) + r))
        if trace.gap() <= tol or gn == 0.0:
            break
        while True:
            v = u - step * g
            nv = float(np.linalg.norm(v))
            if nv > r:
                v *= r / nv
            fv, av, gv, etav = fg(v)
            if fv <= f - 0.5 * float(g @ (u - v)) or step < 1e-14:
                break
            step *= 0.5
        u, f, a, g, eta = v, fv, av, gv, etav
        step *= 2.0
    return trace.gap() <= tol


def minimize_capacity(tup: BodyTuple, tol: float = 1e-4, mode: str = "exact", budget: int | None = None,
                      seed: int = 0, method: str = "ellipsoid", samples: int = 100_000,
                      radius: float | None = None) -> CapacityReport:
    """Minimize ``log V_K(e^y)`` over ``sum(y) = 0`` with a certified gap.

    The target is ``additive_gap <= tol * Var``, ``Var`` estimated on the
    search ball.  In mc mode the run is certified only if the oracle noise
    stays within the share of the target the contract allows.
    """
    obj = MinkowskiObjective(tup, mode=mode, samples=samples, seed=seed)
    factors = bound_factors(sorted(tup.aff_dims(), reverse=True)).lambdas
    if radius is None and tup.n > 1:
        radius = search_radius(tup)
    return minimize_objective(obj, factors, radius or 0.0, tol=tol, budget=budget, seed=seed, method=method)


def minimize_objective(obj, factors, radius: float, tol: float = 1e-4, budget: int | None = None,
                       seed: int = 0, method: str = "ellipsoid") -> CapacityReport:
    """Shared driver: any objective with ``n``, ``value`` and ``gradient``."""
    if not 0 < tol < 1:
        raise SolverError("tol must lie in (0, 1)")
    if method not in ("ellipsoid", "pg"):
        raise SolverError(f"unknown method {method!r}")
    n = obj.n
    mode = getattr(obj, "mode", "exact")
    factors = tuple(float(f) for f in factors)

    if n == 1:
        f, q = obj.value(np.zeros(1))
        cap = math.exp(f)
        return CapacityReport(cap, (0.0,), q.value_err, cap * math.exp(-q.value_err), cap, factors,
                              mode, 0, seed, True, method, tol, 0.0, 0.0, calls=dict(obj.calls))

    r = float(radius)
    B = zero_sum_basis(n)
    d = n - 1
    if budget is None:
        budget = default_budget(n, tol, r)
    if mode == "mc":
        obj.failure_prob = MC_TOTAL_FAILURE / ((budget + 2 * n) * (n + 1) * (MAX_DOUBLINGS + 1))

    def fval(u):
        return obj.value(B @ u)[0]

    def fg(u):
        y = B @ u
        f, q = obj.value(y)
        gamma, eta = obj.gradient(y, value=(f, q.value_err))
        return f, q.value_err, B.T @ gamma, eta

    for _ in range(MAX_DOUBLINGS + 1):
        var = _var_hat(fval, B, r, n)
        target = tol * var
        trace = _Trace()
        run = _ellipsoid if method == "ellipsoid" else _projected_gradient
        ok = run(fg, d, r, target, budget, trace)
        if trace.best_u is None:
            raise SolverError("no feasible center was evaluated")
        if float(np.linalg.norm(trace.best_u)) < BOUNDARY_FRACTION * r:
            break
        r *= 2.0
    if mode == "mc":
        ok = ok and trace.a_max <= NOISE_SHARE * target and trace.eta_max * r <= NOISE_SHARE * target
    gap = trace.gap()
    cap = math.exp(trace.best_f)
    prod = float(np.prod(factors))
    y = B @ trace.best_u
    return CapacityReport(
        cap_estimate=cap,
        minimizer_y=tuple(float(v) for v in y),
        additive_gap=float(gap),
        mv_lower=cap * prod * math.exp(-gap),
        mv_upper=cap,
        factors=factors,
        oracle_mode=mode,
        iterations=trace.iterations,
        seed=seed,
        certified=bool(ok),
        method=method,
        tol=float(target),
        var_hat=float(var),
        radius=float(r),
        calls=dict(obj.calls),
    )


def approx_mixed_volume(tup: BodyTuple, tol: float = 1e-4, mode: str = "exact", seed: int = 0,
                        method: str = "ellipsoid", samples: int = 100_000,
                        budget: int | None = None) -> CapacityReport:
    """Decompose, minimize per block and multiply.

    Guarantee: ``mv_lower <= MV <= mv_upper * exp(additive_gap)`` (derivative
    normalization of the mixed volume).
    """
    dec = decompose(tup)
    blocks = tuple(tuple(ix) for ix, _ in dec.blocks)
    if dec.zero:
        return CapacityReport(0.0, tuple([0.0] * tup.n), 0.0, 0.0, 0.0, (), mode, 0, seed, True, method,
                              zero=True, blocks=tuple(dec.certificate))
    cap, gap, factors, its, ok = 1.0, 0.0, [], 0, True
    calls: dict = {}
    y = np.zeros(tup.n)
    for k, block in enumerate(dec.blocks):
        sub = block_tuple(tup, block)
        rep = minimize_capacity(sub, tol=tol, mode=mode, seed=seed + k, method=method,
                                samples=samples, budget=budget)
        cap *= rep.cap_estimate
        gap += rep.additive_gap
        factors += list(rep.factors)
        its += rep.iterations
        ok = ok and rep.certified
        for key, v in rep.calls.items():
            calls[key] = calls.get(key, 0) + v
        # each block's coordinates are determined up to a shift; keep them zero-sum overall
        y[list(block[0])] = rep.minimizer_y
    prod = float(np.prod(factors)) if factors else 1.0
    return CapacityReport(cap, tuple(float(v) for v in y), gap, cap * prod * math.exp(-gap), cap, tuple(factors),
                          mode, its, seed, ok, method, calls=calls, blocks=blocks)


def exact_mixed_volume(tup: BodyTuple) -> float:
    """Polarization value as a float, for cross-checks."""
    return float(mixed_volume_polarization(tup).value)


__all__ = [
    "CapacityReport", "DecompositionResult", "SolverError", "ObjectiveError", "EXACT_GRAD_ERR",
    "indecomposability_check", "kij_values", "kij_positivity", "decompose", "block_tuple",
    "search_radius", "polynomial_search_radius", "minimize_capacity", "minimize_objective", "approx_mixed_volume", "exact_mixed_volume",
]
