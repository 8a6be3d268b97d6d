"""The acceptance suite: twelve numbered checks shared by ``mixvol selftest``
and ``tests/test_acceptance.py``.

Each check returns an ``AcceptanceResult``; nothing here loosens a tolerance
to make a check pass.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import bounds, discriminant, geometry as geo, mvexact, scaling, solver
from .capacity import PolynomialObjective
from .geometry import BodyTuple


@dataclass(frozen=True)
class AcceptanceResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.number:2d} {self.title}: {self.detail} ({self.seconds:.1f}s)"


# -- random instances -----------------------------------------------------------------


def random_box(rng, n) -> geo.Box:
    lo = rng.uniform(-1.0, 1.0, n)
    return geo.Box(lo, lo + rng.uniform(0.2, 2.0, n))


def random_zonotope(rng, n, m=None) -> geo.Zonotope:
    m = n + 1 if m is None else m
    return geo.Zonotope(rng.uniform(-1.0, 1.0, n), 0.7 * rng.normal(size=(m, n)))


def random_vpolytope(rng, n, k=None, extra=1) -> geo.VPolytope:
    """``k + 1 + extra`` random points in a random ``k``-flat (default ``k = n``)."""
    k = n if k is None else k
    pts = rng.normal(size=(k + 1 + extra, k))
    if k < n:
        Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        pts = pts @ Q[:, :k].T + rng.uniform(-1, 1, n)
    return geo.VPolytope(pts)


def random_mixed_tuple(rng, n, polytopes: int | None = None, max_tries: int = 50) -> BodyTuple:
    """Indecomposable tuple mixing boxes, zonotopes (some lower-dimensional)
    and polytopes; at most ``polytopes`` V-polytopes (hull-bound cost)."""
    if polytopes is None:
        polytopes = n if n <= 3 else (1 if n == 4 else 0)
    for _ in range(max_tries):
        bodies, used = [], 0
        for _ in range(n):
            kind = rng.integers(3) if used < polytopes else rng.integers(2)
            if kind == 0:
                bodies.append(random_box(rng, n))
            elif kind == 1:
                m = int(rng.integers(2, n + 2)) if n >= 3 else n + 1
                bodies.append(random_zonotope(rng, n, m))
            else:
                used += 1
                k = n if n <= 2 or rng.random() < 0.6 else int(rng.integers(2, n))
                bodies.append(random_vpolytope(rng, n, k, extra=1 if n >= 4 else 2))
        tup = BodyTuple(tuple(bodies))
        if solver.indecomposability_check(tup)[0]:
            return tup
    raise RuntimeError("could not draw an indecomposable tuple")


def sinkhorn_balance(M, iters: int = 10_000, tol: float = 1e-15) -> np.ndarray:
    """Alternate row and column normalization of a positive matrix."""
    A = np.array(M, dtype=float)
    for _ in range(iters):
        A /= A.sum(axis=1, keepdims=True)
        A /= A.sum(axis=0, keepdims=True)
        if np.max(np.abs(A.sum(axis=1) - 1.0)) < tol:
            break
    return A


def _timed(number: int, title: str, fn: Callable[[], tuple[bool, str]]) -> AcceptanceResult:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure, reported as such
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    return AcceptanceResult(number, title, bool(ok), detail, time.perf_counter() - t0)


def _zero_sum(rng, n, scale=1.0) -> np.ndarray:
    y = rng.normal(size=n) * scale
    return y - y.mean()


# -- the criteria -----------------------------------------------------------------------


def check_permanent(seed: int = 1) -> AcceptanceResult:
    def run():
        rng = np.random.default_rng(seed)
        t0 = time.perf_counter()
        worst = 0.0
        for _ in range(50):
            A = rng.uniform(0.0, 1.0, (4, 4))
            mv = float(mvexact.mixed_volume_polarization(geo.box_tuple(A)).value)
            perm = mvexact.permanent_ryser(A)
            worst = max(worst, abs(mv - perm) / abs(perm))
        elapsed = time.perf_counter() - t0
        return worst <= 1e-9 and elapsed < 5.0, f"max rel err {worst:.2e} (tol 1e-9), {elapsed:.2f}s (< 5s)"

    return _timed(1, "permanent equivalence", run)


def check_doubly_stochastic(seed: int = 2) -> AcceptanceResult:
    def run():
        rng = np.random.default_rng(seed)
        worst, bracket_ok = 0.0, True
        vdw = bounds.vdw_factor(3)
        for _ in range(20):
            A = sinkhorn_balance(rng.uniform(0.05, 1.0, (3, 3)))
            rep = solver.minimize_capacity(geo.box_tuple(A), tol=1e-6)
            worst = max(worst, abs(rep.cap_estimate - 1.0))
            perm = mvexact.permanent_ryser(A)
            # perm <= Cap <= cap_estimate and Cap >= cap_estimate * exp(-gap)
            bracket_ok &= vdw * rep.cap_estimate * math.exp(-rep.additive_gap) <= perm * (1 + 1e-12)
            bracket_ok &= perm <= rep.cap_estimate * (1 + 1e-12)
        return worst <= 1e-3 and bracket_ok, f"max |Cap - 1| = {worst:.2e} (tol 1e-3), VDW bracket {'holds' if bracket_ok else 'violated'}"

    return _timed(2, "doubly stochastic capacity", run)


def check_vdw_equality(seed: int = 3) -> AcceptanceResult:
    def run():
        rng = np.random.default_rng(seed)
        worst, count = 0.0, 0
        for n in (2, 3, 4):
            for _ in range(3):
                base = random_vpolytope(rng, n, extra=2) if n <= 3 else random_zonotope(rng, n, n + 1)
                a = rng.uniform(0.3, 2.0, n)
                tup = BodyTuple(tuple(geo.translate(geo.scale(base, ai), rng.uniform(-1, 1, n)) for ai in a))
                mv = float(mvexact.mixed_volume_polarization(tup).value)
                rep = solver.minimize_capacity(tup, tol=1e-8)
                target = bounds.vdw_factor(n)
                # the true ratio lies in [mv / cap_est, mv / cap_est * exp(gap)]
                lo = mv / rep.cap_estimate
                hi = lo * math.exp(rep.additive_gap)
                worst = max(worst, abs(lo - target) / target, abs(hi - target) / target)
                count += 1
        return worst <= 1e-4, f"{count} tuples, max rel dev of MV/Cap from n!/n^n {worst:.2e} (tol 1e-4)"

    return _timed(3, "VDW equality case", run)


def check_svg_sandwich(seed: int = 4) -> AcceptanceResult:
    def run():
        rng = np.random.default_rng(seed)
        plan = [2] * 30 + [3] * 34 + [4] * 30 + [5] * 6
        worst_low, worst_up, uncert = -math.inf, -math.inf, 0
        for n in plan:
            tup = random_mixed_tuple(rng, n)
            mv = float(mvexact.mixed_volume_polarization(tup).value)
            poly = mvexact.minkowski_coefficients(tup)
            factors = bounds.bound_factors(sorted(tup.aff_dims(), reverse=True)).lambdas
            rep = solver.minimize_objective(PolynomialObjective(poly), factors,
                                            solver.polynomial_search_radius(poly), tol=1e-9)
            uncert += not rep.certified
            prod = float(np.prod(factors))
            cap_hi, cap_lo = rep.cap_estimate, rep.cap_estimate * math.exp(-rep.additive_gap)
            # Cap lies in [cap_lo, cap_hi]; test the sandwich at the adverse end of that interval
            worst_low = max(worst_low, (prod * cap_hi - mv) / mv)
            worst_up = max(worst_up, (mv - cap_lo) / mv)
        ok = worst_low <= 1e-6 and worst_up <= 1e-6
        return ok, (f"{len(plan)} tuples; max rel excess: lower side {worst_low:.2e}, upper side "
                    f"{worst_up:.2e} (slack 1e-6); {uncert} runs stopped on budget")

    return _timed(4, "S-V-G sandwich", run)


def check_lambda(nmax: int = 30) -> AcceptanceResult:
    def run():
        worst = 0.0
        for k in range(2, nmax + 1):
            worst = max(worst, abs(bounds.lambda_factor(k, k, numeric=True) - bounds.g_factor(k)))
        for n in range(2, nmax + 1):
            closed = 1.0 / (1.0 + math.sqrt(2.0) * math.sqrt((n - 1) / n))
            worst = max(worst, abs(bounds.lambda_factor(n, 2, numeric=True) - closed))
        exact = all(
            math.prod((bounds.g_factor_exact(k) for k in range(1, n + 1)), start=Fraction(1))
            == Fraction(math.factorial(n), n**n)
            for n in range(1, 13)
        )
        return worst <= 1e-10 and exact, f"max |closed - numeric| {worst:.1e} (tol 1e-10); prod g(k) = n!/n^n exactly: {exact}"

    return _timed(5, "lambda closed forms", run)


def check_af_newton(seed: int = 6) -> AcceptanceResult:
    def run():
        rng = np.random.default_rng(seed)
        worst, af_ok = -math.inf, True
        for t in range(100):
            n = 2 + t % 3
            tup = random_mixed_tuple(rng, n, polytopes=n if n <= 3 else 1)
            K1, K2 = tup[0], tup[1]
            v12 = float(mvexact.mixed_volume_polarization(tup).value)
            v11 = float(mvexact.mixed_volume_polarization(tup.replaced(1, K1)).value)
            v22 = float(mvexact.mixed_volume_polarization(tup.replaced(0, K2)).value)
            scale = max(v12 * v12, v11 * v22, 1e-300)
            excess = (v11 * v22 - v12 * v12) / scale
            worst = max(worst, excess)
            af_ok &= excess <= 1e-8
        newton_ok, cases = True, 0
        for t in range(30):
            n = 3 + t % 2
            i = int(rng.integers(0, n - 1))
            m = n - i
            rest = [random_box(rng, n) if rng.random() < 0.5 else random_zonotope(rng, n) for _ in range(i)]
            S, T = random_zonotope(rng, n), random_box(rng, n)
            a = []
            for j in range(m + 1):
                bodies = rest + [S] * (m - j) + [T] * j
                a.append(float(mvexact.mixed_volume_polarization(BodyTuple(tuple(bodies))).value))
            # U(t) = sum_j C(m, j) a_j t^j, with a_j in the classical normalization
            coeffs = [math.comb(m, j) * a[j] / math.factorial(n) for j in range(m + 1)]
            newton_ok &= bounds.newton_check(coeffs, m)
            cases += 1
        return af_ok and newton_ok, (f"AF max rel excess {worst:.2e} (slack 1e-8) on 100 tuples; "
                                     f"{cases} two-set polynomials n-Newton: {newton_ok}")

    return _timed(6, "Alexandrov-Fenchel and n-Newton", run)


def check_solver(seed: int = 7, instances: int = 5) -> AcceptanceResult:
    def run():
        rng = np.random.default_rng(seed)
        worst_grid, worst_pg, slowest = 0.0, 0.0, 0.0
        for _ in range(instances):
            tup = random_mixed_tuple(rng, 3)
            t0 = time.perf_counter()
            ell = solver.minimize_capacity(tup, tol=1e-6)
            pg = solver.minimize_capacity(tup, tol=1e-6, method="pg")
            slowest = max(slowest, time.perf_counter() - t0)
            f_ell, f_pg = math.log(ell.cap_estimate), math.log(pg.cap_estimate)
            worst_pg = max(worst_pg, abs(f_ell - f_pg) / (2 * max(ell.tol, pg.tol)))
            f_grid = _grid_minimum(tup, ell.radius)
            worst_grid = max(worst_grid, abs(f_ell - f_grid))
        ok = worst_grid <= 1e-3 and worst_pg <= 1.0 and slowest < 60.0
        return ok, (f"|f_ell - f_grid| max {worst_grid:.2e} (tol 1e-3); |f_ell - f_pg| / (2 tol) max "
                    f"{worst_pg:.2f} (<= 1); slowest solve {slowest:.1f}s (< 60s)")

    return _timed(7, "solver correctness", run)


def _grid_minimum(tup: BodyTuple, radius: float, step: float = 0.01) -> float:
    """Minimum of ``log V_K(e^y)`` on the grid ``y_1, y_2 in step Z``, ``y_3 = -y_1 - y_2``,
    within the search ball; confirmed at the minimizer by a direct volume call."""
    poly = mvexact.minkowski_coefficients(tup)
    E, c = poly.arrays()
    axis = np.arange(-radius, radius + step / 2, step)
    best, arg = math.inf, None
    for y1 in axis:
        y2 = axis
        Y = np.stack([np.full_like(y2, y1), y2, -y1 - y2], axis=1)
        inside = np.linalg.norm(Y, axis=1) <= radius
        if not inside.any():
            continue
        Y = Y[inside]
        vals = np.log(np.exp(Y @ E.T) @ c)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, arg = float(vals[k]), Y[k]
    direct = math.log(mvexact.tuple_volume(tup, np.exp(arg)))
    if abs(direct - best) > 1e-8:
        raise RuntimeError(f"grid polynomial disagrees with the volume oracle ({direct} vs {best})")
    return direct


def check_noisy_bracket(seed: int = 8, tuples: int = 10, runs: int = 20, samples: int = 100_000) -> AcceptanceResult:
    def run():
        rng = np.random.default_rng(seed)
        rates = []
        for _ in range(tuples):
            A = rng.uniform(0.1, 1.0, (3, 3))
            tup = geo.box_tuple(A)
            perm = mvexact.permanent_ryser(A)
            hits = 0
            for s in range(runs):
                rep = solver.approx_mixed_volume(tup, tol=1e-3, mode="mc", seed=s, samples=samples)
                hits += rep.mv_lower <= perm <= rep.mv_upper * math.exp(rep.additive_gap)
            rates.append(hits / runs)
        return min(rates) >= 0.75, f"per-tuple coverage min {min(rates):.2f}, mean {np.mean(rates):.2f} (need >= 0.75)"

    return _timed(8, "noisy-oracle bracket", run)


def check_sinkhorn(seed: int = 9, instances: int = 50) -> AcceptanceResult:
    def run():
        rng = np.random.default_rng(seed)
        worst_rise, worst_ratio, checks = -math.inf, 0.0, 0
        for t in range(instances):
            n = 2 + t % 3
            tup = random_mixed_tuple(rng, n, polytopes=n if n <= 3 else 0)
            f = scaling.minkowski_functional(tup)
            traj = scaling.sinkhorn_iterate(f, np.exp(_zero_sum(rng, n)), max_iters=25, tol=1e-10)
            vals = traj.values
            rises = [(b - a) / max(abs(a), 1.0) for a, b in zip(vals, vals[1:])]
            worst_rise = max([worst_rise] + rises)
            rep = solver.minimize_capacity(tup, tol=1e-6)
            floor = math.log(rep.cap_estimate) - rep.additive_gap   # certified lower bound on log Cap
            ystar = np.array(rep.minimizer_y)
            candidates = [ystar] + [ystar + _zero_sum(rng, n, 10.0 ** -k) for k in (2, 3, 4)]
            candidates += [np.log(s.x) for s in traj.states[-3:]]
            for y in candidates:
                st = scaling.state_at(f, np.exp(y))
                eps = math.log(st.f_value) - floor
                if not 0 < eps <= 0.1:
                    continue
                ok, measured = scaling.near_optimality_check(st, eps)
                worst_ratio = max(worst_ratio, measured / (10 * eps))
                checks += 1
        ok = worst_rise <= 1e-9 and worst_ratio <= 1.0
        return ok, (f"max relative rise along iterations {worst_rise:.1e} (slack 1e-9); "
                    f"{checks} near-minimizers, max sum(1-gamma)^2 / 10 eps = {worst_ratio:.3f} (<= 1)")

    return _timed(9, "Sinkhorn monotonicity", run)


def check_second_derivative(seed: int = 10, instances: int = 100) -> AcceptanceResult:
    def run():
        rng = np.random.default_rng(seed)
        worst_hi, worst_lo = -math.inf, math.inf
        for t in range(instances):
            n = 2 + t % 3
            tup = random_mixed_tuple(rng, n, polytopes=n if n <= 3 else 1)
            i = int(rng.integers(n))
            y = _zero_sum(rng, n, 1.0)
            probe = scaling.second_derivative_probe(tup, i, y)
            cap = min(tup.aff_dims()[i], n / 4.0 + 1e-3)
            worst_hi = max(worst_hi, probe.estimate - cap)
            worst_lo = min(worst_lo, probe.estimate)
        # the finite difference carries ~1e-7 rounding noise, allowed below zero only
        ok = worst_hi <= 0.0 and worst_lo >= -1e-6
        return ok, f"max q'' - min(aff, n/4 + 1e-3) = {worst_hi:.2e} (<= 0); min q'' = {worst_lo:.2e}"

    return _timed(10, "second-derivative bounds", run)


def check_bkk(seed: int = 11) -> AcceptanceResult:
    def run():
        rng = np.random.default_rng(seed)
        worst_int, worst_deg, count = 0.0, -math.inf, 0
        for n in (2, 3, 4):
            for _ in range(10 if n < 4 else 6):
                polys = [geo.VPolytope(rng.integers(0, 3 if n == 4 else 4, size=(n + 2, n)).astype(float))
                         for _ in range(n)]
                tup = BodyTuple(tuple(polys))
                mv = float(mvexact.mixed_volume_polarization(tup).value)
                worst_int = max(worst_int, abs(mv - round(mv)))
                _, prod = bounds.newton_polytope_degrees(polys)
                worst_deg = max(worst_deg, mv - prod)
                count += 1
        ok = worst_int <= 1e-6 and worst_deg <= 1e-6
        return ok, f"{count} tuples; max distance to an integer {worst_int:.1e} (tol 1e-6); max MV - prod d(i) {worst_deg:.2f} (<= 0)"

    return _timed(11, "BKK integrality", run)


def check_barvinok(seed: int = 12, pairs: int = 20) -> AcceptanceResult:
    def run():
        res = discriminant.resolve_normalization(pairs=pairs, seed=seed)
        if res.chosen == "none":
            return False, f"no convention holds on all pairs: {res.holds}"
        rng = np.random.default_rng(seed + 1000)
        inside = 0
        for _ in range(pairs):
            F = [discriminant.random_factor(rng) for _ in range(2)]
            mv = float(mvexact.mixed_volume_polarization(
                BodyTuple(tuple(discriminant.polygonal_ellipse(a) for a in F))).value)
            if res.chosen.endswith("classical-V"):
                mv /= 2.0
            lo, hi = discriminant.barvinok_bracket(F, res.chosen)
            inside += lo * (1 - res.rel_tol) <= mv <= hi * (1 + res.rel_tol)
        return inside == pairs, f"resolved '{res.chosen}' (per-convention hits {res.holds}); fresh pairs inside: {inside}/{pairs}"

    return _timed(12, "Barvinok bracket", run)


CHECKS = [
    check_permanent, check_doubly_stochastic, check_vdw_equality, check_svg_sandwich, check_lambda,
    check_af_newton, check_solver, check_noisy_bracket, check_sinkhorn, check_second_derivative,
    check_bkk, check_barvinok,
]


def run_all(numbers=None, echo: Callable[[str], None] | None = None) -> list[AcceptanceResult]:
    out = []
    for k, check in enumerate(CHECKS, start=1):
        if numbers and k not in numbers:
            continue
        res = check()
        if echo:
            echo(res.line())
        out.append(res)
    return out


__all__ = ["AcceptanceResult", "CHECKS", "run_all", "random_mixed_tuple", "sinkhorn_balance"]
