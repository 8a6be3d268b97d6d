"""Explicit convex bodies: boxes, zonotopes and vertex polytopes.

All bodies are immutable.  Float coordinates are the default; boxes and
zonotopes also accept :class:`fractions.Fraction` entries, in which case
volumes and Minkowski combinations are carried out in exact arithmetic.

A zonotope is ``center + sum_j t_j * g_j`` with ``t_j`` in ``[0, 1]``, so a
single generator is the segment ``[center, center + g]``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError

MAX_DIM = 8
VERTEX_BUDGET = 20_000
# raw candidate points formed before one hull reduction
CANDIDATE_BUDGET = 2_000_000
RANK_RTOL = 1e-10


class GeometryError(ValueError):
    pass


class DimensionMismatch(GeometryError):
    pass


class RepresentationBlowup(GeometryError):
    pass


class DegenerateBody(GeometryError):
    pass


def _is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


def _coerce(values, ndim: int) -> np.ndarray:
    """Float array, or an object array of Fractions when every entry is rational
    and at least one is a Fraction."""
    raw = np.asarray(values, dtype=object)
    flat = list(raw.flat)
    rational = all(isinstance(v, (Fraction, int)) and not isinstance(v, bool) for v in flat)
    if flat and rational and any(isinstance(v, Fraction) for v in flat):
        out = np.empty(raw.shape, dtype=object)
        for idx, v in np.ndenumerate(raw):
            out[idx] = Fraction(v)
    else:
        out = np.asarray(values, dtype=float)
    if ndim == 2 and out.size == 0:
        out = out.reshape(0, 0)
    if out.ndim != ndim:
        raise GeometryError(f"expected a {ndim}-d coordinate array, got shape {out.shape}")
    return out


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _coerce(self.lower, 1)
        hi = _coerce(self.upper, 1)
        if _is_exact(lo) != _is_exact(hi):
            lo, hi = lo.astype(float), hi.astype(float)
        if lo.shape != hi.shape:
            raise DimensionMismatch("box bounds differ in length")
        if any(l > u for l, u in zip(lo, hi)):
            raise GeometryError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", _readonly(lo))
        object.__setattr__(self, "upper", _readonly(hi))

    @property
    def ambient_dim(self) -> int:
        return len(self.lower)

    @property
    def exact(self) -> bool:
        return _is_exact(self.lower)


def _match_exactness(a: np.ndarray, b: np.ndarray):
    # integer-valued floats join the exact side; anything else goes float
    fl = b if _is_exact(a) else a
    if np.all(np.isfinite(fl)) and np.all(fl == np.round(fl)):
        promoted = np.vectorize(lambda v: Fraction(int(v)), otypes=[object])(fl) if fl.size else fl.astype(object)
        return (a, promoted) if fl is b else (promoted, b)
    return a.astype(float), b.astype(float)


@dataclass(frozen=True, eq=False)
class Zonotope:
    center: np.ndarray
    generators: np.ndarray = field(default=None)

    def __post_init__(self):
        c = _coerce(self.center, 1)
        gens = self.generators
        if gens is None or len(gens) == 0:
            g = np.zeros((0, len(c)), dtype=c.dtype)
        else:
            g = _coerce(gens, 2)
        if _is_exact(c) != _is_exact(g) and len(g):
            c, g = _match_exactness(c, g)
        if g.shape[1] != len(c):
            raise DimensionMismatch("generator length differs from center length")
        object.__setattr__(self, "center", _readonly(c))
        object.__setattr__(self, "generators", _readonly(g))

    @property
    def ambient_dim(self) -> int:
        return len(self.center)

    @property
    def exact(self) -> bool:
        return _is_exact(self.center)


@dataclass(frozen=True, eq=False)
class VPolytope:
    """Convex hull of a finite point set; only extreme points are stored."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or len(v) == 0:
            raise GeometryError("vertex list must be a nonempty 2-d array")
        pts, vol = _extreme_points_and_volume(v)
        object.__setattr__(self, "vertices", _readonly(pts))
        object.__setattr__(self, "_volume", vol)

    @classmethod
    def _trusted(cls, vertices: np.ndarray, volume: float | None = None) -> "VPolytope":
        """Wrap points already known to be the extreme points (affine images)."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "vertices", _readonly(np.array(vertices, dtype=float)))
        object.__setattr__(obj, "_volume", volume)
        return obj

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def exact(self) -> bool:
        return False


ConvexBody = Union[Box, Zonotope, VPolytope]


@dataclass(frozen=True)
class BodyTuple:
    bodies: tuple
    labels: tuple = ()

    def __post_init__(self):
        bodies = tuple(self.bodies)
        n = len(bodies)
        if n == 0:
            raise GeometryError("empty body tuple")
        for b in bodies:
            if b.ambient_dim != n:
                raise DimensionMismatch(
                    f"tuple of {n} bodies needs ambient dimension {n}, got {b.ambient_dim}"
                )
        labels = tuple(self.labels) or tuple(f"K{i + 1}" for i in range(n))
        if len(labels) != n:
            raise GeometryError("label count differs from body count")
        object.__setattr__(self, "bodies", bodies)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.bodies)

    def __len__(self):
        return len(self.bodies)

    def __getitem__(self, i):
        return self.bodies[i]

    def __iter__(self):
        return iter(self.bodies)

    def aff_dims(self) -> list[int]:
        return [affine_dimension(b) for b in self.bodies]

    def permuted(self, perm: Sequence[int]) -> "BodyTuple":
        return BodyTuple(tuple(self.bodies[p] for p in perm), tuple(self.labels[p] for p in perm))

    def replaced(self, j: int, body: ConvexBody) -> "BodyTuple":
        bodies = list(self.bodies)
        bodies[j] = body
        return BodyTuple(tuple(bodies), self.labels)


# -- constructors -----------------------------------------------------------


def segment(a, b) -> Zonotope:
    a = np.asarray(a, dtype=float)
    return Zonotope(a, [np.asarray(b, dtype=float) - a])


def simplex(n: int, scale: float = 1.0) -> VPolytope:
    return VPolytope(np.vstack([np.zeros(n), scale * np.eye(n)]))


def box_tuple(A) -> BodyTuple:
    """Row i of ``A`` gives the box ``prod_j [0, A[i, j]]``."""
    A = np.asarray(A, dtype=object if _has_fraction(A) else float)
    n = A.shape[0]
    zero = Fraction(0) if A.dtype == object else 0.0
    return BodyTuple(tuple(Box([zero] * n, A[i]) for i in range(n)))


def _has_fraction(A) -> bool:
    return any(isinstance(v, Fraction) for v in np.asarray(A, dtype=object).flat)


# -- linear algebra helpers ---------------------------------------------------


def _fraction_rank(rows: list[list[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(m)) if m[r][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][col] != 0:
                f = m[r][col] / m[rank][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def fraction_det(M) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    m = [[Fraction(v) for v in row] for row in M]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return det


def numeric_rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    if _is_exact(M):
        return _fraction_rank(M.tolist())
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0] * max(M.shape)))


def affine_frame(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Origin and orthonormal basis (columns) of the affine hull of ``points``."""
    origin = points[0]
    diffs = points - origin
    if len(points) == 1 or not np.any(diffs):
        return origin, np.zeros((points.shape[1], 0))
    _, s, vt = np.linalg.svd(diffs, full_matrices=False)
    k = int(np.sum(s > RANK_RTOL * s[0] * max(diffs.shape)))
    return origin, vt[:k].T


def _hull(points) -> ConvexHull:
    """Qhull, retried with joggled input when facet merging fails on
    near-degenerate sums."""
    try:
        return ConvexHull(points)
    except QhullError:
        return ConvexHull(points, qhull_options="QJ")


def extreme_points(points: np.ndarray) -> np.ndarray:
    """Extreme points of the hull of ``points``, in input order."""
    return _extreme_points_and_volume(points)[0]


def _extreme_points_and_volume(points: np.ndarray) -> tuple[np.ndarray, float | None]:
    """Extreme points, plus the hull volume when it came for free (full dimension)."""
    vol = None
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) > CANDIDATE_BUDGET:
        raise RepresentationBlowup(f"{len(pts)} candidate points exceed the budget")
    origin, basis = affine_frame(pts)
    k = basis.shape[1]
    if k == 0:
        out = pts[:1]
    elif k == 1:
        t = (pts - origin) @ basis[:, 0]
        out = pts[[int(np.argmin(t)), int(np.argmax(t))]]
    elif len(pts) <= k + 1:
        out = pts
    else:
        coords = (pts - origin) @ basis
        hull = _hull(coords)
        out = pts[np.sort(hull.vertices)]
        if k == pts.shape[1]:
            # orthonormal change of frame preserves volume
            vol = float(hull.volume)
    if len(out) > VERTEX_BUDGET:
        raise RepresentationBlowup(f"{len(out)} extreme points exceed the vertex budget {VERTEX_BUDGET}")
    return out, vol


# -- body operations ----------------------------------------------------------


def _check_dim(n: int):
    if n > MAX_DIM:
        raise GeometryError(f"ambient dimension {n} above the supported cap {MAX_DIM}")


def direction_vectors(body: ConvexBody) -> np.ndarray:
    """Vectors spanning the linear space parallel to the affine hull."""
    if isinstance(body, Box):
        w = body.upper - body.lower
        n = body.ambient_dim
        rows = [[w[j] if i == j else w[j] * 0 for i in range(n)] for j in range(n) if w[j] != 0]
        if not rows:
            return np.zeros((0, n))
        return np.array(rows, dtype=object if body.exact else float)
    if isinstance(body, Zonotope):
        return body.generators
    return body.vertices[1:] - body.vertices[0]


def affine_dimension(body: ConvexBody) -> int:
    return numeric_rank(direction_vectors(body))


def corners(body: ConvexBody) -> np.ndarray:
    """A finite point set whose hull is the body (extreme points for polytopes)."""
    if isinstance(body, VPolytope):
        return body.vertices
    if isinstance(body, Box):
        choices = [sorted({float(l), float(u)}) for l, u in zip(body.lower, body.upper)]
        pts = np.array(list(itertools.product(*choices)), dtype=float)
        if len(pts) > VERTEX_BUDGET:
            raise RepresentationBlowup("box corner expansion exceeds the vertex budget")
        return pts
    c = np.asarray(body.center, dtype=float)
    G = np.asarray(body.generators, dtype=float)
    G = G[np.any(G != 0, axis=1)]
    fast = _zonotope_vertex_candidates(G) if len(G) else None
    if fast is not None:
        return extreme_points(c + fast)
    pts = c[None, :]
    for g in G:
        pts = extreme_points(np.vstack([pts, pts + g]))
    return pts


def _zonotope_vertex_candidates(G: np.ndarray) -> np.ndarray | None:
    """Sums of generator subsets containing every vertex of a full-dimensional
    zonotope: each (n-1)-subset ``T`` spanning a hyperplane with normal ``d``
    fixes the others by the sign of ``g . d``; ``T`` (and any generator on the
    hyperplane) takes all sign choices.  None if ``G`` is not full rank."""
    m, n = G.shape
    if n == 1 or numeric_rank(G) < n or math.comb(m, n - 1) * 2 ** (n - 1) > CANDIDATE_BUDGET:
        return None
    scale = float(np.abs(G).max())
    out = []
    for T in itertools.combinations(range(m), n - 1):
        sub = G[list(T)]
        _, sv, vt = np.linalg.svd(sub)
        if sv[-1] <= RANK_RTOL * sv[0]:
            continue
        d = vt[-1]
        proj = G @ d
        tie = np.abs(proj) <= 1e-9 * scale
        fixed = G[(proj > 0) & ~tie].sum(axis=0)
        free = G[tie]
        signs = np.array(list(itertools.product((0.0, 1.0), repeat=len(free))))
        out.append(fixed + signs @ free)
        out.append(G.sum(axis=0) - fixed - signs @ free)
    return np.unique(np.vstack(out), axis=0)


def to_vpolytope(body: ConvexBody) -> VPolytope:
    if isinstance(body, VPolytope):
        return body
    return VPolytope(corners(body))


def to_zonotope(body: Box) -> Zonotope:
    n = body.ambient_dim
    w = body.upper - body.lower
    gens = [[w[j] if i == j else w[j] * 0 for i in range(n)] for j in range(n) if w[j] != 0]
    return Zonotope(body.lower, gens if gens else None)


def scale(body: ConvexBody, w) -> ConvexBody:
    """Dilatation ``w * body`` for ``w >= 0``."""
    if isinstance(body, Box):
        return Box(body.lower * w, body.upper * w)
    if isinstance(body, Zonotope):
        return Zonotope(body.center * w, body.generators * w if len(body.generators) else None)
    w = float(w)
    if w == 0:
        return VPolytope(body.vertices[:1] * 0.0)
    vol = getattr(body, "_volume", None)
    return VPolytope._trusted(body.vertices * w, None if vol is None else vol * w ** body.ambient_dim)


def translate(body: ConvexBody, t) -> ConvexBody:
    t = np.asarray(t, dtype=object if _has_fraction(t) else float)
    if isinstance(body, Box):
        return Box(body.lower + t, body.upper + t)
    if isinstance(body, Zonotope):
        return Zonotope(body.center + t, body.generators if len(body.generators) else None)
    return VPolytope._trusted(body.vertices + np.asarray(t, dtype=float), getattr(body, "_volume", None))


def linear_map(body: ConvexBody, M) -> ConvexBody:
    """Image of ``body`` under ``x -> M @ x`` (``M`` may be rectangular)."""
    M = np.asarray(M, dtype=float)
    if isinstance(body, Box):
        body = to_zonotope(body)
    if isinstance(body, Zonotope):
        c = M @ np.asarray(body.center, dtype=float)
        g = np.asarray(body.generators, dtype=float) @ M.T
        g = g[np.any(g != 0, axis=1)] if len(g) else g
        return Zonotope(c, g if len(g) else None)
    return VPolytope(body.vertices @ M.T)


def minkowski_combine(weights: Sequence, bodies: Sequence[ConvexBody]) -> ConvexBody:
    """``sum_i weights[i] * bodies[i]`` in the tightest closed representation."""
    if len(weights) != len(bodies) or not bodies:
        raise DimensionMismatch("weights and bodies differ in length")
    n = bodies[0].ambient_dim
    if any(b.ambient_dim != n for b in bodies):
        raise DimensionMismatch("bodies live in different dimensions")
    if any(w < 0 for w in weights):
        raise GeometryError("weights must be nonnegative")
    if not any(w > 0 for w in weights):
        raise GeometryError("at least one weight must be positive")
    _check_dim(n)
    scaled = [scale(b, w) for w, b in zip(weights, bodies)]

    if all(isinstance(b, Box) for b in scaled):
        lower = scaled[0].lower
        upper = scaled[0].upper
        for b in scaled[1:]:
            lower = lower + b.lower
            upper = upper + b.upper
        return Box(lower, upper)

    if all(isinstance(b, (Box, Zonotope)) for b in scaled):
        zs = [to_zonotope(b) if isinstance(b, Box) else b for b in scaled]
        center = zs[0].center
        for z in zs[1:]:
            center = center + z.center
        gens = [g for z in zs for g in z.generators if any(v != 0 for v in g)]
        if gens and not any(z.exact for z in zs):
            shift, gens = merge_parallel(np.asarray(gens, dtype=float))
            center = np.asarray(center, dtype=float) + shift
        return Zonotope(center, gens if len(gens) else None)

    # polytope parts first, zonotope generators one at a time afterwards
    polys = [b for b in scaled if isinstance(b, VPolytope)]
    pts = polys[0].vertices
    for p in polys[1:]:
        pts = _sum_points(pts, p.vertices)
    shift = np.zeros(n)
    gens = []
    for b in scaled:
        if isinstance(b, VPolytope):
            continue
        z = to_zonotope(b) if isinstance(b, Box) else b
        shift = shift + np.asarray(z.center, dtype=float)
        gens.extend(np.asarray(z.generators, dtype=float))
    if gens:
        extra, gens = merge_parallel(np.asarray(gens))
        shift = shift + extra
    pts = pts + shift
    if len(gens):
        zc = _zonotope_vertex_candidates(gens)
        if zc is None:
            zc = corners(Zonotope(np.zeros(n), gens))
        if len(pts) * len(zc) > CANDIDATE_BUDGET:
            raise RepresentationBlowup("Minkowski sum candidates exceed the budget")
        # VPolytope reduces the final candidate set in a single hull call
        pts = (pts[:, None, :] + zc[None, :, :]).reshape(-1, n)
    return VPolytope(pts)


def merge_parallel(G: np.ndarray, rtol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Combine parallel generators: ``[0, a u] + [0, b u]`` is one segment
    (after a shift when the signs differ).  Returns ``(shift, generators)``."""
    shift = np.zeros(G.shape[1])
    groups: dict = {}
    for g in G:
        norm = float(np.linalg.norm(g))
        if norm == 0:
            continue
        u = g / norm
        lead = u[np.flatnonzero(np.abs(u) > rtol)[0]]
        if lead < 0:
            shift += g
            u, norm = -u, norm
        key = tuple(np.round(u / rtol ** 0.5).astype(np.int64))
        if key in groups:
            groups[key][1] += norm
        else:
            groups[key] = [u, norm]
    merged = np.array([u * length for u, length in groups.values()]).reshape(-1, G.shape[1])
    return shift, merged


def _sum_points(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if len(a) * len(b) > CANDIDATE_BUDGET:
        raise RepresentationBlowup(f"Minkowski sum of {len(a)} and {len(b)} vertices exceeds the budget")
    return extreme_points((a[:, None, :] + b[None, :, :]).reshape(-1, a.shape[1]))


def _zonotope_volume(G: np.ndarray, n: int):
    m = len(G)
    if m < n:
        return 0.0
    if _is_exact(G):
        return sum((abs(fraction_det(G[list(idx)])) for idx in itertools.combinations(range(m), n)), Fraction(0))
    if math.comb(m, n) > 500_000:
        return None
    idx = np.array(list(itertools.combinations(range(m), n)))
    return float(np.abs(np.linalg.det(G[idx])).sum())


def volume_exact(body: ConvexBody):
    """Euclidean n-volume; a Fraction for exact boxes and zonotopes."""
    n = body.ambient_dim
    _check_dim(n)
    exact = body.exact
    if affine_dimension(body) < n:
        return Fraction(0) if exact else 0.0
    if isinstance(body, Box):
        vol = Fraction(1) if exact else 1.0
        for l, u in zip(body.lower, body.upper):
            vol *= u - l
        return vol
    if isinstance(body, Zonotope):
        vol = _zonotope_volume(body.generators, n)
        if vol is not None:
            return vol
        body = to_vpolytope(body)
    if n == 1:
        return float(body.vertices.max() - body.vertices.min())
    cached = getattr(body, "_volume", None)
    if cached is not None:
        return cached
    return float(_hull(body.vertices).volume)


def support_value(body: ConvexBody, direction) -> float:
    d = np.asarray(direction, dtype=float)
    if d.shape != (body.ambient_dim,):
        raise DimensionMismatch("direction length differs from the ambient dimension")
    if isinstance(body, Box):
        lo = np.asarray(body.lower, dtype=float)
        hi = np.asarray(body.upper, dtype=float)
        return float(np.maximum(lo * d, hi * d).sum())
    if isinstance(body, Zonotope):
        c = np.asarray(body.center, dtype=float)
        g = np.asarray(body.generators, dtype=float)
        return float(c @ d + (np.maximum(g @ d, 0.0).sum() if len(g) else 0.0))
    return float(np.max(body.vertices @ d))


def bounding_box(body: ConvexBody) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(body, Box):
        return np.asarray(body.lower, dtype=float), np.asarray(body.upper, dtype=float)
    if isinstance(body, Zonotope):
        c = np.asarray(body.center, dtype=float)
        g = np.asarray(body.generators, dtype=float)
        if not len(g):
            return c.copy(), c.copy()
        return c + np.minimum(g, 0).sum(axis=0), c + np.maximum(g, 0).sum(axis=0)
    return body.vertices.min(axis=0), body.vertices.max(axis=0)


class MCVolume(NamedTuple):
    estimate: float
    half_width: float


MC_SHARD = 1 << 15


def volume_mc(body: ConvexBody, samples: int, seed: int, workers: int = 1) -> MCVolume:
    """Hit-or-miss volume estimate inside the tight bounding box.

    The sample budget is cut into fixed shards with seeds spawned from
    ``seed``, so the result does not depend on ``workers``.
    """
    n = body.ambient_dim
    if samples <= 0:
        raise GeometryError("sample count must be positive")
    lo, hi = bounding_box(body)
    width = hi - lo
    if np.any(width <= 0) or affine_dimension(body) < n:
        raise DegenerateBody("hit-or-miss estimation needs a full-dimensional body")
    box_vol = float(np.prod(width))

    if isinstance(body, Box):
        def inside(x):
            return np.ones(len(x), dtype=bool)
    else:
        eq = _hull(corners(body)).equations if n > 1 else None
        if eq is None:
            def inside(x):
                return np.ones(len(x), dtype=bool)
        else:
            A, b = eq[:, :-1], eq[:, -1]
            slack = 1e-12 * max(1.0, float(np.abs(hi).max()), float(np.abs(lo).max()))

            def inside(x):
                return np.all(x @ A.T + b <= slack, axis=1)

    sizes = [MC_SHARD] * (samples // MC_SHARD)
    if samples % MC_SHARD:
        sizes.append(samples % MC_SHARD)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(k):
        rng = np.random.default_rng(children[k])
        x = lo + width * rng.random((sizes[k], n))
        return int(inside(x).sum())

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = list(pool.map(run, range(len(sizes))))
    else:
        hits = [run(k) for k in range(len(sizes))]
    p = sum(hits) / samples
    estimate = box_vol * p
    half = 1.96 * box_vol * math.sqrt(p * (1.0 - p) / samples)
    return MCVolume(estimate, half)
