from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixvol import geometry as geo


def test_cube_and_simplex_volumes():
    assert geo.volume_exact(geo.Box([0, 0, 0], [1, 1, 1])) == pytest.approx(1.0)
    assert geo.volume_exact(geo.simplex(2)) == pytest.approx(0.5)
    assert geo.volume_exact(geo.simplex(3)) == pytest.approx(1 / 6)


def test_hexagon_zonotope_matches_hull():
    z = geo.Zonotope([0, 0], [[1, 0], [0, 1], [1, 1]])
    assert geo.volume_exact(z) == pytest.approx(3.0)
    assert geo.volume_exact(geo.to_vpolytope(z)) == pytest.approx(3.0)


def test_exact_zonotope_volume_is_rational():
    z = geo.Zonotope([0, 0], [[Fraction(1), Fraction(0)], [Fraction(1, 2), Fraction(2)], [Fraction(0), Fraction(1, 2)]])
    vol = geo.volume_exact(z)
    assert isinstance(vol, Fraction) and vol == Fraction(11, 4)


def test_affine_dimensions():
    assert geo.affine_dimension(geo.segment([0, 0, 0], [1, 1, 0])) == 1
    assert geo.affine_dimension(geo.Box([0, 0, 0], [1, 2, 3])) == 3
    assert geo.affine_dimension(geo.VPolytope([[1.0, 2.0, 3.0]])) == 0


def test_degenerate_body_has_zero_volume():
    flat = geo.VPolytope([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert geo.volume_exact(flat) == 0.0


def test_duplicate_vertices_are_dropped():
    p = geo.VPolytope([[0, 0], [1, 0], [0, 1], [1, 0], [0.2, 0.2]])
    assert len(p.vertices) == 3


def test_box_sum_and_dilatation():
    s = geo.minkowski_combine([1, 2], [geo.Box([0, 0], [1, 1]), geo.Box([0, 0], [1, 1])])
    assert isinstance(s, geo.Box)
    np.testing.assert_allclose(s.upper, [3, 3])
    assert geo.volume_exact(geo.scale(geo.simplex(2), 3.0)) == pytest.approx(4.5)


def test_parallel_generators_merge():
    z = geo.minkowski_combine([1, 2], [geo.Zonotope([0, 0], [[1, 0], [0, 1], [-1, 0]]), geo.Box([0, 0], [1, 1])])
    assert len(z.generators) == 2
    assert geo.volume_exact(z) == pytest.approx(12.0)


@pytest.mark.parametrize("n,m", [(2, 5), (3, 6), (4, 7)])
def test_zonotope_corners_match_brute_force(n, m):
    rng = np.random.default_rng(n * 10 + m)
    G = rng.normal(size=(m, n))
    corners = geo.corners(geo.Zonotope(np.zeros(n), G))
    brute = geo.extreme_points(np.array([np.array(s) @ G for s in itertools.product((0, 1), repeat=m)]))
    np.testing.assert_allclose(np.sort(corners, axis=0), np.sort(brute, axis=0), atol=1e-12)


def test_mixed_sum_agrees_with_vertex_route():
    rng = np.random.default_rng(0)
    bodies = [geo.Box([0, 0, 0], [1, 2, 1]), geo.Zonotope([0, 0, 0], rng.normal(size=(4, 3))),
              geo.VPolytope(rng.normal(size=(5, 3)))]
    w = [1.0, 0.7, 1.3]
    direct = geo.volume_exact(geo.minkowski_combine(w, bodies))
    via = geo.volume_exact(geo.minkowski_combine(w, [geo.to_vpolytope(b) for b in bodies]))
    assert direct == pytest.approx(via, rel=1e-10)


def test_support_values():
    box = geo.Box([0, 0], [2, 1])
    assert geo.support_value(box, [1, 0]) == pytest.approx(2.0)
    assert geo.support_value(box, [-1, 0]) == pytest.approx(0.0)
    assert geo.support_value(geo.segment([0, 0], [1, 0]), [0, 1]) == pytest.approx(0.0)


def test_mc_volume_exact_on_boxes_and_close_on_simplex():
    est = geo.volume_mc(geo.Box([0, 0, 0], [1, 1, 1]), 50_000, seed=1)
    assert est.estimate == 1.0 and est.half_width == 0.0
    s = geo.volume_mc(geo.simplex(2), 200_000, seed=2)
    assert abs(s.estimate - 0.5) <= 4 * s.half_width


def test_mc_volume_independent_of_worker_count():
    z = geo.Zonotope([0, 0], [[1, 0.2], [0.3, 1], [0.5, -0.5]])
    a = geo.volume_mc(z, 100_000, seed=7, workers=1)
    b = geo.volume_mc(z, 100_000, seed=7, workers=3)
    assert a == b


def test_dimension_mismatch_raises():
    with pytest.raises(geo.DimensionMismatch):
        geo.BodyTuple((geo.Box([0, 0], [1, 1]), geo.Box([0, 0, 0], [1, 1, 1])))


def test_mc_rejects_flat_bodies():
    with pytest.raises(geo.DegenerateBody):
        geo.volume_mc(geo.segment([0, 0], [1, 1]), 1000, seed=0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 3.0), min_size=2, max_size=2), st.floats(0.1, 3.0))
def test_volume_is_homogeneous(widths, t):
    z = geo.Zonotope([0, 0], [[widths[0], 0.3], [0.2, widths[1]], [1.0, 1.0]])
    assert geo.volume_exact(geo.scale(z, t)) == pytest.approx(t**2 * geo.volume_exact(z), rel=1e-9)
