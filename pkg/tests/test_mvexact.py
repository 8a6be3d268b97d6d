from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixvol import geometry as geo, mvexact as mv


def unit_squares():
    return geo.box_tuple([[1, 1], [1, 1]])


def test_identity_segments_have_mixed_volume_one():
    segs = geo.BodyTuple(tuple(geo.segment(np.zeros(3), np.eye(3)[i]) for i in range(3)))
    assert float(mv.mixed_volume_polarization(segs).value) == pytest.approx(1.0)


def test_two_unit_squares():
    assert float(mv.mixed_volume_polarization(unit_squares()).value) == pytest.approx(2.0)


def test_all_ones_box_tuple_is_factorial():
    assert float(mv.mixed_volume_polarization(geo.box_tuple(np.ones((3, 3)))).value) == pytest.approx(6.0)


def test_exact_box_tuple_gives_exact_permanent():
    A = [[Fraction(1, 7), Fraction(2)], [Fraction(3, 5), Fraction(1, 3)]]
    res = mv.mixed_volume_polarization(geo.box_tuple(A))
    assert res.value == A[0][0] * A[1][1] + A[0][1] * A[1][0]
    assert mv.permanent_ryser(A) == res.value


def test_classical_normalization():
    res = mv.mixed_volume_polarization(unit_squares())
    assert float(res.classical(2)) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_polarization_matches_permanent(seed):
    A = np.random.default_rng(seed).uniform(0, 1, (3, 3))
    got = float(mv.mixed_volume_polarization(geo.box_tuple(A)).value)
    assert got == pytest.approx(mv.permanent_ryser(A), rel=1e-9)


def test_ryser_small_cases():
    assert mv.permanent_ryser(np.eye(4)) == pytest.approx(1.0)
    assert mv.permanent_ryser(np.ones((5, 5))) == pytest.approx(120.0)
    assert mv.permanent_ryser([[1, 2], [3, 4]]) == 10


def test_segment_mixed_volume_is_abs_det():
    V = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 3.0], [1.0, 0.0, 1.0]])
    assert mv.mixed_volume_segments(V) == pytest.approx(abs(np.linalg.det(V)))


def test_partial_derivative_of_two_squares():
    # V(x) = (x1 + x2)^2, so dV/dx1 at (1, 1) is 4
    assert mv.partial_derivative_exact(unit_squares(), [1.0, 1.0], 0) == pytest.approx(4.0)


def test_minkowski_coefficients_two_squares():
    poly = mv.minkowski_coefficients(unit_squares())
    assert poly.coefficient((2, 0)) == pytest.approx(1.0)
    assert poly.coefficient((1, 1)) == pytest.approx(2.0)
    assert poly.coefficient((0, 2)) == pytest.approx(1.0)


def test_coefficient_of_monomial_equals_mixed_volume():
    rng = np.random.default_rng(3)
    tup = geo.BodyTuple((geo.Box([0, 0, 0], [1, 2, 1]), geo.Zonotope([0, 0, 0], rng.normal(size=(4, 3))),
                         geo.VPolytope(rng.normal(size=(5, 3)))))
    poly = mv.minkowski_coefficients(tup)
    assert poly.coefficient((1, 1, 1)) == pytest.approx(float(mv.mixed_volume_polarization(tup).value), rel=1e-8)
    x = np.array([0.7, 1.2, 0.4])
    assert poly(x) == pytest.approx(mv.minkowski_poly_eval(tup, x), rel=1e-9)


def test_polynomial_capacity_values():
    assert mv.polynomial_capacity(mv.minkowski_coefficients(unit_squares())).cap == pytest.approx(4.0)
    prod = mv.PolyCoefficients(3, 3, {(1, 1, 1): 1.0})
    assert mv.polynomial_capacity(prod).cap == pytest.approx(1.0)


def test_polynomial_capacity_zero_when_ones_outside_newton_polytope():
    p = mv.PolyCoefficients(2, 2, {(2, 0): 1.0})
    res = mv.polynomial_capacity(p)
    assert res.zero and res.cap == 0.0


def test_evaluation_needs_positive_points():
    with pytest.raises(mv.OracleError):
        mv.minkowski_poly_eval(unit_squares(), [1.0, 0.0])


def test_volume_polynomial_is_homogeneous():
    tup = geo.box_tuple([[1, 2], [0.5, 1]])
    x = np.array([0.3, 1.1])
    assert mv.minkowski_poly_eval(tup, 2 * x) == pytest.approx(4 * mv.minkowski_poly_eval(tup, x))
    assert math.isclose(mv.tuple_volume(tup, [1, 0]), 2.0)
