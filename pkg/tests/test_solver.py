from __future__ import annotations

import math

import numpy as np
import pytest

from mixvol import bounds as bd, geometry as geo, mvexact as mv, solver as sv


def test_two_squares_capacity_four():
    rep = sv.minimize_capacity(geo.box_tuple([[1, 1], [1, 1]]), tol=1e-6)
    assert rep.certified
    assert rep.cap_estimate == pytest.approx(4.0, rel=1e-6)
    assert rep.mv_lower <= 2.0 <= rep.mv_upper * math.exp(rep.additive_gap)


def test_doubly_stochastic_boxes_have_capacity_one():
    A = np.array([[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]])
    rep = sv.minimize_capacity(geo.box_tuple(A), tol=1e-6)
    assert rep.cap_estimate == pytest.approx(1.0, rel=1e-5)
    assert rep.mv_lower <= mv.permanent_ryser(A) <= rep.mv_upper * math.exp(rep.additive_gap)


def test_bracket_contains_exact_value_on_mixed_tuple():
    rng = np.random.default_rng(5)
    tup = geo.BodyTuple((geo.Box([0, 0, 0], [1, 2, 1]), geo.Zonotope([0, 0, 0], rng.normal(size=(4, 3))),
                         geo.simplex(3)))
    rep = sv.approx_mixed_volume(tup, tol=1e-5)
    exact = sv.exact_mixed_volume(tup)
    assert rep.certified
    assert rep.mv_lower <= exact <= rep.mv_upper * math.exp(rep.additive_gap)


def test_pg_and_ellipsoid_agree():
    tup = geo.box_tuple([[1, 2, 0.5], [0.3, 1, 1], [1, 1, 2]])
    a = sv.minimize_capacity(tup, tol=1e-6)
    b = sv.minimize_capacity(tup, tol=1e-6, method="pg")
    assert a.cap_estimate == pytest.approx(b.cap_estimate, rel=1e-4)


def test_identity_segments_decompose_to_singletons():
    segs = geo.BodyTuple(tuple(geo.segment(np.zeros(3), np.eye(3)[i]) for i in range(3)))
    ok, cert = sv.indecomposability_check(segs)
    assert not ok and cert is not None
    dec = sv.decompose(segs)
    assert sorted(dec.sizes) == [1, 1, 1] and not dec.zero
    rep = sv.approx_mixed_volume(segs, tol=1e-6)
    assert rep.mv_lower <= 1.0 <= rep.mv_upper * math.exp(rep.additive_gap) * (1 + 1e-9)


def test_parallel_segments_give_zero():
    segs = geo.BodyTuple((geo.segment([0, 0], [1, 0]), geo.segment([0, 0], [2, 0])))
    rep = sv.approx_mixed_volume(segs)
    assert rep.zero and rep.mv_upper == 0.0
    assert sv.exact_mixed_volume(segs) == pytest.approx(0.0, abs=1e-12)


def test_block_product_equals_mixed_volume():
    # segment along e1 plus two squares in the e2-e3 plane
    tup = geo.BodyTuple((geo.segment([0, 0, 0], [2, 0, 0]), geo.Box([0, 0, 0], [1, 1, 1]),
                         geo.Box([0, 0, 0], [0, 1, 2])))
    dec = sv.decompose(tup)
    assert sorted(dec.sizes) == [1, 2]
    rep = sv.approx_mixed_volume(tup, tol=1e-6)
    exact = sv.exact_mixed_volume(tup)
    assert rep.mv_lower <= exact <= rep.mv_upper * math.exp(rep.additive_gap) * (1 + 1e-9)


def test_search_radius_formula_on_squares():
    assert sv.search_radius(geo.box_tuple([[1, 1], [1, 1]])) == pytest.approx(math.sqrt(2) * math.log(4))


def test_kij_values_positive_when_indecomposable():
    tup = geo.box_tuple([[1, 2, 0.5], [0.3, 1, 1], [1, 1, 2]])
    pos = sv.kij_positivity(tup)
    assert np.all(pos[~np.eye(3, dtype=bool)]) and not pos.diagonal().any()


def test_factors_are_lambda_products():
    tup = geo.box_tuple(np.ones((3, 3)))
    rep = sv.minimize_capacity(tup, tol=1e-6)
    assert math.prod(rep.factors) == pytest.approx(bd.vdw_factor(3))
    assert rep.cap_estimate == pytest.approx(27.0, rel=1e-5)


def test_budget_exhaustion_is_reported():
    tup = geo.box_tuple([[1, 2, 0.5], [0.3, 1, 1], [1, 1, 2]])
    rep = sv.minimize_capacity(tup, tol=1e-9, budget=3)
    assert not rep.certified
    assert rep.mv_lower <= rep.mv_upper


def test_reports_are_deterministic():
    tup = geo.box_tuple([[1, 2], [0.5, 1]])
    assert sv.minimize_capacity(tup, seed=4) == sv.minimize_capacity(tup, seed=4)


def test_bad_arguments():
    with pytest.raises(sv.SolverError):
        sv.minimize_capacity(geo.box_tuple([[1, 1], [1, 1]]), tol=0.0)
    with pytest.raises(sv.SolverError):
        sv.minimize_capacity(geo.box_tuple([[1, 1], [1, 1]]), method="newton")
