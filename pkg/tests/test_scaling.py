from __future__ import annotations

import numpy as np
import pytest

from mixvol import geometry as geo, mvexact as mv, scaling as sc, solver as sv


def test_nor_has_unit_geometric_mean():
    x = sc.nor([2.0, 8.0, 0.5])
    assert np.prod(x) == pytest.approx(1.0)


def test_product_functional_is_fixed():
    f = sc.product_functional(4)
    traj = sc.sinkhorn_iterate(f)
    assert traj.converged and len(traj.states) == 1


def test_sinkhorn_on_boxes_reaches_capacity():
    tup = geo.box_tuple([[1, 2, 0.5], [0.3, 1, 1], [1, 1, 2]])
    f = sc.minkowski_functional(tup)
    traj = sc.sinkhorn_iterate(f, max_iters=400, tol=1e-7)
    assert traj.converged
    vals = traj.values
    assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))
    cap = sv.minimize_capacity(tup, tol=1e-7).cap_estimate
    assert traj.last.f_value == pytest.approx(cap, rel=1e-5)


def test_near_optimality_after_convergence():
    f = sc.minkowski_functional(geo.box_tuple([[1, 2], [0.5, 1]]))
    st = sc.sinkhorn_iterate(f, tol=1e-6).last
    ok, s = sc.near_optimality_check(st, 0.01)
    assert ok and s < 1e-10


def test_power_sum_classes():
    assert sc.class_check(sc.power_sum_functional(3, 0.5))
    assert sc.class_check(sc.power_sum_functional(3, 2.0))
    cav_as_vex = sc.Functional(3, sc.power_sum_functional(3, 0.5).value, sc.power_sum_functional(3, 0.5).gradient,
                               "vex", "mislabeled")
    assert not sc.class_check(cav_as_vex)


def test_vex_iteration_increases():
    f = sc.power_sum_functional(3, 3.0)
    # SH behaves like x -> x^(1-p) here, so only a few steps stay finite
    traj = sc.sinkhorn_iterate(f, x0=[1.2, 1.0, 0.9], max_iters=3, tol=1e-8)
    vals = traj.values
    assert vals[-1] > vals[0]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(vals, vals[1:]))


def test_trajectory_csv(tmp_path):
    f = sc.minkowski_functional(geo.box_tuple([[1, 2], [0.5, 1]]))
    traj = sc.sinkhorn_iterate(f, tol=1e-6)
    out = tmp_path / "traj.csv"
    traj.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "iteration,f_value,max_abs_gamma_minus_1"
    assert len(lines) == len(traj.states) + 1


def test_root_concavity_bound():
    assert sc.root_concavity_bound(3, 3) == pytest.approx(0.75)
    assert sc.root_concavity_bound(1, 4) == pytest.approx(0.75)


def test_second_derivative_within_bounds():
    tup = geo.box_tuple([[1, 2, 0.5], [0.3, 1, 1], [1, 1, 2]])
    for i in range(3):
        pr = sc.second_derivative_probe(tup, i, [0.2, -0.1, -0.1])
        assert -1e-6 <= pr.estimate <= min(pr.log_concave_bound, pr.root_concave_bound) + 1e-6


def test_second_derivative_from_coefficients():
    poly = mv.minkowski_coefficients(geo.box_tuple([[1, 1], [1, 1]]))
    pr = sc.second_derivative_probe(poly, 0, [0.0, 0.0])
    # q(s) = 2 log(e^s + 1) has q''(0) = 1/2 = n/4
    assert pr.estimate == pytest.approx(0.5, abs=1e-6)
