from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mixvol import bounds as bd


def test_sv_coefficients():
    np.testing.assert_allclose(bd.sv_coefficients(3, 3), [1, 1, 1 / 3, 1 / 27])
    np.testing.assert_allclose(bd.sv_coefficients(bd.INF, 3), [1, 1, 0.5, 1 / 6])


def test_g_and_vdw():
    assert bd.g_factor(1) == 1.0
    assert bd.g_factor_exact(3) == Fraction(4, 9)
    assert bd.vdw_factor(4) == pytest.approx(24 / 256)
    assert math.prod(bd.g_factor(i) for i in range(1, 6)) == pytest.approx(bd.vdw_factor(5))


@pytest.mark.parametrize("n,k", [(3, 2), (5, 2), (4, 4), (6, 3), (7, 5), (bd.INF, 2)])
def test_lambda_numeric_matches_closed_form_or_definition(n, k):
    lam = bd.lambda_factor(n, k)
    x = np.exp(np.linspace(-6, 6, 20001))
    ratios = [bd.sv_eval(n, k, t) / t for t in x]
    assert lam == pytest.approx(1.0 / min(ratios), rel=1e-6)
    assert bd.lambda_factor(n, k, numeric=True) == pytest.approx(lam, rel=1e-10)


def test_lambda_two_closed_form():
    assert bd.lambda_factor(2, 2) == pytest.approx(0.5)
    assert bd.lambda_factor(bd.INF, 2) == pytest.approx(1 / (1 + math.sqrt(2)))


def test_lambda_decreases_in_k():
    for n in range(2, 8):
        lams = [bd.lambda_factor(n, k) for k in range(2, n + 1)]
        assert all(a >= b - 1e-15 for a, b in zip(lams, lams[1:]))


def test_bound_factors_use_the_minimum():
    bf = bd.bound_factors([4, 4, 1, 1])
    assert bf.D == (1, 2, 1, 1)
    assert bf.product == pytest.approx(bd.lambda_factor(2, 2))
    full = bd.bound_factors([3, 3, 3])
    assert full.product == pytest.approx(bd.vdw_factor(3))


def test_univariate_capacity_of_cube():
    # R(t) = (1 + t/3)^3
    assert bd.univariate_capacity([1, 1, 1 / 3, 1 / 27]) == pytest.approx(1 / bd.g_factor(3))


def test_univariate_capacity_degree_one():
    assert bd.univariate_capacity([2.0, 3.0]) == 3.0


def test_newton_check():
    assert bd.newton_check([1, 3, 3, 1], 3)
    assert not bd.newton_check([1, 0, 3, 1], 3)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.05, 3.0), min_size=2, max_size=5))
def test_real_rooted_polynomials_satisfy_aux_inequality(roots):
    # prod (1 + r_i t) has real roots, hence is n-Newton for n = deg
    coeffs = np.array([1.0])
    for r in roots:
        coeffs = np.convolve(coeffs, [1.0, r])
    n = len(roots)
    assert bd.newton_check(coeffs, n)
    assert bd.aux_inequality_holds(coeffs, n)


def test_schrijver_and_af2():
    assert bd.schrijver_factor(4, 4) == pytest.approx(bd.vdw_factor(4))
    assert bd.schrijver_admissible([3, 3, 2, 1], 2)
    assert not bd.schrijver_admissible([3, 3, 3, 1], 2)
    assert bd.af2_factor(2) == 0.5


def test_lower_bounds_report():
    rep = bd.lower_bounds_report(10.0, [3, 2, 2])
    assert rep["svg"] == pytest.approx(10.0 * rep["svg_factor"])
    assert rep["svg"] >= rep["vdw"]
    assert rep["schrijver_k"] == 2 and "af2" in rep


def test_errors():
    with pytest.raises(bd.BoundsError):
        bd.g_factor(0)
    with pytest.raises(bd.BoundsError):
        bd.univariate_capacity([1.0, -1.0])
