from __future__ import annotations

import math

import numpy as np
import pytest

from mixvol import discriminant as dc, mvexact as mv


def test_diagonal_tuple_gives_permanent():
    B = np.random.default_rng(0).uniform(0.1, 1, (4, 4))
    assert dc.mixed_discriminant_polarization(dc.diagonal_tuple(B)) == pytest.approx(mv.permanent_ryser(B))


def test_identity_tuple():
    A = dc.MatrixTuple(tuple(np.eye(3) for _ in range(3)))
    assert dc.mixed_discriminant_polarization(A) == pytest.approx(6.0)


def test_rejects_non_psd():
    with pytest.raises(dc.DiscriminantError):
        dc.MatrixTuple((np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]])))


def test_det_capacity_brackets_discriminant():
    rng = np.random.default_rng(1)
    mats = []
    for _ in range(3):
        X = rng.normal(size=(3, 3))
        mats.append(X @ X.T + 0.1 * np.eye(3))
    A = dc.MatrixTuple(tuple(mats))
    rep = dc.det_capacity(A, tol=1e-6)
    D = dc.mixed_discriminant_polarization(A)
    assert rep.certified
    assert rep.mv_lower <= D <= rep.mv_upper * math.exp(rep.additive_gap)


def test_doubly_stochastic_diagonal_capacity_one():
    B = np.full((3, 3), 1 / 3)
    rep = dc.det_capacity(dc.diagonal_tuple(B), tol=1e-6)
    assert rep.cap_estimate == pytest.approx(1.0, rel=1e-5)


def test_decomposable_tuple_refused():
    A = dc.MatrixTuple((np.diag([1.0, 0.0]), np.diag([2.0, 0.0])))
    ok, cert = dc.indecomposable(A)
    assert not ok
    with pytest.raises(dc.DiscriminantError):
        dc.det_capacity(A)


def test_unit_disks_bracket():
    lo, hi = dc.barvinok_bracket([np.eye(2), np.eye(2)])
    assert lo <= math.pi <= hi


def test_normalization_resolution():
    res = dc.resolve_normalization(pairs=6, seed=3)
    assert res.chosen == "classical-D/classical-V"
    assert res.holds["partial-D/partial-V"] < res.pairs
