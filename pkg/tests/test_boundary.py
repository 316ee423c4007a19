import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st
from scipy.integrate import quad

from nodalsplit.boundary import (BoundaryFn, InadmissibleShapeError, QuadratureError, TrigWeight,
                                 UnsupportedOrderError, check_admissible, eval_phi, integrate,
                                 lambda_phi, quad_weighted, rescale_to_admissible, sup_norm)

BUMP = BoundaryFn.preset("bump", 1 / 6)


def test_bump_values_and_derivatives():
    y = np.linspace(0, 1, 11)
    assert np.allclose(BUMP(y), y * (1 - y) ** 2 / 6)
    assert np.allclose(BUMP(y, 1), (1 - 4 * y + 3 * y ** 2) / 6)
    assert np.allclose(BUMP(y, 3), 1.0)
    assert np.allclose(BUMP(y, 4), 0.0)


def test_order_above_five_rejected():
    with pytest.raises(UnsupportedOrderError):
        eval_phi(BUMP, 0.5, 6)


def test_lambda_matches_symbolic_integral():
    y = sp.symbols("y")
    exact = sp.integrate(y * (1 - y) ** 2 * sp.sin(2 * sp.pi * y) * sp.sin(sp.pi * y), (y, 0, 1))
    assert lambda_phi(BoundaryFn.preset("bump")) == pytest.approx(float(exact), abs=1e-13)
    assert float(exact) == pytest.approx(1.5804e-2, rel=1e-4)


@pytest.mark.parametrize("freqs", [(1, 1), (2, 2), (2, 1), (1, 3), (2, 5)])
def test_quadrature_against_adaptive_oracle(freqs):
    phi = BoundaryFn.preset("skew8")
    ref, _ = quad(lambda y: phi(y) * TrigWeight(freqs)(y), 0, 1, epsabs=1e-15, limit=200)
    assert quad_weighted(phi, TrigWeight(freqs)) == pytest.approx(ref, abs=1e-13)


def test_quadrature_nonconvergence_raises():
    with pytest.raises(QuadratureError):
        integrate(lambda y: np.sign(y - 1 / 3), tol=1e-15, max_panels=64)


@given(st.floats(0.01, 10.0))
def test_weighted_integrals_are_linear_in_scale(s):
    a = quad_weighted(BUMP, TrigWeight((2, 1)))
    b = quad_weighted(BUMP.scaled(s), TrigWeight((2, 1)))
    assert b == pytest.approx(s * a, rel=1e-12, abs=1e-15)


def test_bump_sixth_is_admissible():
    rep = check_admissible(BUMP)
    assert rep.admissible
    assert rep.derivative_bounds[2] == pytest.approx(1.0)


def test_unit_bump_is_not_admissible():
    rep = check_admissible(BoundaryFn.preset("bump"))
    assert not rep.admissible
    assert any("phi^(2)" in r for r in rep.reasons())


def test_symmetric_shape_has_zero_coupling():
    sym = BoundaryFn((0, 0, 1, -2, 1), 1.0)
    assert abs(lambda_phi(sym)) < 1e-12
    with pytest.raises(InadmissibleShapeError):
        rescale_to_admissible(sym)


def test_rescale_hits_a_unit_bound():
    phi = rescale_to_admissible(BoundaryFn.preset("skew24"))
    rep = check_admissible(phi)
    assert rep.admissible
    assert max(rep.derivative_bounds) == pytest.approx(1.0, rel=1e-9)


def test_rescale_rejects_bad_shapes():
    with pytest.raises(InadmissibleShapeError):
        rescale_to_admissible(BoundaryFn((1.0, -1.0), 1.0))  # phi(0) = 1
    with pytest.raises(InadmissibleShapeError):
        rescale_to_admissible(BoundaryFn((0.0, -1.0, 1.0), 1.0))  # negative
    with pytest.raises(InadmissibleShapeError):
        rescale_to_admissible(BoundaryFn((0.0,), 1.0))


def test_sup_norm_finds_interior_max():
    # y (1 - y) peaks at 1/4 in y = 1/2
    assert sup_norm(BoundaryFn((0, 1, -1), 1.0)) == pytest.approx(0.25, abs=1e-12)


def test_json_round_trip():
    phi = BoundaryFn((0, 1, -2, 1), 0.25, family="custom")
    assert BoundaryFn.from_json(phi.to_json()) == phi
    assert BoundaryFn.from_dict({"family": "bump", "scale": 0.5}) == BoundaryFn.preset("bump", 0.5)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=4))
def test_random_positive_shapes_rescale_to_admissible(q):
    poly = np.polynomial.Polynomial([0, 1, -1]) * np.polynomial.Polynomial(q)
    if np.allclose(poly.coef, 0):
        return
    shape = BoundaryFn(tuple(poly.coef), 1.0)
    try:
        phi = rescale_to_admissible(shape)
    except InadmissibleShapeError:
        assert abs(lambda_phi(shape)) <= 1e-10
        return
    assert check_admissible(phi).admissible
    assert math.isclose(max(check_admissible(phi).derivative_bounds + (sup_norm(phi),)), 1.0, rel_tol=1e-9)
