import math

import numpy as np
from scipy.integrate import trapezoid
import pytest
from hypothesis import given, strategies as st

from nodalsplit.boundary import BoundaryFn
from nodalsplit.grid import GridSpec
from nodalsplit.hadamard import coefficient_variation, hadamard_variation
from nodalsplit.modes import (AliasingError, ModeProfile, boundary_coefficients_check, error_field,
                              extract_modes, fit_amplitude, fit_amplitudes, predicted_boundary_values)
from nodalsplit.rectangle import DomainSpec

G = GridSpec(120, 64, 3.0)
BUMP = BoundaryFn.preset("bump", 1 / 6)


def test_modes_of_separable_field():
    X, Y = G.mesh()
    a, b, c = np.cos(X), X ** 2, np.exp(-X)
    f = a * np.sin(np.pi * Y) + b * np.sin(2 * np.pi * Y) + c * np.sin(5 * np.pi * Y)
    modes = extract_modes(f, G, 8)
    assert np.allclose(modes[0].values, a[0], atol=1e-12)
    assert np.allclose(modes[1].values, b[0], atol=1e-12)
    assert np.allclose(modes[4].values, c[0], atol=1e-12)
    for j in (3, 4, 6, 7, 8):
        assert np.max(np.abs(modes[j - 1].values)) < 1e-12
    E, sup, tail = error_field(f, modes, G)
    assert sup == pytest.approx(np.max(np.abs(c)), rel=1e-10)
    assert tail == pytest.approx(1.0, rel=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(1.0, 6.0))
def test_amplitude_fit_is_exact(p, q, mu):
    x = G.x
    mode = ModeProfile(1, p * np.cos(mu * x) + q * np.sin(mu * x), mu)
    a, b = fit_amplitude(mode, G)
    assert a == pytest.approx(p, abs=1e-10)
    assert b == pytest.approx(q, abs=1e-10)


def test_zero_field():
    f = np.zeros(G.shape)
    summary, modes = fit_amplitudes(f, G, value=50.0, j_max=8)
    assert summary.a1 == summary.a2 == 0.0
    assert summary.error_sup == 0.0 and summary.error_tail == 0.0


def test_two_mode_field_has_no_error():
    X, Y = G.mesh()
    f = np.sin(2 * X) * np.sin(np.pi * Y) - np.cos(X) * np.sin(2 * np.pi * Y)
    E, sup, _ = error_field(f, extract_modes(f, G, 4), G)
    assert sup < 1e-12


def test_aliasing_guard():
    with pytest.raises(AliasingError):
        extract_modes(np.zeros(G.shape), G, 17)


def test_parseval_for_band_limited_rows(rng):
    coef = rng.standard_normal(10)
    y = G.y
    row = sum(c * np.sin((j + 1) * np.pi * y) for j, c in enumerate(coef))
    f = np.tile(row[:, None], (1, G.nx + 1))
    vals = np.array([m.values[0] for m in extract_modes(f, G, 16)])
    energy = trapezoid(row ** 2, y)
    assert 0.5 * np.sum(vals ** 2) == pytest.approx(energy, rel=1e-10)


def test_predicted_values_match_coefficient_variation():
    spec = DomainSpec(5, 1e-3)
    var = hadamard_variation(BUMP, 5)
    pred = predicted_boundary_values(BUMP, spec, var.c_pair, 6)
    for j in range(1, 7):
        assert pred[j - 1] == pytest.approx(1e-3 * coefficient_variation(BUMP, 5, var.c_pair, j), rel=1e-12)


def test_boundary_rows_flag_negligible_modes():
    # a symmetric profile about y = 1/2 has no odd-even coupling, so some weights vanish
    phi = BoundaryFn((0, 0, 1, -2, 1), 1.0)
    spec = DomainSpec(4, 1e-3)
    from nodalsplit.modes import ModeSummary
    summary = ModeSummary(0.0, 0.0, np.ones(6), 0.0, 0.0)
    rows = boundary_coefficients_check(summary, phi, spec, (0.6, 0.8))
    assert [r.j for r in rows] == list(range(1, 7))
    assert all(math.isnan(r.ratio) == r.negligible for r in rows)
