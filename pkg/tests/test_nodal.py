import math
import warnings
from collections import deque

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nodalsplit.boundary import BoundaryFn
from nodalsplit.grid import GridSpec
from nodalsplit.hadamard import crossing_height, hadamard_variation, limit_fields
from nodalsplit.nodal import (InsufficientCurvesError, ModelPolynomial, NodalCurve, ParametrizationError,
                              ShortCurveWarning, boundary_angles, count_domains, curve_gap, fit_hyperbola_lsq,
                              graph_deviation, marching_squares, refine_patch, sign_field)
from nodalsplit.rectangle import DomainSpec

L = 2.0
G = GridSpec(128, 64, L)


def _psi(m, n, g=G):
    X, Y = g.mesh()
    return np.sin(m * np.pi * X / g.length) * np.sin(n * np.pi * Y)


def _bfs_count(signs):
    seen = np.zeros(signs.shape, bool)
    count = 0
    for start in zip(*np.nonzero(signs)):
        if seen[start]:
            continue
        count += 1
        q = deque([start])
        seen[start] = True
        while q:
            j, i = q.popleft()
            for a, b in ((j + 1, i), (j - 1, i), (j, i + 1), (j, i - 1)):
                if 0 <= a < signs.shape[0] and 0 <= b < signs.shape[1] and not seen[a, b] \
                        and signs[a, b] == signs[j, i]:
                    seen[a, b] = True
                    q.append((a, b))
    return count


@pytest.mark.parametrize("m,n", [(1, 1), (2, 2), (3, 1), (4, 2), (5, 3)])
def test_product_modes(m, n):
    f = _psi(m, n, GridSpec(130, 66, L))  # grid lines avoid the nodal lines
    assert count_domains(f) == m * n
    assert count_domains(-f) == m * n


def test_nodal_lines_on_grid_lines_count():
    assert count_domains(_psi(2, 2)) == 4
    assert count_domains(_psi(4, 1)) == 4


@given(st.integers(0, 2 ** 32 - 1), st.integers(3, 12), st.integers(3, 12))
def test_labeling_matches_bfs(seed, ny, nx):
    rng = np.random.default_rng(seed)
    inner = rng.choice([-1.0, 1.0], size=(ny - 1, nx - 1))
    f = np.zeros((ny + 1, nx + 1))
    f[1:-1, 1:-1] = inner
    assert count_domains(f) == _bfs_count(inner)


def test_sign_field_majority_fill():
    v = np.array([[1.0, 1.0, 1.0], [1.0, 0.0, -1.0], [1.0, 1.0, 1.0]])
    assert sign_field(v)[1, 1] == 1
    line = np.array([[1.0, 0.0, -1.0]] * 3)
    assert np.all(sign_field(line)[:, 1] == 0)


def test_vertical_line_curve():
    curves = marching_squares(_psi(2, 1, GridSpec(129, 64, L)), GridSpec(129, 64, L))
    assert len(curves) == 1
    c = curves[0]
    assert c.boundary_to_boundary
    assert np.allclose(c.points[:, 0], L / 2, atol=1e-3)
    assert c.length == pytest.approx(1.0, abs=1e-9)


def test_ground_state_has_no_curves():
    assert marching_squares(_psi(1, 1), G) == []
    assert count_domains(_psi(1, 1)) == 1


def test_sign_flip_invariance():
    spec = DomainSpec(6)
    g = GridSpec(300, 160, spec.N)
    v0, w0 = limit_fields(spec, hadamard_variation(BoundaryFn.preset("bump", 1 / 6), 6).c_pair, g)
    for f in (v0, w0):
        assert count_domains(f) == count_domains(-f)
        assert len(marching_squares(f, g)) == len(marching_squares(-f, g))


def _saddle(d, g, x0, y0):
    X, Y = g.mesh()
    return (X - x0) * (Y - y0) - d


def test_patch_resolves_sub_grid_gap():
    g = GridSpec(64, 64, 1.0)
    h = g.hx
    x0, y0 = 0.5 + h / 2, 0.5 + h / 2  # cell centre: every coarse node sees a crossing
    d = 1e-5
    f = _saddle(d, g, x0, y0)
    assert math.sqrt(8 * d) < h
    assert count_domains(f, g) == 4
    gap = math.sqrt(8 * d)
    patch = refine_patch(f, g, (x0, y0), 3 * gap + 6 * h, gap / 8)
    assert count_domains(f, g, [patch]) == 3
    assert count_domains(-f, g, [refine_patch(-f, g, (x0, y0), 3 * gap + 6 * h, gap / 8)]) == 3


def test_lsq_recovers_exact_model():
    g = GridSpec(200, 100, 2.0)
    true = ModelPolynomial(-3.0, 0.02, -0.01, 4e-4, 1.0, 0.4)
    X, Y = g.mesh()
    fit = fit_hyperbola_lsq(true(X, Y), g, 1.0, 0.4, 0.1)
    assert fit.model.d == pytest.approx(true.d, rel=1e-9)
    assert fit.model.center == pytest.approx(true.center, abs=1e-12)


@given(st.floats(1e-8, 1e-2))
def test_model_gap_is_branch_distance(d):
    m = ModelPolynomial(1.0, 0.0, 0.0, -d, 0.0, 0.0)  # xy = d
    t = np.geomspace(math.sqrt(d) / 50, math.sqrt(d) * 50, 4001)
    a = np.column_stack([t, d / t])
    b = -a
    from scipy.spatial.distance import cdist
    brute = cdist(a[::20], b).min()
    assert m.gap == pytest.approx(brute, rel=1e-3)


def test_exact_v0_crosses_at_predicted_height():
    spec = DomainSpec(4)
    c = hadamard_variation(BoundaryFn.preset("bump", 1 / 6), 4).c_pair
    g = GridSpec(512, 256, spec.N)
    v0, _ = limit_fields(spec, c, g)
    assert count_domains(v0, g) == 4
    yb = crossing_height(spec, c)
    pts = np.vstack([cv.points for cv in marching_squares(v0, g)])
    assert np.min(np.hypot(pts[:, 0] - spec.N / 2, pts[:, 1] - yb)) < g.h


def _two_lines(g):
    X, Y = g.mesh()
    return np.sin(np.pi * X / g.length) * np.sin(np.pi * Y) * (Y - 0.35) * (Y - 0.65)


def test_parallel_line_gap():
    g = GridSpec(200, 100, L)
    curves = marching_squares(_two_lines(g), g)
    assert len(curves) == 2
    assert curve_gap(curves) == pytest.approx(0.3, abs=1e-3)
    with pytest.raises(InsufficientCurvesError):
        curve_gap(curves, region=((0, L), (0.0, 0.5)))


def test_graph_deviation_of_wavy_line():
    g = GridSpec(400, 200, L)
    X, Y = g.mesh()
    ref = lambda x: 0.4 + 0.1 * np.sin(2 * x)
    f = np.sin(np.pi * X / L) * np.sin(np.pi * Y) * (Y - ref(X))
    gap, slope = graph_deviation(marching_squares(f, g), ref, (0.2, 1.8))
    assert gap < 1e-4
    assert slope < 2e-2


def test_graph_deviation_needs_one_curve():
    g = GridSpec(200, 100, L)
    with pytest.raises(ParametrizationError):
        graph_deviation(marching_squares(_two_lines(g), g), lambda x: 0.35 + 0 * x, (0.2, 1.8))


def test_right_angles_of_product_mode():
    g = GridSpec(130, 66, L)
    curves = marching_squares(_psi(2, 2, g), g)
    angles = boundary_angles(curves, L, tol=1e-9)
    assert len(angles) == 4
    assert max(a.error_deg for a in angles) < 1e-6


def test_oblique_line_angle():
    g = GridSpec(400, 200, L)
    X, Y = g.mesh()
    s = 0.2
    f = np.sin(np.pi * X / L) * np.sin(np.pi * Y) * (Y - 0.5 - s * (X - L / 2))
    angles = boundary_angles(marching_squares(f, g), L, tol=1e-9)
    left = [a for a in angles if a.side == "left"]
    assert len(left) == 1
    assert left[0].angle_deg == pytest.approx(90 - math.degrees(math.atan(s)), abs=0.05)


def test_short_curve_warning():
    c = NodalCurve(np.array([[0.5, 0.0], [0.5, 0.01], [0.5, 0.02], [0.5, 0.03]]), False, (True, False))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        out = boundary_angles([c], 1.0, tol=1e-9)
    assert any(issubclass(x.category, ShortCurveWarning) for x in w)
    assert out[0].n_fit == 3 and out[0].error_deg < 1e-9
