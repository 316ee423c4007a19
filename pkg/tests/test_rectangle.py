import math

import pytest
from scipy.integrate import trapezoid

from nodalsplit.rectangle import (DomainSpec, ModeIndex, NotAnEigenvalueError, aspect_from_k, crossing_guard,
                                  eigenfunction_eval, eigenvalue, spectral_index)


def _index_brute(N, lam):
    vals = sorted(math.pi ** 2 * (m * m / N ** 2 + n * n) for m in range(1, 200) for n in range(1, 40))
    return 1 + sum(v < lam * (1 - 1e-12) for v in vals)


@pytest.mark.parametrize("k", [3, 4, 5, 8, 13, 40])
def test_double_eigenvalue(k):
    spec = DomainSpec(k)
    assert eigenvalue(spec, ModeIndex(2, 2)) == pytest.approx(eigenvalue(spec, ModeIndex(k, 1)), rel=1e-13)


@pytest.mark.parametrize("k", [3, 4, 6, 9, 20])
def test_index_matches_enumeration(k):
    spec = DomainSpec(k)
    lam = spec.lambda22
    assert spectral_index(spec, lam) == _index_brute(spec.N, lam)
    assert spectral_index(spec, lam) > k


def test_k4_index():
    assert DomainSpec(4).N == 2.0
    assert spectral_index(DomainSpec(4), 5 * math.pi ** 2) == 5


def test_not_an_eigenvalue():
    with pytest.raises(NotAnEigenvalueError):
        spectral_index(DomainSpec(4), 50.0)


def test_bad_inputs():
    with pytest.raises(ValueError):
        aspect_from_k(2)
    with pytest.raises(ValueError):
        DomainSpec(4, -1e-3)
    with pytest.raises(ValueError):
        DomainSpec(4, crossing_guard(2.0))


def test_guard_value():
    assert crossing_guard(2.0) == pytest.approx(math.sqrt(5) - 2)


def test_eigenfunction_normalised():
    import numpy as np
    spec = DomainSpec(5)
    x = np.linspace(0, spec.N, 801)
    y = np.linspace(0, 1, 401)
    X, Y = np.meshgrid(x, y)
    u = eigenfunction_eval(spec, ModeIndex(5, 1), X, Y)
    norm = trapezoid(trapezoid(u * u, x, axis=1), y)
    assert norm == pytest.approx(1.0, rel=1e-5)
