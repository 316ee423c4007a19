"""Partial sine series in y of a computed eigenfunction.

v(x, y) = sum_j v_j(x) sin(j pi y); modes j = 1, 2 oscillate with
frequency sqrt(mu - pi^2 j^2), the rest decay exponentially away from
the perturbed side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import BoundaryFn, TrigWeight, quad_weighted
from .grid import GridSpec
from .rectangle import DomainSpec

FIT_WINDOW = (0.1, 0.9)
COND_MAX = 1e8


class AliasingError(ValueError):
    pass


class ModeFitError(RuntimeError):
    pass


@dataclass
class ModeProfile:
    j: int
    values: np.ndarray
    mu_j: float


@dataclass
class ModeSummary:
    a1: float
    a2: float
    v_at_0: np.ndarray  # v_at_0[j - 1] = v_j(0)
    error_sup: float
    error_tail: float

    def to_dict(self) -> dict:
        return {"a1": self.a1, "a2": self.a2, "v_at_0": self.v_at_0.tolist(),
                "error_sup": self.error_sup, "error_tail": self.error_tail}


def modified_eigenvalue(value: float, j: int) -> float:
    return math.sqrt(abs(value - math.pi ** 2 * j * j))


def default_j_max(grid: GridSpec) -> int:
    return min(64, grid.ny // 4)


def extract_modes(field: np.ndarray, grid: GridSpec, j_max: int | None = None, value: float = 0.0) -> list:
    """v_j(x) = 2 int_0^1 v(x, y) sin(j pi y) dy for j = 1..j_max, by the trapezoid rule."""
    j_max = default_j_max(grid) if j_max is None else j_max
    if j_max > grid.ny // 4:
        raise AliasingError(f"j_max = {j_max} exceeds ny / 4 = {grid.ny // 4}")
    y = grid.y
    w = np.full(y.size, grid.hy)
    w[0] = w[-1] = 0.5 * grid.hy
    out = []
    for j in range(1, j_max + 1):
        kern = 2 * w * np.sin(j * math.pi * y)
        out.append(ModeProfile(j, kern @ field, modified_eigenvalue(value, j)))
    return out


def _fit_window(grid: GridSpec):
    x = grid.x
    return (x >= FIT_WINDOW[0] * grid.length) & (x <= FIT_WINDOW[1] * grid.length)


def fit_amplitude(mode: ModeProfile, grid: GridSpec) -> tuple:
    """(cos, sin) coefficients of the mode against cos(mu_j x), sin(mu_j x) on the fit window."""
    sel = _fit_window(grid)
    x = grid.x[sel]
    A = np.column_stack([np.cos(mode.mu_j * x), np.sin(mode.mu_j * x)])
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > COND_MAX:
        raise ModeFitError(f"fit for mode {mode.j} has condition {cond:.3g}")
    coef, *_ = np.linalg.lstsq(A, mode.values[sel], rcond=None)
    return float(coef[0]), float(coef[1])


def error_field(field: np.ndarray, modes, grid: GridSpec):
    """(E, sup|E|, sum_{j>=3} v_j(0)^2) with E = v - v_1 sin(pi y) - v_2 sin(2 pi y)."""
    by_j = {m.j: m for m in modes}
    if 1 not in by_j or 2 not in by_j:
        raise ValueError("modes 1 and 2 are required")
    y = grid.y[:, None]
    E = field - by_j[1].values[None, :] * np.sin(math.pi * y) - by_j[2].values[None, :] * np.sin(2 * math.pi * y)
    tail = float(sum(m.values[0] ** 2 for m in modes if m.j >= 3))
    return E, float(np.max(np.abs(E))), tail


def fit_amplitudes(field: np.ndarray, grid: GridSpec, value: float, j_max: int | None = None) -> tuple:
    """(ModeSummary, modes) for a field on the physical rectangle with eigenvalue `value`."""
    modes = extract_modes(field, grid, j_max, value)
    _, a1 = fit_amplitude(modes[0], grid)
    _, a2 = fit_amplitude(modes[1], grid)
    _, sup, tail = error_field(field, modes, grid)
    v0 = np.array([m.values[0] for m in modes])
    return ModeSummary(a1, a2, v0, sup, tail), modes


def predicted_boundary_values(phi: BoundaryFn, spec: DomainSpec, c_pair, j_max: int) -> np.ndarray:
    """eta times the first-order boundary coefficient of each mode at x = 0."""
    c1, c2 = c_pair
    N, k = spec.N, spec.k
    pref = 4 * math.pi * spec.eta / N ** 1.5
    out = []
    for j in range(1, j_max + 1):
        s1 = quad_weighted(phi, TrigWeight((1, j)))
        s2 = quad_weighted(phi, TrigWeight((2, j)))
        out.append(pref * (k * c1 * s1 + 2 * c2 * s2))
    return np.array(out)


@dataclass
class BoundaryRow:
    j: int
    measured: float
    predicted: float
    ratio: float
    mu_j: float
    negligible: bool


def boundary_coefficients_check(summary: ModeSummary, phi: BoundaryFn, spec: DomainSpec, c_pair,
                                value: float | None = None, floor: float = 1e-14) -> list:
    j_max = summary.v_at_0.size
    pred = predicted_boundary_values(phi, spec, c_pair, j_max)
    scale = max(np.max(np.abs(pred)), floor)
    rows = []
    for j in range(1, j_max + 1):
        m, p = float(summary.v_at_0[j - 1]), float(pred[j - 1])
        small = abs(p) <= 1e-8 * scale
        rows.append(BoundaryRow(j, m, p, float("nan") if small else m / p,
                                modified_eigenvalue(value, j) if value is not None else float("nan"), small))
    return rows
