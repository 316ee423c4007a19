"""Nodal and modal measurements on solved branches, shared by the CLI and the acceptance runner."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from . import nodal
from .boundary import BoundaryFn
from .hadamard import VariationResult, hadamard_variation
from .modes import ModeSummary, boundary_coefficients_check, fit_amplitudes
from .rectangle import DomainSpec
from .solver import (EigenSolution, PulledBackOperator, assemble, physical_x, reference_x,
                     restrict_to_rectangle, solve_branches)

log = logging.getLogger(__name__)

PATCH_CELLS = 6      # patch half-width, at least this many coarse cells
PATCH_GAPS = 3.0     # ... and at least this many gaps
PATCH_PER_GAP = 8    # patch spacing = gap / 8, so the 4 h rule holds with margin


@dataclass
class BranchAnalysis:
    branch: str
    value: float
    decomposition: nodal.NodalDecomposition
    patch_h: float | None = None
    angles: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def domain_count(self) -> int:
        return self.decomposition.domain_count

    @property
    def curves(self) -> list:
        return self.decomposition.curves

    @property
    def fit(self):
        return self.decomposition.hyperbola

    @property
    def gap(self) -> float:
        g = self.decomposition.gap
        return float("nan") if g is None else g

    @property
    def boundary_curves(self) -> list:
        return [c for c in self.curves if c.boundary_to_boundary]

    @property
    def min_curve_gap(self) -> float:
        return nodal.min_curve_gap(self.curves)

    @property
    def max_angle_error(self) -> float:
        return max((a.error_deg for a in self.angles), default=float("nan"))


def analyze_branch(sol: EigenSolution, op: PulledBackOperator, var: VariationResult,
                   max_patch_nodes: int = 4_000_000) -> BranchAnalysis:
    """Domain count, curves in physical coordinates, boundary angles and (upper branch,
    even k) the hyperbola model with a spline-refined patch over its centre."""
    spec, phi, grid = op.spec, op.phi, op.grid
    fit, patches, patch_h, notes = None, [], None, []
    if sol.branch == "upper" and spec.k % 2 == 0 and spec.eta > 0:
        rect = restrict_to_rectangle(sol, op)
        try:
            fit = nodal.fit_hyperbola(rect, grid, spec, var.c_pair)
            cx, cy = fit.model.center
            half = max(PATCH_CELLS * grid.h, PATCH_GAPS * fit.gap)
            centre = (float(reference_x(spec, phi, cx, cy)), cy)
            patch = nodal.refine_patch(sol.field, grid, centre, half, fit.gap / PATCH_PER_GAP,
                                       max_nodes=max_patch_nodes)
            patches.append(patch)
            patch_h = fit.h = patch.h
        except (nodal.FitError, MemoryError, ValueError) as exc:
            notes.append(f"crossing not refined: {exc}")
            log.warning("crossing not refined: %s", exc)
        if fit is not None and not fit.resolvable:
            notes.append(f"gap {fit.gap:.3g} unresolvable at h = {fit.h:.3g}")
    count = nodal.count_domains(sol.field, grid, patches)
    to_phys = lambda x, y: (physical_x(spec, phi, x, y), y)
    curves = [c.mapped(to_phys) for c in nodal.marching_squares(sol.field, grid)]
    angles = nodal.boundary_angles(curves, spec.N, 1e-9 * max(1.0, spec.N),
                                   left_x=lambda y: -spec.eta * phi(y),
                                   left_slope=lambda y: -spec.eta * phi(y, 1))
    crossing = fit is not None and not fit.resolvable
    dec = nodal.NodalDecomposition(curves, count, crossing, None if fit is None else fit.gap, fit)
    return BranchAnalysis(sol.branch, sol.value, dec, patch_h, angles, notes)


@dataclass
class ModeReport:
    summary: ModeSummary
    rows: list
    a_limit: tuple


def analyze_modes(sol: EigenSolution, op: PulledBackOperator, var: VariationResult) -> ModeReport:
    """Mode amplitudes of the field on R(N), with their limits (+-2/sqrt(N)) c."""
    rect = restrict_to_rectangle(sol, op)
    summary, _ = fit_amplitudes(rect, op.grid, sol.value)
    c1, c2 = var.c_pair
    pair = (-c2, c1) if sol.branch == "lower" else (c1, c2)
    rows = boundary_coefficients_check(summary, op.phi, op.spec, var.c_pair, sol.value)
    s = 2 / math.sqrt(op.spec.N)
    return ModeReport(summary, rows, (s * pair[0], s * pair[1]))


def solve_and_analyze(spec: DomainSpec, phi: BoundaryFn, grid, branches=("upper", "lower")):
    op = assemble(spec, phi, grid)
    var = hadamard_variation(phi, spec.k, require_admissible=spec.eta > 0)
    upper, lower = solve_branches(spec, phi, grid, op=op)
    sols = {"upper": upper, "lower": lower}
    return op, var, sols, {b: analyze_branch(sols[b], op, var) for b in branches}
