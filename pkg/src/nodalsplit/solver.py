"""Finite-difference eigensolver for the Laplacian pulled back to the reference rectangle.

The deformation (x, y) -> ((N + eta phi)/N x - eta phi, y) maps R(N) onto
the perturbed domain, so the Dirichlet problem on the perturbed domain
becomes (L + mu) u = 0 on a fixed rectangle with variable coefficients.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .boundary import BoundaryFn, check_admissible
from .grid import GridSpec
from .hadamard import AdmissibilityError, hadamard_variation, limit_fields
from .rectangle import DomainSpec, crossing_guard

log = logging.getLogger(__name__)

MIN_CELLS = 64
RESIDUAL_TOL = 1e-8
IMAG_TOL = 1e-9


class ResolutionError(ValueError):
    pass


class SingularShiftError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    pass


class BranchIsolationError(RuntimeError):
    pass


class DiscretizationAsymmetryWarning(UserWarning):
    pass


def balanced_grid(spec: DomainSpec, ny: int) -> GridSpec:
    """Grid whose cell aspect hx/hy cancels the O(h^2) splitting of lambda_{2,2} and lambda_{k,1}.

    The 5-point eigenvalue of mode (m, n) is low by pi^4 (m^4 hx^2 / N^4 + n^4 hy^2) / 12;
    equal defects for (2, 2) and (k, 1) need hx/hy = N^2 sqrt(15 / (k^4 - 16)).
    """
    N, k = spec.N, spec.k
    ratio = N * N * math.sqrt(15.0 / (k ** 4 - 16))
    return GridSpec(int(round(N * ny / ratio)), int(ny), N)


def auto_grid(spec: DomainSpec, eta_min: float | None = None, min_rows: int = 256) -> GridSpec:
    eta_min = spec.eta if eta_min is None else eta_min
    ny = min_rows if eta_min <= 0 else max(min_rows, math.ceil(8 / math.sqrt(eta_min)))
    return balanced_grid(spec, ny)


@dataclass
class PulledBackOperator:
    matrix: sp.csr_matrix  # discretisation of -L on interior nodes
    spec: DomainSpec
    phi: BoundaryFn
    grid: GridSpec

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def jacobian(self) -> np.ndarray:
        """det of the deformation at every node, (N + eta phi(y)) / N."""
        N = self.spec.N
        jac_row = (N + self.spec.eta * self.phi(self.grid.y)) / N
        return np.broadcast_to(jac_row[:, None], self.grid.shape)

    def to_field(self, vec) -> np.ndarray:
        g = self.grid
        out = np.zeros(g.shape, dtype=vec.dtype)
        out[1:-1, 1:-1] = vec.reshape(g.ny - 1, g.nx - 1)
        return out

    def from_field(self, fld) -> np.ndarray:
        return np.ascontiguousarray(fld[1:-1, 1:-1]).ravel()


def operator_coefficients(spec: DomainSpec, phi: BoundaryFn, x, y):
    """(c_xx, c_xy, c_x) of L = d_yy + c_xx d_xx + c_xy d_xy + c_x d_x at (x, y)."""
    N, eta = spec.N, spec.eta
    p0, p1, p2 = phi(y), phi(y, 1), phi(y, 2)
    s = N + eta * p0
    d = N - x
    cxx = (N * N + eta ** 2 * p1 ** 2 * d ** 2) / s ** 2
    cxy = 2 * eta * p1 * d / s
    cx = eta * d / s ** 2 * (s * p2 - 2 * eta * p1 ** 2)
    return cxx, cxy, cx


def assemble(spec: DomainSpec, phi: BoundaryFn, grid: GridSpec) -> PulledBackOperator:
    if grid.nx < MIN_CELLS or grid.ny < MIN_CELLS:
        raise ResolutionError(f"grid {grid.nx}x{grid.ny} is coarser than {MIN_CELLS} cells per side")
    if spec.eta > 0:
        report = check_admissible(phi)
        if not report.admissible:
            raise AdmissibilityError(report)
    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    ii, jj = np.meshgrid(np.arange(1, nx), np.arange(1, ny))
    ii, jj = ii.ravel(), jj.ravel()
    cxx, cxy, cx = operator_coefficients(spec, phi, ii * hx, jj * hy)
    cxx = np.broadcast_to(cxx, ii.shape)
    cxy = np.broadcast_to(cxy, ii.shape)
    cx = np.broadcast_to(cx, ii.shape)

    # -L stencil: (di, dj, weight)
    stencil = [
        (0, 0, 2 * cxx / hx ** 2 + 2 / hy ** 2),
        (1, 0, -cxx / hx ** 2 - cx / (2 * hx)),
        (-1, 0, -cxx / hx ** 2 + cx / (2 * hx)),
        (0, 1, np.full(ii.shape, -1 / hy ** 2)),
        (0, -1, np.full(ii.shape, -1 / hy ** 2)),
        (1, 1, -cxy / (4 * hx * hy)),
        (-1, -1, -cxy / (4 * hx * hy)),
        (1, -1, cxy / (4 * hx * hy)),
        (-1, 1, cxy / (4 * hx * hy)),
    ]
    row_id = (jj - 1) * (nx - 1) + (ii - 1)
    rows, cols, vals = [], [], []
    for di, dj, w in stencil:
        ni, nj = ii + di, jj + dj
        keep = (ni >= 1) & (ni <= nx - 1) & (nj >= 1) & (nj <= ny - 1) & (w != 0)
        rows.append(row_id[keep])
        cols.append((nj[keep] - 1) * (nx - 1) + (ni[keep] - 1))
        vals.append(np.asarray(w)[keep])
    n = (nx - 1) * (ny - 1)
    mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return PulledBackOperator(mat, spec, phi, grid)


@dataclass
class EigenSolution:
    value: float
    field: np.ndarray
    branch: str | None
    residual: float
    imag: float = 0.0
    warnings: list = field(default_factory=list)


def _factor(matrix, shift, retries=3):
    n = matrix.shape[0]
    eye = sp.identity(n, format="csc")
    for attempt in range(retries + 1):
        try:
            return spla.splu((matrix - shift * eye).tocsc(), permc_spec="COLAMD"), shift
        except RuntimeError as exc:
            log.warning("factorisation at shift %.12g failed (%s); nudging", shift, exc)
            shift = shift * (1 + 1e-7 * 10 ** attempt) + 1e-9
    raise SingularShiftError(f"(A - shift I) stayed singular near {shift!r}")


def shift_invert_solve(op: PulledBackOperator, shift: float, subspace_dim: int = 6,
                       tol: float = 1e-11, max_sweeps: int = 500, guard: int | None = None,
                       seed: int = 0) -> list:
    """The subspace_dim eigenpairs of op nearest shift, by inverse subspace iteration.

    Ritz values come from the Rayleigh quotient of (A - shift)^-1 in the current basis,
    which resolves eigenvalues near the shift to roundoff of that inverse rather than of A.
    """
    if subspace_dim < 1:
        raise ValueError("subspace_dim must be positive")
    A = op.matrix
    lu, shift = _factor(A, shift)
    guard = max(4, subspace_dim // 2) if guard is None else guard
    p = min(subspace_dim + guard, op.size)
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((op.size, p)))
    prev = None
    for sweep in range(1, max_sweeps + 1):
        Z = lu.solve(Q)
        H = Q.T @ Z
        nu, Y = np.linalg.eig(H)
        order = np.argsort(-np.abs(nu))
        nu, Y = nu[order], Y[:, order]
        theta = shift + 1.0 / nu
        Q, _ = np.linalg.qr(Z)
        if prev is not None and np.max(np.abs(theta[:subspace_dim] - prev[:subspace_dim])) < tol:
            break
        prev = theta
    else:
        raise ConvergenceError(f"no convergence after {max_sweeps} sweeps; drift "
                               f"{np.max(np.abs(theta[:subspace_dim] - prev[:subspace_dim])):.3g}")
    log.debug("subspace iteration converged in %d sweeps", sweep)
    # Ritz vectors in the basis used to build H, i.e. before the last re-orthonormalisation
    Z = lu.solve(Q)
    H = Q.T @ Z
    nu, Y = np.linalg.eig(H)
    order = np.argsort(-np.abs(nu))[:subspace_dim]
    out = []
    for idx in order:
        val = shift + 1.0 / nu[idx]
        vec = Q @ Y[:, idx]
        imag = abs(val.imag)
        vec = np.real(vec * np.exp(-1j * np.angle(vec[np.argmax(np.abs(vec))])))
        vec = vec / np.linalg.norm(vec)
        val = float(val.real)
        residual = float(np.linalg.norm(A @ vec - val * vec))
        sol = EigenSolution(val, op.to_field(vec), None, residual, imag)
        if imag > IMAG_TOL:
            msg = f"Ritz value {val:.12g} has imaginary part {imag:.3g}"
            warnings.warn(msg, DiscretizationAsymmetryWarning)
            sol.warnings.append(msg)
        out.append(sol)
    out.sort(key=lambda s: abs(s.value - shift))
    return out


def normalize(sol: EigenSolution, op: PulledBackOperator) -> EigenSolution:
    """Scale the field to unit L^2 norm on the deformed domain (Jacobian-weighted)."""
    g = op.grid
    norm2 = float(np.sum(sol.field ** 2 * op.jacobian()) * g.hx * g.hy)
    scale = 1.0 / math.sqrt(norm2)
    sol.field = sol.field * scale
    return sol


def solve_branches(spec: DomainSpec, phi: BoundaryFn, grid: GridSpec | None = None,
                   subspace_dim: int = 6, eta_max: float = 0.05, op: PulledBackOperator | None = None):
    """(upper, lower) eigenpairs bifurcating from lambda_{2,2}."""
    if spec.eta > eta_max:
        raise ValueError(f"eta = {spec.eta} above configured eta_max = {eta_max}")
    if spec.eta >= crossing_guard(spec.N):
        raise ValueError("eta past the branch-crossing guard")
    grid = grid or auto_grid(spec)
    op = op or assemble(spec, phi, grid)
    lam = spec.lambda22
    sols = shift_invert_solve(op, lam * (1 + 1e-3), subspace_dim)
    var = hadamard_variation(phi, spec.k, require_admissible=spec.eta > 0)
    window = 10 * spec.eta * (abs(var.gamma_dot) + 1) + 5 * lam * grid.h ** 2
    near = sorted(sols, key=lambda s: abs(s.value - lam))[:2]
    if len(near) < 2 or any(abs(s.value - lam) >= window for s in near):
        found = [round(s.value, 9) for s in sols]
        raise BranchIsolationError(f"fewer than two eigenvalues within {window:.3g} of {lam:.9g}: {found}")
    upper, lower = sorted(near, key=lambda s: -s.value)
    v0, w0 = limit_fields(spec, var.c_pair, grid)
    for sol, ref, name in ((upper, v0, "upper"), (lower, w0, "lower")):
        sol.branch = name
        normalize(sol, op)
        if np.sum(sol.field * ref) < 0:
            sol.field = -sol.field
    return upper, lower


def physical_x(spec: DomainSpec, phi: BoundaryFn, x_ref, y):
    """Image of reference abscissa x_ref at height y under the deformation."""
    N, eta = spec.N, spec.eta
    p = phi(y)
    return x_ref / N * (N + eta * p) - eta * p


def reference_x(spec: DomainSpec, phi: BoundaryFn, x_phys, y):
    N, eta = spec.N, spec.eta
    p = phi(y)
    return N * (x_phys + eta * p) / (N + eta * p)


def restrict_to_rectangle(sol: EigenSolution, op: PulledBackOperator) -> np.ndarray:
    """The solution on the physical rectangle R(N), sampled on the same node grid.

    Each row is resampled at x_ref = N (x + eta phi) / (N + eta phi) with a cubic spline;
    at eta = 0 the result is the field itself.
    """
    from scipy.interpolate import CubicSpline

    spec, g = op.spec, op.grid
    if spec.eta == 0:
        return sol.field.copy()
    out = np.zeros_like(sol.field)
    xs = g.x
    for j, y in enumerate(g.y):
        row = sol.field[j]
        if not np.any(row):
            continue
        xq = reference_x(spec, op.phi, xs, y)
        out[j] = CubicSpline(xs, row)(xq)
    out[:, -1] = 0.0
    out[0] = out[-1] = 0.0
    return out
