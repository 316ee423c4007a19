"""Nodal-set geometry of sampled eigenfunctions: domains, curves, hyperbola fits, angles."""
from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.interpolate import RectBivariateSpline
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .grid import GridSpec

ZERO_RTOL = 1e-12
COND_MAX = 1e8
ANGLE_POINTS = 8
ANGLE_POINTS_MIN = 3


class FitError(RuntimeError):
    pass


class GapUnresolvableError(RuntimeError):
    pass


class ShortCurveWarning(UserWarning):
    pass


# --- signs and domains ----------------------------------------------------

def sign_field(values: np.ndarray) -> np.ndarray:
    """Signs in {-1, 0, +1}.

    Nodes with |u| < 1e-12 max|u| take the majority sign of their 4 neighbours,
    repeatedly; nodes left tied (e.g. a whole grid line on which u vanishes) keep
    sign 0 and act as nodal-set nodes.
    """
    values = np.asarray(values, dtype=float)
    scale = np.max(np.abs(values)) if values.size else 0.0
    s = np.sign(values).astype(np.int8)
    s[np.abs(values) < ZERO_RTOL * scale] = 0
    while True:
        zero = s == 0
        if not zero.any():
            break
        p = np.pad(s.astype(np.int32), 1)
        vote = p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
        decided = zero & (vote != 0)
        if not decided.any():
            break
        s[decided] = np.sign(vote[decided])
    return s


def _label(signs: np.ndarray, offset: int = 0):
    pos, npos = ndimage.label(signs > 0)
    neg, nneg = ndimage.label(signs < 0)
    lab = np.where(pos > 0, pos + offset, 0) + np.where(neg > 0, neg + offset + npos, 0)
    return lab, npos + nneg


@dataclass
class RefinedPatch:
    """Spline-refined copy of a rectangle of coarse nodes [j0, j1] x [i0, i1]."""

    i0: int
    i1: int
    j0: int
    j1: int
    factor: int
    values: np.ndarray
    hx: float
    hy: float

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)


def refine_patch(field: np.ndarray, grid: GridSpec, center, half_width: float, target_h: float,
                 pad: int = 4, max_nodes: int = 4_000_000) -> RefinedPatch:
    """Bicubic upsampling of the field around center so that the patch spacing is <= target_h."""
    cx, cy = center
    i0 = max(1, int(math.floor((cx - half_width) / grid.hx)))
    i1 = min(grid.nx - 1, int(math.ceil((cx + half_width) / grid.hx)))
    j0 = max(1, int(math.floor((cy - half_width) / grid.hy)))
    j1 = min(grid.ny - 1, int(math.ceil((cy + half_width) / grid.hy)))
    if i1 - i0 < 2 or j1 - j0 < 2:
        raise ValueError("refinement patch is empty")
    factor = max(1, int(math.ceil(grid.h / target_h)))
    n_nodes = ((i1 - i0) * factor + 1) * ((j1 - j0) * factor + 1)
    if n_nodes > max_nodes:
        raise MemoryError(f"refinement patch would hold {n_nodes} nodes")
    a0, a1 = max(0, i0 - pad), min(grid.nx, i1 + pad)
    b0, b1 = max(0, j0 - pad), min(grid.ny, j1 + pad)
    spline = RectBivariateSpline(grid.y[b0:b1 + 1], grid.x[a0:a1 + 1], field[b0:b1 + 1, a0:a1 + 1])
    xs = np.linspace(grid.x[i0], grid.x[i1], (i1 - i0) * factor + 1)
    ys = np.linspace(grid.y[j0], grid.y[j1], (j1 - j0) * factor + 1)
    vals = spline(ys, xs)
    # keep coarse node values exactly so the two labelings agree on shared nodes
    vals[::factor, ::factor] = field[j0:j1 + 1, i0:i1 + 1]
    return RefinedPatch(i0, i1, j0, j1, factor, vals, grid.hx / factor, grid.hy / factor)


def count_domains(field: np.ndarray, grid: GridSpec | None = None, patches=()) -> int:
    """Number of nodal domains of a field sampled with zero Dirichlet rows and columns.

    Nodes are 4-connected. Inside each refined patch the coarse nodes are replaced
    by the patch nodes, and labels are merged through the nodes both share.
    """
    signs = sign_field(np.asarray(field)[1:-1, 1:-1])
    for p in patches:
        # strictly interior patch nodes, shifted to interior-array indices
        signs[p.j0:p.j1 - 1, p.i0:p.i1 - 1] = 0
    lab, total = _label(signs)
    if not patches:
        return int(total)
    seen = [np.unique(lab)]
    pairs = []
    for p in patches:
        flab, nf = _label(sign_field(p.values), offset=total)
        total += nf
        seen.append(np.unique(flab))
        shared = flab[::p.factor, ::p.factor]
        coarse = lab[p.j0 - 1:p.j1, p.i0 - 1:p.i1]
        keep = (shared > 0) & (coarse > 0)
        pairs.append((shared[keep], coarse[keep]))
    a = np.concatenate([q[0] for q in pairs])
    b = np.concatenate([q[1] for q in pairs])
    graph = coo_matrix((np.ones(a.size), (a, b)), shape=(total + 1, total + 1))
    _, comp = connected_components(graph, directed=False)
    used = np.unique(np.concatenate(seen))
    used = used[used > 0]
    return int(np.unique(comp[used]).size)


# --- curves ----------------------------------------------------------------

@dataclass
class NodalCurve:
    points: np.ndarray  # (n, 2) array of (x, y)
    closed: bool = False
    endpoints_on_boundary: tuple = (False, False)

    @property
    def length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.points, axis=0).T)))

    @property
    def boundary_to_boundary(self) -> bool:
        return not self.closed and all(self.endpoints_on_boundary)

    def mapped(self, fn) -> "NodalCurve":
        return NodalCurve(np.column_stack(fn(self.points[:, 0], self.points[:, 1])), self.closed,
                          self.endpoints_on_boundary)


def ghost_boundary(field: np.ndarray) -> np.ndarray:
    """Replace the zero Dirichlet rows/columns by h times a one-sided normal derivative.

    The nodal set meets the boundary where the normal derivative changes sign, so
    contouring the filled array makes curves end at the right boundary points.
    """
    v = np.array(field, dtype=float)
    v[0] = (4 * v[1] - v[2]) / 2
    v[-1] = (4 * v[-2] - v[-3]) / 2
    v[:, 0] = (4 * v[:, 1] - v[:, 2]) / 2
    v[:, -1] = (4 * v[:, -2] - v[:, -3]) / 2
    return v


# crossing edges per case; edges are 0 bottom, 1 right, 2 top, 3 left
_SEGMENTS = {
    1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 6: [(0, 2)], 7: [(3, 2)],
    8: [(2, 3)], 9: [(0, 2)], 11: [(1, 2)], 12: [(1, 3)], 13: [(0, 1)], 14: [(3, 0)],
}
_SADDLE = {
    (5, True): [(0, 1), (2, 3)], (5, False): [(3, 0), (1, 2)],
    (10, True): [(3, 0), (1, 2)], (10, False): [(0, 1), (2, 3)],
}


def marching_squares(field: np.ndarray, grid: GridSpec, iso: float = 0.0, fill_boundary: bool = True,
                     x0: float = 0.0, y0: float = 0.0) -> list:
    """Zero level set of a node field as polylines.

    Saddle cells are resolved by the sign of the cell-centre average. Pass
    fill_boundary=False for fields that are not zero on the outer frame (patches).
    """
    vals = ghost_boundary(field) if fill_boundary else np.asarray(field, dtype=float)
    vals = vals - iso
    pos = sign_field(vals) > 0
    ny, nx = vals.shape[0] - 1, vals.shape[1] - 1
    hx, hy = grid.hx, grid.hy
    b0, b1, b2, b3 = pos[:-1, :-1], pos[:-1, 1:], pos[1:, 1:], pos[1:, :-1]
    case = b0 * 1 + b1 * 2 + b2 * 4 + b3 * 8
    jc, ic = np.nonzero((case > 0) & (case < 15))
    centre = 0.25 * (vals[:-1, :-1] + vals[:-1, 1:] + vals[1:, 1:] + vals[1:, :-1])
    n_h = ny * (nx + 1) + (nx + 1)  # horizontal edges (j, i): j in 0..ny, i in 0..nx-1

    def edge_id(j, i, e):
        if e == 0:
            return j * nx + i
        if e == 2:
            return (j + 1) * nx + i
        return n_h + j * (nx + 1) + i + (1 if e == 1 else 0)

    adj = defaultdict(list)
    segs = []
    for j, i in zip(jc.tolist(), ic.tolist()):
        c = int(case[j, i])
        pairs = _SADDLE[(c, bool(centre[j, i] > 0))] if c in (5, 10) else _SEGMENTS[c]
        for ea, eb in pairs:
            a, b = edge_id(j, i, ea), edge_id(j, i, eb)
            adj[a].append(len(segs))
            adj[b].append(len(segs))
            segs.append((a, b))

    def point(eid):
        if eid < n_h:
            j, i = divmod(eid, nx)
            va, vb = vals[j, i], vals[j, i + 1]
            t = np.clip(va / (va - vb), 0, 1) if va != vb else 0.5
            return (x0 + (i + t) * hx, y0 + j * hy)
        j, i = divmod(eid - n_h, nx + 1)
        va, vb = vals[j, i], vals[j + 1, i]
        t = np.clip(va / (va - vb), 0, 1) if va != vb else 0.5
        return (x0 + i * hx, y0 + (j + t) * hy)

    used = np.zeros(len(segs), bool)
    curves = []

    def walk(start_edge, first_seg):
        chain = [start_edge]
        seg, edge = first_seg, start_edge
        while seg is not None and not used[seg]:
            used[seg] = True
            a, b = segs[seg]
            edge = b if a == edge else a
            chain.append(edge)
            nxt = [s for s in adj[edge] if not used[s]]
            seg = nxt[0] if nxt else None
        return chain

    def on_border(eid):
        if eid < n_h:
            return eid // nx in (0, ny)
        return (eid - n_h) % (nx + 1) in (0, nx)

    ends = [e for e, ss in adj.items() if len(ss) == 1]
    for e in sorted(ends):
        s = adj[e][0]
        if not used[s]:
            chain = walk(e, s)
            on_frame = (on_border(chain[0]), on_border(chain[-1]))
            curves.append(NodalCurve(np.array([point(q) for q in chain]), False, on_frame))
    for s in range(len(segs)):
        if not used[s]:
            chain = walk(segs[s][0], s)
            curves.append(NodalCurve(np.array([point(q) for q in chain]), chain[0] == chain[-1]))
    return curves


# --- distances -------------------------------------------------------------

def _point_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    L2 = np.einsum("ij,ij->i", d, d)
    t = np.where(L2 > 0, np.einsum("ij,ij->i", p - a, d) / np.where(L2 > 0, L2, 1), 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(*(a + t[:, None] * d - p).T)


def _one_sided_gap(a: np.ndarray, b: np.ndarray) -> float:
    """min over vertices of a of the distance to the polyline b, via nearest vertices of b."""
    _, idx = cKDTree(b).query(a)
    best = math.inf
    for shift in (-1, 0):
        lo = np.clip(idx + shift, 0, len(b) - 2)
        best = min(best, float(np.min(_point_segment(a, b[lo], b[lo + 1]))))
    return best


class InsufficientCurvesError(ValueError):
    pass


class ParametrizationError(ValueError):
    pass


def pair_gap(a: NodalCurve, b: NodalCurve) -> float:
    """Minimum distance between two polylines.

    Nearest vertices come from a k-d tree (spatial hashing); the distance is then
    taken to the segments on either side, in both directions.
    """
    pa, pb = a.points, b.points
    if len(pa) < 2 or len(pb) < 2:
        return float(np.min(cKDTree(pb).query(pa)[0]))
    return min(_one_sided_gap(pa, pb), _one_sided_gap(pb, pa))


def _clip(curve: NodalCurve, region) -> NodalCurve | None:
    if region is None:
        return curve
    (xa, xb), (ya, yb) = region
    p = curve.points
    keep = (p[:, 0] >= xa) & (p[:, 0] <= xb) & (p[:, 1] >= ya) & (p[:, 1] <= yb)
    return NodalCurve(p[keep], curve.closed) if keep.sum() >= 1 else None


def curve_gap(curves, region=None) -> float:
    """Smallest distance between two distinct curves, optionally inside region ((x0, x1), (y0, y1))."""
    inside = [c for c in (_clip(c, region) for c in curves) if c is not None]
    if len(inside) < 2:
        raise InsufficientCurvesError(f"{len(inside)} curve(s) in region")
    best = math.inf
    for i in range(len(inside)):
        for j in range(i + 1, len(inside)):
            best = min(best, pair_gap(inside[i], inside[j]))
    return best


def min_curve_gap(curves) -> float:
    try:
        return curve_gap(curves)
    except InsufficientCurvesError:
        return float("nan")


def graph_deviation(curves, reference, window, axis: str = "x") -> tuple:
    """(sup |curve - reference|, sup |slope - reference'|) over window.

    axis "x" reads the curve as y = g(x) and compares with reference(x); axis "y" reads
    x = g(y). Exactly one curve may enter the window, and it must be monotone there.
    """
    a, b = window
    col = 0 if axis == "x" else 1
    pieces = []
    for c in curves:
        p = c.points
        keep = (p[:, col] >= a) & (p[:, col] <= b)
        if keep.sum() >= 2:
            pieces.append(p[keep])
    if len(pieces) != 1:
        raise ParametrizationError(f"{len(pieces)} curves inside the window")
    p = pieces[0]
    t, v = p[:, col], p[:, 1 - col]
    step = np.diff(t)
    if not (np.all(step > 0) or np.all(step < 0)):
        raise ParametrizationError("curve is not a graph over the window")
    with np.errstate(invalid="ignore"):
        ref = np.asarray(reference(t), dtype=float)
    ok = np.isfinite(ref)
    sup_gap = float(np.max(np.abs(v[ok] - ref[ok]))) if ok.any() else float("nan")
    tm = 0.5 * (t[1:] + t[:-1])
    slope = np.diff(v) / step
    eps = 1e-6 * max(1.0, b - a)
    with np.errstate(invalid="ignore"):
        ref_slope = (np.asarray(reference(tm + eps), float) - np.asarray(reference(tm - eps), float)) / (2 * eps)
    ok = np.isfinite(ref_slope)
    sup_slope = float(np.max(np.abs(slope[ok] - ref_slope[ok]))) if ok.any() else float("nan")
    return sup_gap, sup_slope


# --- boundary angles ------------------------------------------------------

@dataclass
class BoundaryAngle:
    point: tuple
    side: str
    angle_deg: float
    n_fit: int

    @property
    def error_deg(self) -> float:
        return abs(90.0 - self.angle_deg)


def _direction(pts: np.ndarray) -> np.ndarray:
    centred = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    return vt[0]


def boundary_angles(curves, length: float, tol: float, left_x=None, left_slope=None) -> list:
    """Angle between each curve end on the boundary and the boundary tangent.

    Curves must be in physical coordinates. The left side is x = left_x(y) with
    dx/dy = left_slope(y) (default x = 0); the other three sides are straight.
    """
    out = []
    for c in curves:
        if c.closed or len(c.points) < 2:
            continue
        for pts in (c.points, c.points[::-1]):
            x, y = pts[0]
            xl = 0.0 if left_x is None else float(left_x(y))
            if y <= tol:
                side, t = "bottom", np.array([1.0, 0.0])
            elif y >= 1 - tol:
                side, t = "top", np.array([1.0, 0.0])
            elif x >= length - tol:
                side, t = "right", np.array([0.0, 1.0])
            elif x <= xl + tol:
                slope = 0.0 if left_slope is None else float(left_slope(y))
                side, t = "left", np.array([slope, 1.0]) / math.hypot(slope, 1.0)
            else:
                continue
            n = ANGLE_POINTS
            if len(pts) < ANGLE_POINTS:
                warnings.warn(f"curve with {len(pts)} points; {ANGLE_POINTS_MIN}-point angle fit", ShortCurveWarning)
                n = ANGLE_POINTS_MIN
                if len(pts) < n:
                    continue
            d = _direction(pts[:n])
            cosang = min(1.0, abs(float(d @ t)))
            out.append(BoundaryAngle((float(x), float(y)), side, math.degrees(math.acos(cosang)), n))
    return out


# --- hyperbola model near the crossing -------------------------------------

@dataclass
class ModelPolynomial:
    """P = alpha (x - x0)(y - y0) + beta (x - x0) + upsilon (y - y0) + rho."""

    alpha: float
    beta: float
    upsilon: float
    rho: float
    x0: float
    y0: float

    def __call__(self, x, y):
        dx, dy = np.asarray(x) - self.x0, np.asarray(y) - self.y0
        return self.alpha * dx * dy + self.beta * dx + self.upsilon * dy + self.rho

    @property
    def center(self) -> tuple:
        return (self.x0 - self.upsilon / self.alpha, self.y0 - self.beta / self.alpha)

    @property
    def d(self) -> float:
        return (self.beta * self.upsilon - self.rho * self.alpha) / self.alpha ** 2

    @property
    def gap(self) -> float:
        """Distance between the two branches of the hyperbola P = 0."""
        return math.sqrt(8 * abs(self.d))


class DegenerateModelError(FitError):
    pass


@dataclass
class HyperbolaFit:
    model: ModelPolynomial
    h: float
    method: str
    radius: float = float("nan")
    condition: float = float("nan")

    @property
    def gap(self) -> float:
        return self.model.gap

    @property
    def resolvable(self) -> bool:
        return self.model.gap > 4 * self.h

    @property
    def angle_sign(self) -> int:
        return int(np.sign(self.model.rho))

    def to_dict(self) -> dict:
        m = self.model
        return {"method": self.method, "alpha": m.alpha, "beta": m.beta, "upsilon": m.upsilon,
                "rho": m.rho, "center_x": m.center[0], "center_y": m.center[1], "d_const": m.d,
                "gap": m.gap, "angle_sign": self.angle_sign, "h": self.h, "resolvable": self.resolvable}


def fit_radius(eta: float) -> float:
    return 2 * eta ** 0.4


def bilinear(field: np.ndarray, grid: GridSpec, x: float, y: float) -> float:
    i = min(int(x / grid.hx), grid.nx - 1)
    j = min(int(y / grid.hy), grid.ny - 1)
    tx, ty = x / grid.hx - i, y / grid.hy - j
    return float((1 - tx) * (1 - ty) * field[j, i] + tx * (1 - ty) * field[j, i + 1]
                 + (1 - tx) * ty * field[j + 1, i] + tx * ty * field[j + 1, i + 1])


def _column_interp(values: np.ndarray, grid: GridSpec, x: float) -> float:
    return float(np.interp(x, grid.x, values))


def fit_hyperbola(field: np.ndarray, grid: GridSpec, spec, c_pair, h_analysis: float | None = None,
                  require_resolvable: bool = False) -> HyperbolaFit:
    """Local model P of the upper-branch field near the limiting crossing (N/2, y_bar).

    alpha is the mixed derivative of c1 psi_{k,1} + c2 psi_{2,2} there, rho the field value,
    and beta, upsilon the first derivatives of the two oscillatory modes only (the
    exponentially decaying part is dropped). field lives on the physical rectangle.
    """
    from .hadamard import crossing_height
    from .modes import extract_modes

    k, N = spec.k, spec.N
    c1, c2 = c_pair
    x0 = N / 2
    y0 = crossing_height(spec, c_pair)
    r = fit_radius(spec.eta) if spec.eta > 0 else 0.0
    if not (r < x0 and r < min(y0, 1 - y0)):
        raise FitError(f"fit disc of radius {r:.3g} leaves the rectangle")
    pi = math.pi
    alpha = (2 / math.sqrt(N)) * (c1 * (k * pi / N) * math.cos(k * pi / 2) * pi * math.cos(pi * y0)
                                  + c2 * (2 * pi / N) * math.cos(pi) * 2 * pi * math.cos(2 * pi * y0))
    if alpha == 0:
        raise DegenerateModelError("mixed derivative vanishes at the crossing")
    m1, m2 = extract_modes(field, grid, 2)
    dx = grid.hx
    deriv = lambda v: (_column_interp(v, grid, x0 + dx) - _column_interp(v, grid, x0 - dx)) / (2 * dx)
    beta = deriv(m1.values) * math.sin(pi * y0) + deriv(m2.values) * math.sin(2 * pi * y0)
    upsilon = (_column_interp(m1.values, grid, x0) * pi * math.cos(pi * y0)
               + _column_interp(m2.values, grid, x0) * 2 * pi * math.cos(2 * pi * y0))
    rho = bilinear(field, grid, x0, y0)
    model = ModelPolynomial(alpha, float(beta), float(upsilon), rho, x0, y0)
    fit = HyperbolaFit(model, grid.h if h_analysis is None else h_analysis, "pointwise", r)
    if require_resolvable and not fit.resolvable:
        raise GapUnresolvableError(f"gap {fit.gap:.3g} not above 4 h = {4 * fit.h:.3g}")
    return fit


def fit_hyperbola_lsq(field: np.ndarray, grid: GridSpec, x0: float, y0: float, radius: float,
                      h_analysis: float | None = None) -> HyperbolaFit:
    """Least-squares fit of the bilinear model to all nodes within radius of (x0, y0)."""
    X, Y = grid.mesh()
    dx, dy = X - x0, Y - y0
    mask = dx ** 2 + dy ** 2 <= radius ** 2
    if mask.sum() < 8:
        raise FitError(f"only {int(mask.sum())} nodes inside radius {radius:.3g}")
    A = np.column_stack([dx[mask] * dy[mask], dx[mask], dy[mask], np.ones(mask.sum())])
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > COND_MAX:
        raise FitError(f"design matrix condition {cond:.3g} exceeds {COND_MAX:.0e}")
    coef, *_ = np.linalg.lstsq(A, field[mask], rcond=None)
    model = ModelPolynomial(*map(float, coef), x0, y0)
    return HyperbolaFit(model, grid.h if h_analysis is None else h_analysis, "lsq", radius, cond)


@dataclass
class NodalDecomposition:
    curves: list
    domain_count: int
    crossing_detected: bool
    gap: float | None = None
    hyperbola: HyperbolaFit | None = None
