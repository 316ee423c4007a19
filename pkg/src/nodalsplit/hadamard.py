"""First-order (Hadamard) perturbation of the double eigenvalue lambda_{2,2} = lambda_{k,1}.

The matrix D below governs the splitting: its eigenvalues are minus the
branch slopes, and its eigenvector for the smaller eigenvalue gives the
mixture v0 = c1 psi_{k,1} + c2 psi_{2,2} selected by the upper branch.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .boundary import BoundaryFn, SIN2_1, SIN2_2, LAMBDA_WEIGHT, TrigWeight, check_admissible, quad_weighted
from .grid import GridSpec
from .rectangle import DomainSpec, aspect_from_k


class AdmissibilityError(ValueError):
    def __init__(self, report):
        super().__init__("inadmissible boundary function: " + "; ".join(report.reasons()))
        self.report = report


class DegenerateDirectionError(ValueError):
    pass


class NoNodalHeightError(ValueError):
    pass


class ParityError(ValueError):
    pass


def variation_matrix(phi: BoundaryFn, k: int, require_admissible: bool = True) -> np.ndarray:
    if require_admissible:
        report = check_admissible(phi)
        if not report.admissible:
            raise AdmissibilityError(report)
    N = aspect_from_k(k)
    pref = 4 * math.pi ** 2 / N ** 3
    a = pref * k * k * quad_weighted(phi, SIN2_1)
    b = pref * 2 * k * quad_weighted(phi, LAMBDA_WEIGHT)
    c = pref * 4 * quad_weighted(phi, SIN2_2)
    return np.array([[a, b], [b, c]])


def _eig_small_large(d):
    a, b, c = d[0, 0], d[0, 1], d[1, 1]
    root = math.hypot(a - c, 2 * b)
    large = 0.5 * ((a + c) + root) if a + c >= 0 else 0.5 * ((a + c) - root)
    other = (a * c - b * b) / large if large != 0 else 0.5 * ((a + c) - root)
    lo, hi = sorted((other, large))
    return lo, hi


def branch_slopes(d) -> tuple:
    """(mu_dot, gamma_dot) = minus the eigenvalues of D, upper branch first."""
    d = np.asarray(d, dtype=float)
    lo, hi = _eig_small_large(d)
    return -lo, -hi


def coefficients(d) -> np.ndarray:
    """Unit eigenvector of D for eigenvalue -mu_dot, signed so that c2 > 0."""
    d = np.asarray(d, dtype=float)
    a, b, c = d[0, 0], d[0, 1], d[1, 1]
    if b == 0.0:
        raise DegenerateDirectionError("off-diagonal entry vanishes; c is only defined up to rotation")
    lo, _ = _eig_small_large(d)
    cand = [np.array([-b, a - lo]), np.array([lo - c, b])]
    vec = max(cand, key=np.linalg.norm)
    vec = vec / np.linalg.norm(vec)
    return vec if vec[1] > 0 else -vec


@dataclass(frozen=True)
class VariationResult:
    d_matrix: np.ndarray
    mu_dot: float
    gamma_dot: float
    c_pair: np.ndarray
    lambda_phi: float

    @property
    def c1(self) -> float:
        return float(self.c_pair[0])

    @property
    def c2(self) -> float:
        return float(self.c_pair[1])

    def to_dict(self) -> dict:
        d = self.d_matrix
        return {"a": d[0, 0], "b": d[0, 1], "c": d[1, 1], "mu_dot": self.mu_dot,
                "gamma_dot": self.gamma_dot, "c1": self.c1, "c2": self.c2,
                "lambda_phi": self.lambda_phi}


def hadamard_variation(phi: BoundaryFn, k: int, require_admissible: bool = True) -> VariationResult:
    d = variation_matrix(phi, k, require_admissible)
    mu_dot, gamma_dot = branch_slopes(d)
    N = aspect_from_k(k)
    lam = d[0, 1] * N ** 3 / (4 * math.pi ** 2 * 2 * k)
    return VariationResult(d, mu_dot, gamma_dot, coefficients(d), lam)


def coefficient_variation(phi: BoundaryFn, k: int, c_pair, j: int) -> float:
    """eta-derivative at eta = 0 of the j-th sine coefficient of v on the line x = 0."""
    c1, c2 = c_pair
    N = aspect_from_k(k)
    s1 = quad_weighted(phi, TrigWeight((1, j)))
    s2 = quad_weighted(phi, TrigWeight((2, j)))
    return 4 * math.pi / N ** 1.5 * (2 * c2 * s2 + k * c1 * s1)


# --- nodal parametrisations of the limiting eigenfunctions -------------------

_SING_TOL = 1e-9


def sin_ratio(k: int, x):
    """sin(k pi x / N) / sin(2 pi x / N), continued through x = 0, N and (k even) N/2."""
    N = aspect_from_k(k)
    x = np.asarray(x, dtype=float)
    num = np.sin(k * np.pi * x / N)
    den = np.sin(2 * np.pi * x / N)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    near0 = np.abs(x) < _SING_TOL * N
    nearN = np.abs(x - N) < _SING_TOL * N
    nearM = np.abs(x - N / 2) < _SING_TOL * N
    out = np.where(near0, k / 2.0, out)
    out = np.where(nearN, (-1) ** k * k / 2.0, out)
    if k % 2 == 0:
        out = np.where(nearM, -math.cos(k * math.pi / 2) * k / 2.0, out)
    else:
        out = np.where(nearM, np.inf, out)
    return out


def _arccos_height(arg, scalar):
    arg = np.asarray(arg, dtype=float)
    bad = ~(np.abs(arg) <= 1.0)
    if scalar and bad:
        raise NoNodalHeightError("no nodal point above this x")
    with np.errstate(invalid="ignore"):
        out = np.arccos(np.where(bad, np.nan, arg)) / np.pi
    return float(out) if scalar else out


def f_v(spec: DomainSpec, c_pair, x):
    """Height y of the nodal set of v0 above x (NaN, or an error for scalars, where there is none)."""
    c1, c2 = c_pair
    return _arccos_height(-(c1 / (2 * c2)) * sin_ratio(spec.k, x), np.ndim(x) == 0)


def f_w(spec: DomainSpec, c_pair, x):
    c1, c2 = c_pair
    return _arccos_height((c2 / (2 * c1)) * sin_ratio(spec.k, x), np.ndim(x) == 0)


def crossing_height(spec: DomainSpec, c_pair) -> float:
    if spec.k % 2:
        raise ParityError("the nodal crossing of v0 exists only for even k")
    c1, c2 = c_pair
    return math.acos(math.cos(spec.k * math.pi / 2) * spec.k * c1 / (4 * c2)) / math.pi


def limit_fields(spec: DomainSpec, c_pair, grid: GridSpec):
    """(v0, w0) sampled on the grid."""
    c1, c2 = c_pair
    N = spec.N
    X, Y = grid.mesh()
    p_k1 = (2 / math.sqrt(N)) * np.sin(spec.k * np.pi * X / N) * np.sin(np.pi * Y)
    p_22 = (2 / math.sqrt(N)) * np.sin(2 * np.pi * X / N) * np.sin(2 * np.pi * Y)
    return c1 * p_k1 + c2 * p_22, -c2 * p_k1 + c1 * p_22


# --- nodal-domain predictors ------------------------------------------------

def w_interval(k: int) -> tuple:
    """Interval near 3N/4 holding the first hump of f_w to enter (0, 1) as |c1| grows."""
    N = aspect_from_k(k)
    q = 0.75 * N
    r = k % 4
    if r == 0:
        return (q - N / k, q)
    if r == 1:
        return (q - 3 * N / (4 * k), q + N / (4 * k))
    if r == 2:
        return (q - N / (2 * k), q + N / (2 * k))
    return (q - N / (4 * k), q + 3 * N / (4 * k))


def odd_interval(k: int) -> tuple:
    """(N/2 + N/2k, N/2 + 3N/2k), the hump of f_v next to the midline for odd k."""
    N = aspect_from_k(k)
    return (N / 2 + N / (2 * k), N / 2 + 3 * N / (2 * k))


def max_sin_ratio_sq(k: int, interval: tuple, samples: int = 64) -> float:
    """max of sin^2(k pi x/N)/sin^2(2 pi x/N) on the interval: sample bracket, then golden section."""
    lo, hi = interval
    f = lambda x: float(sin_ratio(k, x)) ** 2
    xs = np.linspace(lo, hi, samples + 1)
    vals = sin_ratio(k, xs) ** 2
    i = int(np.nanargmax(vals))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, samples)]
    res = minimize_scalar(lambda t: -f(t), bracket=None, bounds=(a, b), method="bounded",
                          options={"xatol": 1e-13})
    return max(float(vals[i]), -float(res.fun))


def merge_threshold(m: float) -> float:
    """|c1| above which a hump of height m drops inside (0, 1)."""
    return math.sqrt(m / (4 + m))


@dataclass
class NodalPrediction:
    parity: str
    y_bar: float | None
    f_v_at_0: float
    domain_count_v: int
    domain_count_w: int
    m_k: float
    w_curve_count: int
    flood_v: int | None = None
    flood_w: int | None = None
    w_source: str = "predictor"

    def to_dict(self) -> dict:
        return asdict(self)


def predict_nodal(spec: DomainSpec, phi: BoundaryFn, flood_rows: int | None = 1024,
                  variation: VariationResult | None = None) -> NodalPrediction:
    """Predicted nodal-domain counts for v0 and w0, cross-checked by flood fill when flood_rows is set."""
    from .nodal import count_domains

    var = variation or hadamard_variation(phi, spec.k)
    c = var.c_pair
    k = spec.k
    parity = "even" if k % 2 == 0 else "odd"
    y_bar = crossing_height(spec, c) if parity == "even" else None
    m_k = max_sin_ratio_sq(k, w_interval(k))
    flood_v = flood_w = None
    if flood_rows:
        grid = GridSpec.square_cells(flood_rows, spec.N)
        v0, w0 = limit_fields(spec, c, grid)
        flood_v, flood_w = count_domains(v0, grid), count_domains(w0, grid)
        del v0, w0
    count_v = 4 if parity == "even" else 3
    if k in (3, 4):
        if flood_w is None:
            raise ValueError("k in {3, 4} needs the flood-fill count for w0")
        count_w, source = flood_w, "flood"
    else:
        count_w = k if abs(c[0]) <= merge_threshold(m_k) else k - 2
        source = "predictor"
    return NodalPrediction(parity, y_bar, f_v(spec, c, 0.0), count_v, count_w, m_k,
                           count_w - 1, flood_v, flood_w, source)
