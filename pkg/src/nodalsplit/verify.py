"""Acceptance criteria as runnable checks; used by `nodalsplit verify` and the test suite."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import nodal
from .analysis import analyze_branch, analyze_modes
from .boundary import BoundaryFn, rescale_to_admissible
from .grid import GridSpec
from .hadamard import (coefficient_variation, hadamard_variation, limit_fields, max_sin_ratio_sq,
                       merge_threshold, odd_interval, predict_nodal)
from .rectangle import DomainSpec, ModeIndex, eigenvalue, spectral_index
from .solver import assemble, auto_grid, balanced_grid, shift_invert_solve, solve_branches

BUMP = BoundaryFn.preset("bump", 1 / 6)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool | None  # None = skipped
    measured: dict
    tolerance: str
    seconds: float = 0.0
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.passed is not None:
            self.passed = bool(self.passed)

    @property
    def status(self) -> str:
        return "skip" if self.passed is None else ("pass" if self.passed else "FAIL")

    def line(self) -> str:
        return f"[{self.status}] {self.number:2d} {self.name} ({self.seconds:.1f} s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "status": self.status,
                "measured": self.measured, "tolerance": self.tolerance,
                "seconds": self.seconds, "notes": self.notes}


def _timed(fn):
    def wrapper(*args, **kw):
        t = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def random_shapes(n: int, seed: int) -> list:
    """n admissible polynomial boundary functions y (1 - y) q(y) with q >= 0 random."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        deg = int(rng.integers(0, 4))
        q = np.polynomial.Polynomial(rng.uniform(0.0, 1.0, deg + 1))
        base = np.polynomial.Polynomial([0.0, 1.0, -1.0]) * q
        shape = BoundaryFn(tuple(float(c) for c in base.coef), 1.0, family="random")
        try:
            out.append(rescale_to_admissible(shape))
        except ValueError:
            continue
    return out


# --- cached solves --------------------------------------------------------

@lru_cache(maxsize=None)
def solved(k: int, eta: float, ny: int | None = None, phi: BoundaryFn = BUMP):
    spec = DomainSpec(k, eta)
    grid = auto_grid(spec) if ny is None else balanced_grid(spec, ny)
    op = assemble(spec, phi, grid)
    var = hadamard_variation(phi, k, require_admissible=eta > 0)
    upper, lower = solve_branches(spec, phi, grid, op=op)
    return op, var, upper, lower


@lru_cache(maxsize=None)
def analyzed(k: int, eta: float, branch: str, ny: int | None = None, refine: bool = True):
    op, var, upper, lower = solved(k, eta, ny)
    sol = upper if branch == "upper" else lower
    return analyze_branch(sol, op, var, max_patch_nodes=4_000_000 if refine else 0)


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


# --- criteria ---------------------------------------------------------------

@_timed
def criterion_1() -> CriterionResult:
    worst_rel, worst_index_margin = 0.0, math.inf
    for k in range(3, 41):
        spec = DomainSpec(k)
        l22 = eigenvalue(spec, ModeIndex(2, 2))
        lk1 = eigenvalue(spec, ModeIndex(k, 1))
        worst_rel = max(worst_rel, abs(l22 - lk1) / l22)
        worst_index_margin = min(worst_index_margin, spectral_index(spec, lk1) - k)
    ok = worst_rel <= 1e-12 and worst_index_margin > 0
    return CriterionResult(1, "degeneracy and spectral index, k = 3..40", ok,
                           {"max_rel_gap": worst_rel, "min_index_minus_k": worst_index_margin},
                           "rel <= 1e-12; index > k")


@_timed
def criterion_2(seed: int = 0) -> CriterionResult:
    shapes = random_shapes(20, seed)
    worst = {"eig_residual": 0.0, "scale_change": 0.0, "reconstruction": 0.0}
    min_trace = min_det = math.inf
    for i, phi in enumerate(shapes):
        k = 4 + i % 9
        var = hadamard_variation(phi, k)
        d, c = var.d_matrix, var.c_pair
        worst["eig_residual"] = max(worst["eig_residual"], float(np.max(np.abs((d + var.mu_dot * np.eye(2)) @ c))))
        min_trace = min(min_trace, float(np.trace(d)))
        min_det = min(min_det, float(np.linalg.det(d)))
        for s in (0.5, 2.0):
            cs = hadamard_variation(phi.scaled(s), k, require_admissible=False).c_pair
            worst["scale_change"] = max(worst["scale_change"], float(np.max(np.abs(cs - c))))
        N = DomainSpec(k).N
        v1 = coefficient_variation(phi, k, c, 1)
        v2 = coefficient_variation(phi, k, c, 2)
        rc1 = -(k * math.pi / N ** 1.5) * v1 / var.mu_dot
        rc2 = -(2 * math.pi / N ** 1.5) * v2 / var.mu_dot
        worst["reconstruction"] = max(worst["reconstruction"], abs(rc1 - c[0]), abs(rc2 - c[1]))
    ok = (worst["eig_residual"] <= 1e-10 and min_trace > 0 and min_det > 0
          and worst["scale_change"] <= 1e-12 and worst["reconstruction"] <= 1e-9)
    return CriterionResult(2, "Hadamard consistency, 20 random shapes", ok,
                           {**worst, "min_trace": min_trace, "min_det": min_det},
                           "residual 1e-10; trace, det > 0; scale 1e-12; reconstruction 1e-9")


@_timed
def criterion_3(seed: int = 0) -> CriterionResult:
    shapes = random_shapes(20, seed) + [BUMP, BoundaryFn.preset("skew24"), BoundaryFn.preset("skew8")]
    shapes = [s if s.family == "random" else rescale_to_admissible(s) for s in shapes]
    margin1 = margin2 = margin3 = math.inf
    for phi in shapes:
        for k in range(3, 13):
            c1, c2 = hadamard_variation(phi, k).c_pair
            margin1 = min(margin1, math.sqrt(16 / (k * k + 16)) - abs(c1))
            margin2 = min(margin2, abs(c2) - math.sqrt(k * k / (k * k + 16)))
            margin3 = min(margin3, 4 / k - abs(c1))
    ok = margin1 > 0 and margin2 > 0 and margin3 > 0
    return CriterionResult(3, "coefficient envelope", ok,
                           {"min_margin_c1": margin1, "min_margin_c2": margin2, "min_margin_4_over_k": margin3},
                           "all margins strictly positive")


@_timed
def criterion_4(rows: int = 1024) -> CriterionResult:
    meas, ok = {}, True
    for k in (4, 6, 8, 10):
        spec = DomainSpec(k)
        var = hadamard_variation(BUMP, k)
        grid = GridSpec.square_cells(rows, spec.N)
        v0, _ = limit_fields(spec, var.c_pair, grid)
        n = nodal.count_domains(v0, grid)
        fit = nodal.fit_hyperbola(v0, grid, spec, var.c_pair)
        meas[f"v0_k{k}"] = n
        meas[f"v0_k{k}_crossing"] = not fit.resolvable
        ok &= n == 4 and not fit.resolvable
    for k in (5, 7, 9):
        spec = DomainSpec(k)
        grid = GridSpec.square_cells(rows, spec.N)
        v0, _ = limit_fields(spec, hadamard_variation(BUMP, k).c_pair, grid)
        meas[f"v0_k{k}"] = n = nodal.count_domains(v0, grid)
        ok &= n == 3
    for k in (8, 10, 12):
        spec = DomainSpec(k)
        grid = GridSpec.square_cells(rows, spec.N)
        _, w0 = limit_fields(spec, hadamard_variation(BUMP, k).c_pair, grid)
        meas[f"w0_k{k}"] = n = nodal.count_domains(w0, grid)
        ok &= n == k
    agree = 0
    for name in ("skew24", "skew8"):
        phi = rescale_to_admissible(BoundaryFn.preset(name))
        for k in (5, 6, 7):
            pred = predict_nodal(DomainSpec(k), phi, flood_rows=rows)
            meas[f"{name}_k{k}"] = {"flood_w": pred.flood_w, "predicted_w": pred.domain_count_w}
            agree += pred.flood_w == pred.domain_count_w
    m7 = max_sin_ratio_sq(7, odd_interval(7))
    meas["predictor_agreement"] = agree
    meas["M7"] = m7
    meas["M7_threshold"] = merge_threshold(m7)
    ok &= agree == 6 and abs(m7 - 1.736) <= 1e-3
    return CriterionResult(4, "exact nodal counts of the limit eigenfunctions", ok, meas,
                           "exact counts; 6/6 predictor agreement; M7 = 1.736 +- 0.001")


@_timed
def criterion_5() -> CriterionResult:
    lam = 5 * math.pi ** 2
    errs = []
    for ny in (128, 256):
        spec = DomainSpec(4, 0.0)
        grid = GridSpec(2 * ny, ny, spec.N)
        op = assemble(spec, BUMP, grid)
        sols = shift_invert_solve(op, spec.lambda22 * (1 + 1e-3), 6)
        near = sorted(sols, key=lambda s: abs(s.value - lam))[:2]
        errs.append([abs(s.value - lam) for s in near])
    ratios = [errs[0][i] / errs[1][i] for i in range(2)]
    ok = all(3.5 <= r <= 4.5 for r in ratios)
    return CriterionResult(5, "second-order convergence at eta = 0", ok,
                           {"errors_128x256": errs[0], "errors_256x512": errs[1], "ratios": ratios},
                           "ratio in [3.5, 4.5]")


@_timed
def criterion_6() -> CriterionResult:
    etas = (5e-4, 1e-3, 2e-3)
    mu, gamma = [], []
    for eta in etas:
        _, var, up, lo = solved(4, eta, 256)
        mu.append(up.value)
        gamma.append(lo.value)
    fd_mu = [(mu[i + 1] - mu[i]) / (etas[i + 1] - etas[i]) for i in range(2)]
    fd_ga = [(gamma[i + 1] - gamma[i]) / (etas[i + 1] - etas[i]) for i in range(2)]
    rel = [abs(s / var.mu_dot - 1) for s in fd_mu] + [abs(s / var.gamma_dot - 1) for s in fd_ga]
    ordered = all(m > g for m, g in zip(mu, gamma))
    ok = max(rel) <= 0.10 and ordered
    return CriterionResult(6, "branch slopes match the variation matrix", ok,
                           {"fd_mu": fd_mu, "fd_gamma": fd_ga, "mu_dot": var.mu_dot,
                            "gamma_dot": var.gamma_dot, "max_rel_err": max(rel), "mu_above_gamma": ordered},
                           "each slope within 10%; mu > gamma")


@_timed
def criterion_7(ny: int | None = None, refine: bool = True) -> CriterionResult:
    etas = (1e-3, 2e-3, 4e-3)
    res = [analyzed(4, e, "upper", ny, refine) for e in etas]
    gaps = [r.gap for r in res]
    counts = [r.domain_count for r in res]
    resolvable = [r.fit is not None and r.fit.resolvable for r in res]
    meas = {"gaps": gaps, "counts": counts, "resolvable": resolvable,
            "analysis_h": [r.fit.h if r.fit else None for r in res]}
    if not all(resolvable):
        return CriterionResult(7, "square-root gap law", None, meas, "slope in [0.4, 0.6]; 3 domains",
                               notes=["gap not resolvable on this grid; skipped"])
    slope = loglog_slope(etas, gaps)
    meas["slope"] = slope
    ok = 0.4 <= slope <= 0.6 and all(c == 3 for c in counts)
    return CriterionResult(7, "square-root gap law", ok, meas, "slope in [0.4, 0.6]; 3 domains")


@_timed
def criterion_8() -> CriterionResult:
    w1 = analyzed(8, 1e-3, "lower")
    w2 = analyzed(8, 5e-4, "lower")
    v5 = analyzed(5, 1e-3, "upper")
    g1, g2 = w1.min_curve_gap, w2.min_curve_gap
    sep = v5.min_curve_gap
    meas = {"w_k8_domains": w1.domain_count, "w_k8_curves": len(w1.boundary_curves),
            "w_k8_gap": g1, "w_k8_gap_half_eta": g2, "gap_ratio": g2 / g1,
            "v_k5_domains": v5.domain_count, "v_k5_curves": len(v5.boundary_curves), "v_k5_separation": sep}
    ok = (w1.domain_count == 8 and len(w1.boundary_curves) == 7 and 0.8 <= g2 / g1 <= 1.2
          and v5.domain_count == 3 and len(v5.boundary_curves) == 2 and 0.1 <= sep <= 10)
    return CriterionResult(8, "lower branch and odd k", ok, meas,
                           "8 domains, 7 curves, gap +-20%; 3 domains, 2 curves, separation in [0.1, 10]")


A_SWEEP = (5e-4, 1e-3, 2e-3)
A_REFERENCE_ETA = 1e-6


@_timed
def criterion_9(ny: int = 256) -> CriterionResult:
    """A_n deviations are measured against the same grid's small-eta limit, which removes
    the eta-independent discretisation offset of the fitted amplitudes."""
    reports = {}
    for eta in A_SWEEP + (A_REFERENCE_ETA,):
        op, var, up, _ = solved(4, eta, ny)
        reports[eta] = analyze_modes(up, op, var)
    ref = reports[A_REFERENCE_ETA].summary
    lim = reports[A_SWEEP[0]].a_limit
    dev1 = [abs(reports[e].summary.a1 - ref.a1) for e in A_SWEEP]
    dev2 = [abs(reports[e].summary.a2 - ref.a2) for e in A_SWEEP]
    raw1 = [abs(reports[e].summary.a1 - lim[0]) for e in A_SWEEP]
    raw2 = [abs(reports[e].summary.a2 - lim[1]) for e in A_SWEEP]
    rate1, rate2 = loglog_slope(A_SWEEP, dev1), loglog_slope(A_SWEEP, dev2)
    rows = reports[1e-3].rows
    ratios = [rows[j - 1].ratio for j in (1, 2, 3)]
    tails = [reports[e].summary.error_tail for e in A_SWEEP]
    tail_ratios = [tails[0] / tails[1], tails[1] / tails[2]]
    ok = (0.8 <= rate1 <= 1.2 and 0.8 <= rate2 <= 1.2 and all(abs(r - 1) <= 0.2 for r in ratios)
          and all(0.125 <= t <= 0.375 for t in tail_ratios))
    return CriterionResult(9, "mode asymptotics", ok,
                           {"etas": list(A_SWEEP), "a1_dev": dev1, "a2_dev": dev2, "rate_a1": rate1,
                            "rate_a2": rate2, "a1_dev_vs_limit": raw1, "a2_dev_vs_limit": raw2,
                            "boundary_ratios_j123": ratios, "error_tail": tails, "tail_ratios": tail_ratios},
                           "rates in [0.8, 1.2]; ratios within 20%; tail ratio 0.25 +- 50%")


@_timed
def criterion_10() -> CriterionResult:
    cases = {"v_k4": (analyzed(4, 1e-3, "upper"), 4), "v_k5": (analyzed(5, 1e-3, "upper"), 4),
             "w_k8": (analyzed(8, 1e-3, "lower"), 14)}
    meas, ok = {}, True
    for name, (res, want) in cases.items():
        errs = [a.error_deg for a in res.angles]
        meas[name] = {"count": len(errs), "max_error_deg": max(errs, default=float("nan")),
                      "sides": sorted({a.side for a in res.angles})}
        ok &= len(errs) == want and max(errs, default=99) <= 5.0
    return CriterionResult(10, "orthogonal boundary intersections", ok, meas, "within 5 deg; counts 4, 4, 14")


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10)


def run_all(seed: int = 0, ny: int | None = None, refine: bool = True, log=print) -> list:
    out = []
    for fn in CRITERIA:
        if fn is criterion_2 or fn is criterion_3:
            res = fn(seed)
        elif fn is criterion_7:
            res = fn(ny, refine)
        else:
            res = fn()
        log(res.line())
        out.append(res)
    return out
