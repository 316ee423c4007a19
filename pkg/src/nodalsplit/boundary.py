"""Boundary profiles for the perturbed left side of the rectangle.

A profile is a polynomial in y on [0, 1] times a positive scale Z.  The
deformed domain is {-eta*phi(y) <= x <= N}.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import minimize_scalar

MAX_ORDER = 5
LAMBDA_TOL = 1e-10
BOUND_TOL = 1e-12
SAMPLES = 4097

# monomial coefficients (ascending powers) with Z = 1
PRESETS = {
    "bump": (0.0, 1.0, -2.0, 1.0),  # y(1-y)^2
    "skew24": tuple([0.0] * 24 + [1.0, -1.0]),  # y^24(1-y)
    "skew8": tuple([0.0] * 8 + [1.0, -1.0]),  # y^8(1-y)
}


class UnsupportedOrderError(ValueError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, coarse, fine):
        super().__init__(f"quadrature not converged: {coarse!r} vs {fine!r}")
        self.coarse = coarse
        self.fine = fine


class InadmissibleShapeError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryFn:
    """phi(y) = scale * sum_i coefficients[i] * y**i."""

    coefficients: tuple
    scale: float = 1.0
    family: str = "polynomial"

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @classmethod
    def preset(cls, name: str, scale: float = 1.0) -> "BoundaryFn":
        if name not in PRESETS:
            raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return cls(PRESETS[name], scale, family=name)

    @property
    def poly(self) -> Polynomial:
        return _poly(self.coefficients) * self.scale

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, y, order: int = 0):
        return eval_phi(self, y, order)

    def scaled(self, s: float) -> "BoundaryFn":
        return replace(self, scale=self.scale * s)

    def to_dict(self) -> dict:
        return {"family": self.family, "coefficients": list(self.coefficients), "scale": self.scale}

    @classmethod
    def from_dict(cls, d) -> "BoundaryFn":
        if isinstance(d, str):
            return cls.preset(d)
        family = d.get("family", "polynomial")
        scale = float(d.get("scale", 1.0))
        if family in PRESETS and "coefficients" not in d:
            return cls.preset(family, scale)
        if "coefficients" not in d:
            raise ValueError("boundary function needs 'coefficients' or a preset family")
        return cls(tuple(d["coefficients"]), scale, family=family)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "BoundaryFn":
        return cls.from_dict(json.loads(text))


@lru_cache(maxsize=256)
def _poly(coefficients: tuple) -> Polynomial:
    return Polynomial(coefficients)


@lru_cache(maxsize=1024)
def _derivative(coefficients: tuple, order: int) -> Polynomial:
    return _poly(coefficients).deriv(order) if order else _poly(coefficients)


def eval_phi(phi: BoundaryFn, y, order: int = 0):
    """Exact value of the order-th derivative of phi at y (scalar or array)."""
    if not 0 <= order <= MAX_ORDER:
        raise UnsupportedOrderError(f"derivative order {order} not in 0..{MAX_ORDER}")
    out = phi.scale * _derivative(phi.coefficients, order)(np.asarray(y, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class TrigWeight:
    """Weight prod_f sin(f*pi*y) over the listed integer frequencies."""

    freqs: tuple = field(default=(2, 1))

    def __call__(self, y):
        out = np.ones_like(np.asarray(y, dtype=float))
        for f in self.freqs:
            out = out * np.sin(f * np.pi * y)
        return out


SIN2_1 = TrigWeight((1, 1))
SIN2_2 = TrigWeight((2, 2))
LAMBDA_WEIGHT = TrigWeight((2, 1))


@lru_cache(maxsize=8)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _composite_gl(f, panels: int, nodes: int = 20) -> float:
    t, w = _leggauss(nodes)
    edges = np.linspace(0.0, 1.0, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    y = 0.5 * (b - a) * t[None, :] + 0.5 * (a + b)
    return float(np.sum(0.5 * (b - a) * w[None, :] * f(y)))


def integrate(f, tol: float = 1e-12, max_panels: int = 4096) -> float:
    """Composite Gauss-Legendre on [0, 1], doubling panels until two estimates agree to tol."""
    panels = 2
    prev = _composite_gl(f, panels)
    while panels < max_panels:
        panels *= 2
        cur = _composite_gl(f, panels)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise QuadratureError(prev, cur)


def quad_weighted(phi: BoundaryFn, weight: TrigWeight) -> float:
    if not isinstance(weight, TrigWeight):
        weight = TrigWeight(tuple(weight))
    return integrate(lambda y: eval_phi(phi, y) * weight(y))


def lambda_phi(phi: BoundaryFn) -> float:
    return quad_weighted(phi, LAMBDA_WEIGHT)


def sup_norm(phi: BoundaryFn, order: int = 0, samples: int = SAMPLES) -> float:
    """max |phi^(order)| on [0, 1]: dense sampling, then a bounded Brent step around the argmax."""
    y = np.linspace(0.0, 1.0, samples)
    vals = np.abs(eval_phi(phi, y, order))
    i = int(np.argmax(vals))
    best = float(vals[i])
    lo, hi = y[max(i - 1, 0)], y[min(i + 1, samples - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: -abs(eval_phi(phi, t, order)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-14})
        best = max(best, -float(res.fun))
    return best


def _min_value(phi: BoundaryFn, samples: int = SAMPLES) -> float:
    y = np.linspace(0.0, 1.0, samples)
    vals = eval_phi(phi, y)
    i = int(np.argmin(vals))
    lo, hi = y[max(i - 1, 0)], y[min(i + 1, samples - 1)]
    res = minimize_scalar(lambda t: eval_phi(phi, t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-14})
    return min(float(vals[i]), float(res.fun))


@dataclass(frozen=True)
class AdmissibilityReport:
    endpoints_ok: bool
    range_ok: bool
    derivative_bounds: tuple
    lambda_phi: float
    admissible: bool

    def to_dict(self) -> dict:
        return {
            "endpoints_ok": self.endpoints_ok,
            "range_ok": self.range_ok,
            "derivative_bounds": list(self.derivative_bounds),
            "lambda_phi": self.lambda_phi,
            "admissible": self.admissible,
        }

    def reasons(self) -> list:
        out = []
        if not self.endpoints_ok:
            out.append("phi(0) or phi(1) is nonzero")
        if not self.range_ok:
            out.append("phi leaves [0, 1]")
        for l, b in enumerate(self.derivative_bounds, start=1):
            if b > 1 + BOUND_TOL:
                out.append(f"sup|phi^({l})| = {b:.6g} > 1")
        if not abs(self.lambda_phi) > LAMBDA_TOL:
            out.append(f"Lambda_phi = {self.lambda_phi:.3g} is zero")
        return out


def check_admissible(phi: BoundaryFn) -> AdmissibilityReport:
    endpoints_ok = abs(phi(0.0)) <= BOUND_TOL and abs(phi(1.0)) <= BOUND_TOL
    range_ok = _min_value(phi) >= -BOUND_TOL and sup_norm(phi) <= 1 + BOUND_TOL
    bounds = tuple(sup_norm(phi, l) for l in range(1, MAX_ORDER + 1))
    lam = lambda_phi(phi)
    ok = (endpoints_ok and range_ok and all(b <= 1 + BOUND_TOL for b in bounds)
          and abs(lam) > LAMBDA_TOL)
    return AdmissibilityReport(endpoints_ok, range_ok, bounds, lam, ok)


def rescale_to_admissible(phi: BoundaryFn) -> BoundaryFn:
    """Largest multiple of the unit-scale shape that satisfies the range and derivative bounds."""
    base = replace(phi, scale=1.0)
    if abs(base(0.0)) > BOUND_TOL or abs(base(1.0)) > BOUND_TOL:
        raise InadmissibleShapeError("endpoints must vanish")
    if _min_value(base) < -BOUND_TOL:
        raise InadmissibleShapeError("shape takes negative values")
    norms = [sup_norm(base, l) for l in range(0, MAX_ORDER + 1)]
    top = max(norms)
    if top == 0.0:
        raise InadmissibleShapeError("zero function cannot be rescaled")
    out = replace(base, scale=1.0 / top)
    if not abs(lambda_phi(out)) > LAMBDA_TOL:
        raise InadmissibleShapeError("Lambda_phi vanishes; the degeneracy does not break")
    return out
