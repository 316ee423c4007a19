"""Closed-form Dirichlet spectrum of R(N) = [0, N] x [0, 1] at the double eigenvalue."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPECTRUM_CAP = 1e6  # reject lambda / pi^2 above this
MEMBER_RTOL = 1e-9


class NotAnEigenvalueError(ValueError):
    pass


def aspect_from_k(k: int) -> float:
    """N with k^2 = 3 N^2 + 4, which makes lambda_{2,2} = lambda_{k,1}."""
    if int(k) != k or k < 3:
        raise ValueError(f"k must be an integer >= 3, got {k}")
    return math.sqrt((k * k - 4) / 3.0)


def crossing_guard(N: float) -> float:
    """eta above which the lambda_{k,1} branch meets the lambda_{1,2} one."""
    return math.sqrt(N * N + 1.0) - N


@dataclass(frozen=True)
class DomainSpec:
    k: int
    eta: float = 0.0

    def __post_init__(self):
        aspect_from_k(self.k)
        if self.eta < 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")
        if self.eta >= crossing_guard(self.N):
            raise ValueError(f"eta = {self.eta} is past the branch-crossing guard "
                             f"{crossing_guard(self.N):.6g} for k = {self.k}")

    @property
    def N(self) -> float:
        return aspect_from_k(self.k)

    @property
    def lambda22(self) -> float:
        return eigenvalue(self, ModeIndex(2, 2))

    def with_eta(self, eta: float) -> "DomainSpec":
        return DomainSpec(self.k, eta)

    def to_dict(self) -> dict:
        return {"k": self.k, "eta": self.eta}

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        return cls(int(d["k"]), float(d.get("eta", 0.0)))


@dataclass(frozen=True)
class ModeIndex:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError(f"mode indices must be positive, got ({self.m}, {self.n})")


def eigenvalue(spec: DomainSpec, idx: ModeIndex) -> float:
    N = spec.N
    return math.pi ** 2 * (idx.m ** 2 / N ** 2 + idx.n ** 2)


def eigenfunction_eval(spec: DomainSpec, idx: ModeIndex, x, y):
    """L^2(R)-normalised psi_{m,n}(x, y); broadcasts over array inputs."""
    N = spec.N
    return (2.0 / math.sqrt(N)) * np.sin(idx.m * np.pi * np.asarray(x) / N) * np.sin(idx.n * np.pi * np.asarray(y))


def spectrum_below(spec: DomainSpec, bound: float) -> list:
    """All (lambda/pi^2, m, n) with m^2/N^2 + n^2 <= bound, ascending."""
    N = spec.N
    out = []
    n = 1
    while n * n < bound + 1:
        m = 1
        while True:
            val = m * m / (N * N) + n * n
            if val > bound:
                break
            out.append((val, m, n))
            m += 1
        n += 1
    out.sort()
    return out


def spectral_index(spec: DomainSpec, lam: float) -> int:
    """1-based position of the first occurrence of lam in the ascending spectrum."""
    t = lam / math.pi ** 2
    if t > SPECTRUM_CAP:
        raise NotAnEigenvalueError(f"lambda/pi^2 = {t:.3g} exceeds the enumeration cap")
    vals = spectrum_below(spec, t * (1 + 2 * MEMBER_RTOL))
    if not any(abs(v - t) <= MEMBER_RTOL * t for v, _, _ in vals):
        raise NotAnEigenvalueError(f"{lam!r} is not a Dirichlet eigenvalue of R({spec.N:.6g})")
    below = sum(1 for v, _, _ in vals if v < t * (1 - MEMBER_RTOL))
    return below + 1
