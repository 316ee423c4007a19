from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform node grid on [0, length] x [0, 1]; fields are arrays of shape (ny + 1, nx + 1)."""

    nx: int
    ny: int
    length: float

    @property
    def hx(self) -> float:
        return self.length / self.nx

    @property
    def hy(self) -> float:
        return 1.0 / self.ny

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def shape(self) -> tuple:
        return (self.ny + 1, self.nx + 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.nx + 1)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.ny + 1)

    def mesh(self):
        return np.meshgrid(self.x, self.y)

    def sample(self, f) -> np.ndarray:
        X, Y = self.mesh()
        return f(X, Y)

    @classmethod
    def square_cells(cls, ny: int, length: float) -> "GridSpec":
        return cls(int(math.ceil(length * ny)), int(ny), length)

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny}
