"""Rank-2 plane lattices and modular geometry on R^2 / Lambda."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Lattice:
    """A rank-2 lattice given by two independent basis vectors (columns of B)."""

    basis: np.ndarray  # 2x2, columns are v1, v2
    name: str = "custom"
    _inv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float).reshape(2, 2)
        if abs(np.linalg.det(B)) < 1e-14:
            raise ValueError("lattice basis is singular")
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "_inv", np.linalg.inv(B))

    @staticmethod
    def unit_square() -> "Lattice":
        return Lattice(np.eye(2), name="unit_square")

    @staticmethod
    def rectangle(width: float, height: float) -> "Lattice":
        return Lattice(np.diag([float(width), float(height)]), name="rectangle")

    @staticmethod
    def rhombic() -> "Lattice":
        """60-degree rhombus lattice <(1,0), (cos60, sin60)>."""
        return Lattice(
            np.array([[1.0, 0.5], [0.0, math.sqrt(3.0) / 2.0]]), name="rhombic"
        )

    @property
    def v1(self) -> np.ndarray:
        return self.basis[:, 0]

    @property
    def v2(self) -> np.ndarray:
        return self.basis[:, 1]

    @property
    def det(self) -> float:
        return abs(float(np.linalg.det(self.basis)))

    def to_coords(self, points: np.ndarray) -> np.ndarray:
        """Plane points -> lattice coordinates (solve B c = p)."""
        pts = np.asarray(points, dtype=float)
        return (self._inv @ pts.reshape(-1, 2).T).T.reshape(pts.shape)

    def from_coords(self, coords: np.ndarray) -> np.ndarray:
        c = np.asarray(coords, dtype=float)
        return (self.basis @ c.reshape(-1, 2).T).T.reshape(c.shape)

    def reduce(self, points: np.ndarray) -> np.ndarray:
        """Wrap plane points into the fundamental parallelogram [0,1)^2 in coords."""
        c = self.to_coords(points)
        return self.from_coords(c - np.floor(c))

    def mod_distance(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Distance on R^2/Lambda: min over the 9 lattice translates nearest a-b."""
        d = np.atleast_2d(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        c = self.to_coords(d)
        n = np.round(c)
        best = np.full(len(d), np.inf)
        for di in (-1.0, 0.0, 1.0):
            for dj in (-1.0, 0.0, 1.0):
                cand = d - self.from_coords(n + np.array([di, dj]))
                best = np.minimum(best, np.linalg.norm(cand, axis=1))
        return best if np.ndim(a) > 1 or np.ndim(b) > 1 else float(best[0])

    def nearest_vector(self, d: np.ndarray) -> np.ndarray:
        """Lattice vector closest to plane vector d (coordinate rounding + 3x3 scan)."""
        d = np.asarray(d, dtype=float)
        c = np.round(self.to_coords(d))
        best, best_v = np.inf, None
        for di in (-1.0, 0.0, 1.0):
            for dj in (-1.0, 0.0, 1.0):
                v = self.from_coords(c + np.array([di, dj]))
                r = float(np.linalg.norm(d - v))
                if r < best:
                    best, best_v = r, v
        return best_v
