"""Uniform 2D Cartesian grid with depth increasing downward."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid2D:
    """Regular lateral/depth grid.

    Node (i, j) sits at ``(x0 + i*h, z0 + j*h)``; z grows downward with
    z = z0 at the top row.  Fields over the grid are ``(nx, nz)`` arrays
    stored C-order, so the flat index of node (i, j) is ``i*nz + j``
    (depth varies fastest).
    """

    nx: int
    nz: int
    h: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 3 or self.nz < 3:
            raise ValueError(f"grid must be at least 3x3, got {self.nx}x{self.nz}")
        if self.h <= 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.nz)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.nz

    @property
    def x(self) -> np.ndarray:
        x0, _ = self.origin
        return x0 + self.h * np.arange(self.nx)

    @property
    def z(self) -> np.ndarray:
        _, z0 = self.origin
        return z0 + self.h * np.arange(self.nz)

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, z_min, z_max) of the node hull."""
        x0, z0 = self.origin
        return (x0, x0 + (self.nx - 1) * self.h, z0, z0 + (self.nz - 1) * self.h)

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid arrays X, Z of shape (nx, nz)."""
        return np.meshgrid(self.x, self.z, indexing="ij")

    def contains(self, pos) -> bool:
        x_min, x_max, z_min, z_max = self.extent
        x, z = pos
        return x_min <= x <= x_max and z_min <= z <= z_max

    def node_index(self, pos, tol: float = 0.5) -> tuple[int, int]:
        """Nearest node (i, j) to a physical position.

        Raises ValueError when the position is outside the grid or farther
        than ``tol*h`` from the nearest node (sources/receivers must be
        grid-aligned).
        """
        x0, z0 = self.origin
        x, z = pos
        i = int(round((x - x0) / self.h))
        j = int(round((z - z0) / self.h))
        if not (0 <= i < self.nx and 0 <= j < self.nz):
            raise ValueError(f"position {pos} outside grid")
        if abs(x - (x0 + i * self.h)) > tol * self.h or abs(z - (z0 + j * self.h)) > tol * self.h:
            raise ValueError(f"position {pos} is not within {tol}*h of a grid node")
        return i, j
