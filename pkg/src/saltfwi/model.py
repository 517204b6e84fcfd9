"""Split model representation: linear background plus embedded salt bodies.

The medium parameter is squared slowness (s^2/m^2) everywhere inside the
package; velocities in m/s appear only at construction and I/O boundaries.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySaltWarning, InvalidBackgroundError
from .grid import Grid2D

DEFAULT_V_BOUNDS = (1500.0, 4500.0)


def velocity_to_slowness_sq(v):
    return 1.0 / np.asarray(v, dtype=float) ** 2


def slowness_sq_to_velocity(m):
    return 1.0 / np.sqrt(np.asarray(m, dtype=float))


@dataclass(frozen=True)
class BackgroundParam:
    """Linear velocity profile v(z) = v_top + b * depth."""

    v_top: float
    b: float = 0.0

    def __post_init__(self):
        if self.v_top <= 0:
            raise InvalidBackgroundError(f"surface velocity must be positive, got {self.v_top}")


@dataclass
class Model:
    """Background field m0, constant salt value m1 and the composed field m."""

    grid: Grid2D
    m0: np.ndarray
    m1: float
    m: np.ndarray
    indicator: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.m0.shape != self.grid.shape or self.m.shape != self.grid.shape:
            raise ValueError("model fields must match the grid shape")
        if np.any(self.m0 <= 0) or self.m1 <= 0 or np.any(self.m <= 0):
            raise ValueError("squared slowness must be strictly positive")

    def velocity(self) -> np.ndarray:
        return slowness_sq_to_velocity(self.m)

    def check_bounds(self, bounds=DEFAULT_V_BOUNDS, rtol=1e-9):
        lo, hi = bounds
        v = self.velocity()
        if v.min() < lo * (1 - rtol) or v.max() > hi * (1 + rtol):
            raise ValueError(
                f"velocity range [{v.min():.1f}, {v.max():.1f}] exceeds bounds [{lo}, {hi}]"
            )


# ---------------------------------------------------------------------------
# shape descriptors

@dataclass(frozen=True)
class Ellipse:
    """Axis-aligned or rotated ellipse; angle in radians, counterclockwise."""

    center: tuple[float, float]
    semi_axes: tuple[float, float]
    angle: float = 0.0

    def contains(self, grid: Grid2D) -> np.ndarray:
        X, Z = grid.node_coords()
        cx, cz = self.center
        a, b = self.semi_axes
        dx, dz = X - cx, Z - cz
        c, s = np.cos(self.angle), np.sin(self.angle)
        u = c * dx + s * dz
        w = -s * dx + c * dz
        return (u / a) ** 2 + (w / b) ** 2 <= 1.0


@dataclass(frozen=True)
class EllipseUnion:
    ellipses: tuple

    def contains(self, grid: Grid2D) -> np.ndarray:
        mask = np.zeros(grid.shape, dtype=bool)
        for e in self.ellipses:
            mask |= e.contains(grid)
        return mask


@dataclass(frozen=True)
class Polygon:
    """Simple polygon, vertices in order; membership by even-odd crossing rule."""

    vertices: tuple

    def contains(self, grid: Grid2D) -> np.ndarray:
        X, Z = grid.node_coords()
        px = X.ravel()
        pz = Z.ravel()
        inside = np.zeros(px.shape, dtype=bool)
        verts = np.asarray(self.vertices, dtype=float)
        n = len(verts)
        for k in range(n):
            x1, z1 = verts[k]
            x2, z2 = verts[(k + 1) % n]
            crosses = (z1 > pz) != (z2 > pz)
            with np.errstate(divide="ignore", invalid="ignore"):
                x_at = x1 + (pz - z1) * (x2 - x1) / (z2 - z1)
            inside ^= crosses & (px < x_at)
        return inside.reshape(grid.shape)


@dataclass(frozen=True)
class RasterMask:
    mask: np.ndarray

    def contains(self, grid: Grid2D) -> np.ndarray:
        if self.mask.shape != grid.shape:
            raise ValueError(f"mask shape {self.mask.shape} does not match grid {grid.shape}")
        return self.mask.astype(bool)


# ---------------------------------------------------------------------------
# operations

def linear_background(grid: Grid2D, param: BackgroundParam) -> np.ndarray:
    """Squared slowness of v(z) = v_top + b*depth, depth from the grid top."""
    depth = grid.h * np.arange(grid.nz)
    v = param.v_top + param.b * depth
    if np.any(v <= 0):
        raise InvalidBackgroundError(
            f"background velocity non-positive at depth {depth[v <= 0][0]:.1f} m"
        )
    return np.broadcast_to(velocity_to_slowness_sq(v), grid.shape).copy()


def make_salt_model(grid: Grid2D, background: np.ndarray, shape, v_salt: float = 4500.0) -> Model:
    """Embed a constant-velocity salt body in the background field."""
    if background.shape != grid.shape:
        raise ValueError("background field does not match grid shape")
    indicator = shape.contains(grid)
    if not indicator.any():
        warnings.warn("salt shape has no node inside the grid", EmptySaltWarning)
    m1 = float(velocity_to_slowness_sq(v_salt))
    m = np.where(indicator, m1, background)
    return Model(grid=grid, m0=background.copy(), m1=m1, m=m, indicator=indicator)


def model_bounds_project(m: np.ndarray, lo: float = DEFAULT_V_BOUNDS[0],
                         hi: float = DEFAULT_V_BOUNDS[1]) -> np.ndarray:
    """Clip each node's velocity equivalent into [lo, hi] m/s."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    # v = 1/sqrt(m) is monotone decreasing, so clipping v in [lo, hi]
    # equals clipping m in [1/hi^2, 1/lo^2].
    return np.clip(m, 1.0 / hi**2, 1.0 / lo**2)
