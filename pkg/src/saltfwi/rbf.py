"""Radial basis functions and the grid-to-node kernel matrix.

Global families (infinite support) give dense kernels; the Wendland
families are compactly supported on r < 1 (scaled radius) and give sparse
kernels assembled by scanning only the node window inside the support
radius.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import Grid2D

GLOBAL_FAMILIES = (
    "gaussian",
    "multiquadric",
    "inverse-multiquadric",
    "inverse-quadratic",
    "thin-plate-spline",
)
COMPACT_FAMILIES = ("wendland-1", "wendland-2", "wendland-3", "wendland-4")


@dataclass(frozen=True)
class RbfSpec:
    """Kernel family plus the scale parameter beta (1/m).

    For compact families constructed from a node grid, beta = 1/(gamma*h_r)
    so the support radius is gamma node spacings.
    """

    family: str = "wendland-4"
    beta: float = 1.0
    gamma: float = 4.0

    def __post_init__(self):
        if self.family not in GLOBAL_FAMILIES + COMPACT_FAMILIES:
            raise ValueError(f"unknown RBF family {self.family!r}")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def compact(self) -> bool:
        return self.family in COMPACT_FAMILIES

    @property
    def support_radius(self) -> float:
        """Physical radius beyond which the kernel vanishes (inf for global)."""
        return 1.0 / self.beta if self.compact else np.inf

    @classmethod
    def for_node_grid(cls, family: str, nodes: "RbfNodeGrid", gamma: float = 4.0) -> "RbfSpec":
        return cls(family=family, beta=1.0 / (gamma * nodes.h_r), gamma=gamma)


def eval_rbf(spec: RbfSpec, r):
    """Evaluate the kernel at scaled radius r = beta*distance (r >= 0)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("scaled radius must be nonnegative")
    fam = spec.family
    if fam == "gaussian":
        out = np.exp(-(r**2))
    elif fam == "multiquadric":
        out = np.sqrt(1.0 + r**2)
    elif fam == "inverse-multiquadric":
        out = 1.0 / np.sqrt(1.0 + r**2)
    elif fam == "inverse-quadratic":
        out = 1.0 / (1.0 + r**2)
    elif fam == "thin-plate-spline":
        # r^2 log r, continuous limit 0 at r = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(r > 0, r**2 * np.log(np.where(r > 0, r, 1.0)), 0.0)
    else:
        t = np.maximum(1.0 - r, 0.0)
        if fam == "wendland-1":
            out = t**2
        elif fam == "wendland-2":
            out = t**4 * (4 * r + 1)
        elif fam == "wendland-3":
            out = t**6 * (35 * r**2 + 18 * r + 3)
        else:  # wendland-4
            out = t**8 * (32 * r**3 + 25 * r**2 + 8 * r + 1)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RbfNodeGrid:
    """Regular lattice of RBF nodes, padded outside the physical domain."""

    x: np.ndarray          # lateral node coordinates (m)
    z: np.ndarray          # depth node coordinates (m)
    h_r: float
    padding: int

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.x), len(self.z))

    @property
    def n_nodes(self) -> int:
        return len(self.x) * len(self.z)

    def positions(self) -> np.ndarray:
        """(L, 2) node positions; flat index i*nz_r + j, depth fastest."""
        X, Z = np.meshgrid(self.x, self.z, indexing="ij")
        return np.column_stack([X.ravel(), Z.ravel()])


def build_node_grid(grid: Grid2D, spacing_ratio: int = 5, padding: int = 2) -> RbfNodeGrid:
    """Node lattice with spacing h_r = spacing_ratio*h covering the grid hull
    plus `padding` extra node rings outside it."""
    if spacing_ratio < 1:
        raise ValueError("spacing_ratio must be >= 1")
    if padding < 0:
        raise ValueError("padding must be >= 0")
    h_r = spacing_ratio * grid.h
    x_min, x_max, z_min, z_max = grid.extent

    def axis(lo, hi):
        n_span = int(np.ceil((hi - lo) / h_r - 1e-12))
        count = n_span + 1 + 2 * padding
        return lo - padding * h_r + h_r * np.arange(count)

    return RbfNodeGrid(x=axis(x_min, x_max), z=axis(z_min, z_max), h_r=h_r, padding=padding)


class KernelMatrix:
    """N x L map from RBF weights to a level-set field over the grid nodes.

    Grid nodes are C-order flattened (depth fastest); weights follow the
    node-lattice C-order.  Immutable once assembled.
    """

    def __init__(self, grid: Grid2D, nodes: RbfNodeGrid, spec: RbfSpec, matrix):
        self.grid = grid
        self.nodes = nodes
        self.spec = spec
        self.matrix = matrix

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def n_weights(self) -> int:
        return self.matrix.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dot(self, alpha: np.ndarray) -> np.ndarray:
        """Level-set field K @ alpha as an (nx, nz) array."""
        phi = self.matrix @ np.asarray(alpha, dtype=float)
        return np.asarray(phi).reshape(self.grid.shape)

    def tdot(self, field: np.ndarray) -> np.ndarray:
        """Adjoint map K.T @ field for a grid field (nx, nz) or flat vector."""
        w = self.matrix.T @ np.asarray(field, dtype=float).reshape(-1)
        return np.asarray(w).reshape(-1)


def assemble_kernel(grid: Grid2D, nodes: RbfNodeGrid, spec: RbfSpec) -> KernelMatrix:
    """Kernel entries k_ij = Psi(beta * ||x_i - xi_j||)."""
    pos = nodes.positions()
    if not spec.compact:
        X, Z = grid.node_coords()
        dx = X.ravel()[:, None] - pos[None, :, 0]
        dz = Z.ravel()[:, None] - pos[None, :, 1]
        K = eval_rbf(spec, spec.beta * np.hypot(dx, dz))
        return KernelMatrix(grid, nodes, spec, K)

    # compact support: each node only touches grid nodes within radius
    radius = spec.support_radius
    x, z = grid.x, grid.z
    x0, z0 = grid.origin
    h = grid.h
    rows, cols, vals = [], [], []
    for j, (nx_pos, nz_pos) in enumerate(pos):
        i_lo = max(0, int(np.ceil((nx_pos - radius - x0) / h)))
        i_hi = min(grid.nx - 1, int(np.floor((nx_pos + radius - x0) / h)))
        j_lo = max(0, int(np.ceil((nz_pos - radius - z0) / h)))
        j_hi = min(grid.nz - 1, int(np.floor((nz_pos + radius - z0) / h)))
        if i_lo > i_hi or j_lo > j_hi:
            continue
        dx = x[i_lo:i_hi + 1, None] - nx_pos
        dz = z[None, j_lo:j_hi + 1] - nz_pos
        r = spec.beta * np.hypot(dx, dz)
        inside = r < 1.0
        if not inside.any():
            continue
        ii, jj = np.nonzero(inside)
        rows.append((ii + i_lo) * grid.nz + (jj + j_lo))
        cols.append(np.full(ii.size, j))
        vals.append(eval_rbf(spec, r[inside]))
    if rows:
        K = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(grid.n_nodes, nodes.n_nodes),
        ).tocsr()
    else:
        K = sp.csr_matrix((grid.n_nodes, nodes.n_nodes))
    return KernelMatrix(grid, nodes, spec, K)
