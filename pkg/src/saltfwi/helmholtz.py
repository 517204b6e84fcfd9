"""Frequency-domain acoustic wave operator on a padded grid.

Discretizes  omega^2 * m * u + laplacian(u) = q  with a second-order
five-point stencil.  The unbounded domain is emulated by complex
coordinate stretching (PML-style) inside an absorbing layer wrapped
around the physical grid; each row is scaled by its stretch factors so
the assembled matrix is symmetric (not Hermitian), which makes
source/receiver reciprocity exact and lets adjoint solves reuse the same
factorization through a conjugate-transpose solve.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import DispersionWarning, FactorizationError, SolveError
from .grid import Grid2D

MIN_POINTS_PER_WAVELENGTH = 4.0


@dataclass(frozen=True)
class PmlConfig:
    """Absorbing layer: node count, target round-trip reflection and the
    reference velocity the damping profile is tuned for.

    v_ref is a fixed parameter, not derived from the model: the assembled
    operator must depend on the model only through its mass diagonal or
    adjoint-state gradients pick up an unaccounted term.
    """

    width: int = 20
    reflection: float = 1e-4
    v_ref: float = 4500.0

    def __post_init__(self):
        if self.width < 10:
            raise ValueError("absorbing layer must be at least 10 nodes wide")
        if not 0 < self.reflection < 1:
            raise ValueError("target reflection must be in (0, 1)")
        if self.v_ref <= 0:
            raise ValueError("reference velocity must be positive")


def _stretch_profile(n_pad: int, n_phys: int, pad: int, h: float, omega: float,
                     sigma0: float) -> tuple[np.ndarray, np.ndarray]:
    """Complex stretch s = 1 + i*sigma/omega at node and half-node positions
    along one axis.  sigma ramps quadratically from zero at the physical
    boundary to sigma0 at the outer edge."""
    lp = pad * h

    def sigma_at(t):
        # t: continuous node index; depth into the layer in meters
        left = np.maximum(pad - t, 0.0) * h
        right = np.maximum(t - (pad + n_phys - 1), 0.0) * h
        xi = np.minimum(np.maximum(left, right), lp)
        return sigma0 * (xi / lp) ** 2

    nodes = np.arange(n_pad, dtype=float)
    halves = nodes[:-1] + 0.5
    s_node = 1.0 + 1j * sigma_at(nodes) / omega
    s_half = 1.0 + 1j * sigma_at(halves) / omega
    return s_node, s_half


@dataclass
class HelmholtzSystem:
    """Assembled operator for one frequency, with a reusable direct solve."""

    grid: Grid2D
    omega: float
    pml: PmlConfig
    matrix: sp.csc_matrix
    rhs_scale: np.ndarray        # stretch product sx*sz per padded node
    mass_scale: np.ndarray       # d(A)/d(m) diagonal: omega^2 * sx * sz
    factorization: object = None
    factor_count: int = 0
    solve_count: int = 0
    # SuperLU handles are not safe for simultaneous solves from many threads
    concurrent_solves: bool = field(default=False, repr=False)

    @property
    def pad(self) -> int:
        return self.pml.width

    @property
    def padded_shape(self) -> tuple[int, int]:
        return (self.grid.nx + 2 * self.pad, self.grid.nz + 2 * self.pad)

    @property
    def n_padded(self) -> int:
        nx, nz = self.padded_shape
        return nx * nz

    def pad_index(self, i: int, j: int) -> int:
        """Flat padded index of physical node (i, j)."""
        if not (0 <= i < self.grid.nx and 0 <= j < self.grid.nz):
            raise IndexError(f"physical node ({i}, {j}) outside grid")
        _, nz_pad = self.padded_shape
        return (i + self.pad) * nz_pad + (j + self.pad)

    def pad_indices(self, nodes) -> np.ndarray:
        return np.array([self.pad_index(i, j) for i, j in nodes], dtype=int)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Operator application A @ u on the padded grid."""
        return self.matrix @ np.asarray(u)

    def point_source(self, node: tuple[int, int]) -> np.ndarray:
        """System right-hand side for a unit point source at a physical node.

        The discrete delta carries 1/h^2 so its cell integral is one; the
        sign is chosen so the solved field in a homogeneous medium is the
        outgoing free-space response (i/4)*H0^(1)(omega*sqrt(m)*r).
        """
        q = np.zeros(self.n_padded, dtype=complex)
        n = self.pad_index(*node)
        q[n] = -self.rhs_scale[n] / self.grid.h**2
        return q


def extend_model(grid: Grid2D, m: np.ndarray, pad: int) -> np.ndarray:
    """Edge-replicate a physical field into the absorbing layer."""
    return np.pad(m.reshape(grid.shape), pad, mode="edge")


def restrict_gradient(grid: Grid2D, g_pad: np.ndarray, pad: int) -> np.ndarray:
    """Adjoint of edge replication: pad-node contributions accumulate onto
    the physical node they replicate."""
    nx_pad = grid.nx + 2 * pad
    nz_pad = grid.nz + 2 * pad
    g_pad = g_pad.reshape(nx_pad, nz_pad)
    ii = np.clip(np.arange(nx_pad) - pad, 0, grid.nx - 1)
    jj = np.clip(np.arange(nz_pad) - pad, 0, grid.nz - 1)
    out = np.zeros(grid.shape)
    np.add.at(out, (ii[:, None], jj[None, :]), g_pad)
    return out


def assemble_system(grid: Grid2D, m: np.ndarray, omega: float,
                    pml: PmlConfig = PmlConfig()) -> HelmholtzSystem:
    """Build the complex sparse operator for one angular frequency."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    m = np.asarray(m, dtype=float).reshape(grid.shape)
    if np.any(m <= 0):
        raise ValueError("squared slowness must be strictly positive")

    ppw = 2.0 * np.pi / (omega * np.sqrt(m.max()) * grid.h)
    if ppw < MIN_POINTS_PER_WAVELENGTH:
        warnings.warn(
            f"{ppw:.2f} grid points per wavelength at omega={omega:.3g}",
            DispersionWarning,
        )

    pad = pml.width
    h = grid.h
    m_pad = extend_model(grid, m, pad)
    nx_pad, nz_pad = m_pad.shape
    n = nx_pad * nz_pad

    sigma0 = 3.0 * pml.v_ref * np.log(1.0 / pml.reflection) / (2.0 * pad * h)
    sx, sx_half = _stretch_profile(nx_pad, grid.nx, pad, h, omega, sigma0)
    sz, sz_half = _stretch_profile(nz_pad, grid.nz, pad, h, omega, sigma0)

    scale = sx[:, None] * sz[None, :]
    mass = (omega**2) * scale * m_pad

    idx = np.arange(n).reshape(nx_pad, nz_pad)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(v.ravel())

    # lateral couplings between columns I and I+1 (same row scale sz_J)
    cx = (sz[None, :] / sx_half[:, None]) / h**2          # (nx_pad-1, nz_pad)
    a, b = idx[:-1, :], idx[1:, :]
    add(a, b, cx)
    add(b, a, cx)
    add(a, a, -cx)
    add(b, b, -cx)

    # depth couplings between rows J and J+1
    cz = (sx[:, None] / sz_half[None, :]) / h**2          # (nx_pad, nz_pad-1)
    a, b = idx[:, :-1], idx[:, 1:]
    add(a, b, cz)
    add(b, a, cz)
    add(a, a, -cz)
    add(b, b, -cz)

    diag = idx
    add(diag, diag, mass.astype(complex))

    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsc()

    return HelmholtzSystem(
        grid=grid,
        omega=omega,
        pml=pml,
        matrix=matrix,
        rhs_scale=scale.ravel(),
        mass_scale=(omega**2) * scale.ravel(),
    )


def factorize(system: HelmholtzSystem) -> HelmholtzSystem:
    """LU-factorize in place; the handle supports solves with the matrix and
    with its conjugate transpose."""
    try:
        system.factorization = splu(system.matrix)
    except RuntimeError as exc:
        raise FactorizationError(
            f"factorization failed at omega={system.omega:.6g}: {exc}",
            omega=system.omega,
        ) from exc
    system.factor_count += 1
    return system


@dataclass
class Wavefield:
    """Complex pressure on the padded grid."""

    system: HelmholtzSystem
    values: np.ndarray

    def physical(self) -> np.ndarray:
        """(nx, nz) view of the field restricted to the physical grid."""
        pad = self.system.pad
        nx_pad, nz_pad = self.system.padded_shape
        full = self.values.reshape(nx_pad, nz_pad)
        return full[pad:pad + self.system.grid.nx, pad:pad + self.system.grid.nz]

    def sample(self, nodes) -> np.ndarray:
        """Field values at a list of physical (i, j) nodes."""
        return self.values[self.system.pad_indices(nodes)]


def solve_multi_rhs(system: HelmholtzSystem, sources, adjoint: bool = False):
    """Solve A u = q (or A^H u = q with `adjoint`) for each source vector,
    reusing the factorization.  Returns a list of Wavefield."""
    if system.factorization is None:
        raise SolveError("system is not factorized; call factorize() first")
    qs = np.asarray(sources, dtype=complex)
    single = qs.ndim == 1
    if single:
        qs = qs[None, :]
    if qs.shape[1] != system.n_padded:
        raise SolveError(
            f"source length {qs.shape[1]} does not match system size {system.n_padded}"
        )
    sols = system.factorization.solve(qs.T, trans="H" if adjoint else "N").T
    system.solve_count += qs.shape[0]
    if not np.all(np.isfinite(sols)):
        raise SolveError(f"non-finite wavefield at omega={system.omega:.6g}")
    return [Wavefield(system=system, values=sols[k]) for k in range(sols.shape[0])]
