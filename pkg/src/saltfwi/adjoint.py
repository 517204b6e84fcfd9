"""Least-squares data misfit and its model-space gradient via the
adjoint-state method: one forward and one conjugate-transpose solve per
(frequency, source), sharing each frequency's factorization."""

from dataclasses import dataclass

import numpy as np

from .grid import Grid2D
from .helmholtz import PmlConfig, assemble_system, factorize, restrict_gradient, solve_multi_rhs
from .survey import DEFAULT_PEAK_HZ, Acquisition, DataCube, forward_model, ricker_weight


@dataclass
class MisfitResult:
    value: float
    gradient: np.ndarray            # (nx, nz), real
    resid_norms: np.ndarray         # per-frequency residual 2-norms (0 where excluded)


def misfit_value(grid: Grid2D, m: np.ndarray, acq: Acquisition, d_obs: DataCube,
                 freq_indices=None, f_peak: float = DEFAULT_PEAK_HZ,
                 pml: PmlConfig = PmlConfig(), threads: int = 1) -> float:
    """0.5*||F(m) - d||^2 over the selected frequencies (forward solves only)."""
    if freq_indices is None:
        freq_indices = range(acq.n_frequencies)
    pred = forward_model(grid, m, acq, f_peak=f_peak, pml=pml,
                         freq_indices=freq_indices, threads=threads)
    idx = list(freq_indices)
    r = pred.values[idx] - d_obs.values[idx]
    return 0.5 * float(np.vdot(r, r).real)


def misfit_and_gradient(grid: Grid2D, m: np.ndarray, acq: Acquisition, d_obs: DataCube,
                        freq_indices=None, f_peak: float = DEFAULT_PEAK_HZ,
                        pml: PmlConfig = PmlConfig(), threads: int = 1) -> MisfitResult:
    """Misfit value plus its gradient with respect to the full model field.

    Per frequency: forward-solve all sources, form receiver residuals,
    adjoint-solve them through the conjugate-transpose system, and
    accumulate the real cross-correlation of the two fields weighted by
    the mass derivative of the operator.  Frequencies are accumulated in
    index order so runs are reproducible.
    """
    if d_obs.acquisition.shape != acq.shape:
        raise ValueError("observed cube does not match the acquisition layout")
    if freq_indices is None:
        freq_indices = range(acq.n_frequencies)
    m = np.asarray(m, dtype=float).reshape(grid.shape)
    src_nodes = acq.source_nodes(grid)
    rec_nodes = acq.receiver_nodes(grid)

    value = 0.0
    gradient = np.zeros(grid.shape)
    resid_norms = np.zeros(acq.n_frequencies)

    for k in sorted(freq_indices):
        f = acq.frequencies[k]
        omega = 2.0 * np.pi * f
        system = factorize(assemble_system(grid, m, omega, pml))
        rec_idx = system.pad_indices(rec_nodes)
        w = ricker_weight(f, f_peak)

        q = np.stack([system.point_source(node) for node in src_nodes])
        u = np.stack([fld.values for fld in solve_multi_rhs(system, q)])
        resid = w * u[:, rec_idx] - d_obs.values[k]           # (n_s, n_r)

        value += 0.5 * float(np.vdot(resid, resid).real)
        resid_norms[k] = float(np.linalg.norm(resid))

        adj_rhs = np.zeros((acq.n_sources, system.n_padded), dtype=complex)
        adj_rhs[:, rec_idx] = resid
        v = np.stack([fld.values for fld in solve_multi_rhs(system, adj_rhs, adjoint=True)])

        g_pad = -w * (system.mass_scale * np.einsum("sn,sn->n", u, np.conj(v))).real
        gradient += restrict_gradient(grid, g_pad, system.pad)

    return MisfitResult(value=value, gradient=gradient, resid_norms=resid_norms)


def fd_gradient_oracle(grid: Grid2D, m: np.ndarray, acq: Acquisition, d_obs: DataCube,
                       directions, steps, freq_indices=None,
                       f_peak: float = DEFAULT_PEAK_HZ,
                       pml: PmlConfig = PmlConfig()):
    """Compare directional derivatives of the misfit against the adjoint
    gradient: central difference (f(m+t*dm) - f(m-t*dm)) / (2t) per
    (direction, step).

    Returns (rows, slopes): one row per pair with the finite-difference
    value, the adjoint inner product and their relative error, and one
    log-log convergence slope per direction (should approach 2).
    """
    if len(directions) == 0:
        raise ValueError("need at least one direction")
    steps = list(steps)
    result = misfit_and_gradient(grid, m, acq, d_obs, freq_indices=freq_indices,
                                 f_peak=f_peak, pml=pml)
    rows = []
    slopes = []
    for di, dm in enumerate(directions):
        dm = np.asarray(dm, dtype=float).reshape(grid.shape)
        inner = float(np.sum(result.gradient * dm))
        errs = []
        for t in steps:
            if t <= 0:
                raise ValueError("steps must be positive")
            f_plus = misfit_value(grid, m + t * dm, acq, d_obs,
                                  freq_indices=freq_indices, f_peak=f_peak, pml=pml)
            f_minus = misfit_value(grid, m - t * dm, acq, d_obs,
                                   freq_indices=freq_indices, f_peak=f_peak, pml=pml)
            fd = (f_plus - f_minus) / (2.0 * t)
            denom = max(abs(inner), abs(fd), np.finfo(float).tiny)
            rel = abs(fd - inner) / denom
            rows.append(dict(direction=di, step=t, fd=fd, adjoint=inner, rel_err=rel,
                             abs_err=abs(fd - inner)))
            errs.append(abs(fd - inner))
        if len(steps) >= 2 and all(e > 0 for e in errs):
            slope = float(np.polyfit(np.log(steps), np.log(errs), 1)[0])
        else:
            slope = float("nan")
        slopes.append(slope)
    return rows, slopes
