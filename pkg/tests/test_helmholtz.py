import numpy as np
import pytest
from scipy.special import hankel1

from saltfwi.errors import DispersionWarning, SolveError
from saltfwi.grid import Grid2D
from saltfwi.helmholtz import (PmlConfig, assemble_system, extend_model, factorize,
                               restrict_gradient, solve_multi_rhs)


def homogeneous_system(nx=31, nz=31, h=50.0, v=2000.0, f=3.0, width=12):
    grid = Grid2D(nx=nx, nz=nz, h=h)
    m = np.full(grid.shape, 1.0 / v**2)
    omega = 2 * np.pi * f
    return grid, m, assemble_system(grid, m, omega, PmlConfig(width=width))


def test_interior_row_applied_to_constant_field():
    grid, m, system = homogeneous_system()
    omega = system.omega
    u = np.ones(system.n_padded, dtype=complex)
    r = system.apply(u)
    # away from the stretched layer the row is exactly omega^2 m
    interior = np.zeros(system.padded_shape, dtype=bool)
    p = system.pad
    interior[p + 1:-p - 1, p + 1:-p - 1] = True
    vals = r.reshape(system.padded_shape)[interior]
    assert np.allclose(vals, omega**2 * m[0, 0], rtol=1e-13, atol=0)
    assert np.allclose(vals.imag, 0.0, atol=1e-18)


def test_interior_row_laplacian_exact_for_quadratics():
    grid, m, system = homogeneous_system()
    p = system.pad
    nx_pad, nz_pad = system.padded_shape
    x = (np.arange(nx_pad) - p) * grid.h
    u = np.broadcast_to((x**2)[:, None], (nx_pad, nz_pad)).astype(complex).ravel()
    r = system.apply(u)
    lap = (r - system.omega**2 * extend_model(grid, m, p).ravel() * u).reshape(
        system.padded_shape)
    interior = lap[p + 1:-p - 1, p + 1:-p - 1]
    assert np.allclose(interior.real, 2.0, rtol=0, atol=1e-9)
    assert np.allclose(interior.imag, 0.0, atol=1e-9)


def test_matrix_is_symmetric():
    _, _, system = homogeneous_system(nx=15, nz=13)
    diff = (system.matrix - system.matrix.T).tocoo()
    worst = np.max(np.abs(diff.data)) if diff.nnz else 0.0
    assert worst < 1e-18


def test_assembly_validation_errors():
    grid = Grid2D(nx=11, nz=11, h=50.0)
    m = np.full(grid.shape, 1.0 / 2000.0**2)
    with pytest.raises(ValueError):
        assemble_system(grid, m, omega=-1.0)
    with pytest.raises(ValueError):
        assemble_system(grid, -m, omega=10.0)
    with pytest.raises(ValueError):
        PmlConfig(width=5)


def test_dispersion_warning_below_four_points_per_wavelength():
    grid = Grid2D(nx=11, nz=11, h=200.0)
    m = np.full(grid.shape, 1.0 / 1500.0**2)
    f = 2.5  # wavelength 600 m -> 3 points per wavelength
    with pytest.warns(DispersionWarning):
        assemble_system(grid, m, 2 * np.pi * f, PmlConfig(width=10))


def test_factorization_residual_on_random_rhs():
    _, _, system = homogeneous_system(nx=21, nz=17)
    factorize(system)
    rng = np.random.default_rng(0)
    for _ in range(3):
        q = rng.standard_normal(system.n_padded) + 1j * rng.standard_normal(system.n_padded)
        u = solve_multi_rhs(system, q)[0].values
        assert np.linalg.norm(system.apply(u) - q) / np.linalg.norm(q) < 1e-10


def test_solve_inverse_consistency():
    _, _, system = homogeneous_system(nx=15, nz=15)
    factorize(system)
    rng = np.random.default_rng(1)
    x0 = rng.standard_normal(system.n_padded) + 1j * rng.standard_normal(system.n_padded)
    u = solve_multi_rhs(system, system.apply(x0))[0].values
    assert np.linalg.norm(u - x0) / np.linalg.norm(x0) < 1e-10


def test_factorization_reused_across_solves():
    _, _, system = homogeneous_system(nx=15, nz=15)
    factorize(system)
    assert system.factor_count == 1
    q1 = np.zeros(system.n_padded, dtype=complex)
    q1[system.pad_index(3, 3)] = 1.0
    q2 = np.zeros(system.n_padded, dtype=complex)
    q2[system.pad_index(7, 9)] = 1.0
    solve_multi_rhs(system, q1)
    solve_multi_rhs(system, q2)
    assert system.factor_count == 1
    assert system.solve_count == 2
    assert system.concurrent_solves is False


def test_solve_requires_factorization_and_matching_length():
    _, _, system = homogeneous_system(nx=15, nz=15)
    with pytest.raises(SolveError):
        solve_multi_rhs(system, np.zeros(system.n_padded, dtype=complex))
    factorize(system)
    with pytest.raises(SolveError):
        solve_multi_rhs(system, np.zeros(10, dtype=complex))


def test_zero_source_gives_zero_field():
    _, _, system = homogeneous_system(nx=15, nz=15)
    factorize(system)
    u = solve_multi_rhs(system, np.zeros(system.n_padded, dtype=complex))[0]
    assert np.array_equal(u.values, np.zeros(system.n_padded, dtype=complex))


def test_solver_linearity_in_source():
    _, _, system = homogeneous_system(nx=21, nz=15)
    factorize(system)
    rng = np.random.default_rng(2)
    q1 = rng.standard_normal(system.n_padded) + 1j * rng.standard_normal(system.n_padded)
    q2 = rng.standard_normal(system.n_padded) + 1j * rng.standard_normal(system.n_padded)
    u1, u2, u12 = (w.values for w in solve_multi_rhs(system, [q1, q2, q1 + q2]))
    scale = np.linalg.norm(u12)
    assert np.linalg.norm(u12 - (u1 + u2)) / scale < 1e-12


def test_adjoint_solve_inner_product_identity():
    _, _, system = homogeneous_system(nx=19, nz=17)
    factorize(system)
    rng = np.random.default_rng(3)
    q = rng.standard_normal(system.n_padded) + 1j * rng.standard_normal(system.n_padded)
    r = rng.standard_normal(system.n_padded) + 1j * rng.standard_normal(system.n_padded)
    a_inv_q = solve_multi_rhs(system, q)[0].values
    ah_inv_r = solve_multi_rhs(system, r, adjoint=True)[0].values
    lhs = np.vdot(r, a_inv_q)          # <A^-1 q, r>
    rhs = np.vdot(ah_inv_r, q)         # <q, (A^H)^-1 r>
    assert abs(lhs - rhs) / abs(lhs) < 1e-10


def test_adjoint_flag_solves_conjugate_transpose():
    _, _, system = homogeneous_system(nx=15, nz=13)
    factorize(system)
    rng = np.random.default_rng(4)
    r = rng.standard_normal(system.n_padded) + 1j * rng.standard_normal(system.n_padded)
    v = solve_multi_rhs(system, r, adjoint=True)[0].values
    residual = system.matrix.conj().T @ v - r
    assert np.linalg.norm(residual) / np.linalg.norm(r) < 1e-10


def test_point_source_green_function_refinement_order():
    # second-order convergence toward the analytic response on a fixed
    # physical domain: the error ratio between h and h/2 is ~4
    v, f = 2000.0, 5.0
    omega = 2 * np.pi * f
    lam = v / f

    def run(nx, ppw):
        h = lam / ppw
        grid = Grid2D(nx=nx, nz=nx, h=h)
        m = np.full(grid.shape, 1.0 / v**2)
        system = factorize(assemble_system(grid, m, omega, PmlConfig(width=20)))
        src = (nx // 2, nx // 2)
        u = solve_multi_rhs(system, system.point_source(src))[0].physical()
        X, Z = grid.node_coords()
        r = np.hypot(X - X[src], Z - Z[src])
        exact = (1j / 4) * hankel1(0, (omega / v) * np.maximum(r, 1e-9))
        mask = r > 3 * h
        return np.linalg.norm((u - exact)[mask]) / np.linalg.norm(exact[mask])

    e_h = run(21, 10)
    e_h2 = run(41, 20)
    assert e_h / e_h2 >= 3.5


def test_absorbing_layer_reflection_below_one_percent():
    # compare against a twice-larger-domain reference; any boundary
    # reflection shows up as a difference inside the small domain
    v, f, h = 1500.0, 3.0, 50.0
    omega = 2 * np.pi * f

    def centered(nx):
        grid = Grid2D(nx=nx, nz=nx, h=h)
        m = np.full(grid.shape, 1.0 / v**2)
        system = factorize(assemble_system(grid, m, omega, PmlConfig(width=20)))
        return solve_multi_rhs(system, system.point_source((nx // 2, nx // 2)))[0].physical()

    n = 41
    u = centered(n)
    big = centered(2 * n - 1)
    c = (2 * n - 1) // 2 - n // 2
    u_ref = big[c:c + n, c:c + n]
    assert np.max(np.abs(u - u_ref)) / np.max(np.abs(u_ref)) < 0.01


def test_wavefield_physical_view_and_sampling():
    grid, _, system = homogeneous_system(nx=15, nz=11)
    factorize(system)
    u = solve_multi_rhs(system, system.point_source((7, 5)))[0]
    phys = u.physical()
    assert phys.shape == grid.shape
    samples = u.sample([(7, 5), (0, 0)])
    assert samples[0] == phys[7, 5]
    assert samples[1] == phys[0, 0]
    assert np.all(np.isfinite(u.values))


def test_extend_restrict_are_adjoint():
    grid = Grid2D(nx=9, nz=7, h=10.0)
    pad = 4
    rng = np.random.default_rng(5)
    m = rng.standard_normal(grid.shape)
    g_pad = rng.standard_normal((grid.nx + 2 * pad) * (grid.nz + 2 * pad))
    lhs = np.sum(extend_model(grid, m, pad).ravel() * g_pad)
    rhs = np.sum(m * restrict_gradient(grid, g_pad, pad))
    assert lhs == pytest.approx(rhs, rel=1e-12)
