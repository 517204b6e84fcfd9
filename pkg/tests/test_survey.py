import numpy as np
import pytest
from scipy.special import hankel1

from saltfwi.errors import NoiseScaleError
from saltfwi.grid import Grid2D
from saltfwi.helmholtz import PmlConfig
from saltfwi.survey import (Acquisition, DataCube, add_noise, build_acquisition,
                            build_paper_acquisition, forward_model, ricker_weight)


def test_ricker_peak_normalization():
    assert ricker_weight(15.0, 15.0) == 1.0
    assert ricker_weight(7.5, 7.5) == 1.0


def test_ricker_vanishes_at_low_frequency():
    assert ricker_weight(1e-12, 15.0) < 1e-20


def test_ricker_closed_form_value():
    w = ricker_weight(2.5, 15.0)
    assert w == pytest.approx((1 / 36) * np.exp(1 - 1 / 36), rel=1e-15)
    assert w == pytest.approx(0.0734, abs=5e-5)
    with pytest.raises(ValueError):
        ricker_weight(-1.0, 15.0)


def test_acquisition_validation():
    with pytest.raises(ValueError):
        Acquisition(sources=[(0, 0)], receivers=[(0, 50)], frequencies=[2.5, 3.0],
                    bands=((0,), (0,)))          # overlapping bands
    with pytest.raises(ValueError):
        Acquisition(sources=[(0, 0)], receivers=[(0, 50)], frequencies=[2.5, 3.0],
                    bands=((1,), (0,)))          # out of order
    with pytest.raises(ValueError):
        Acquisition(sources=[(0, 0)], receivers=[(0, 50)], frequencies=[2.5],
                    bands=((5,),))               # index out of range
    acq = Acquisition(sources=[(0, 0)], receivers=[(0, 50)], frequencies=[2.5, 3.0],
                      bands=((0,),))
    assert acq.shape == (2, 1, 1)


def test_full_scale_acquisition_layout():
    grid = Grid2D(nx=201, nz=61, h=50.0)
    acq = build_paper_acquisition(grid)
    assert acq.n_sources == 50
    assert acq.n_receivers == 100
    assert acq.n_frequencies == 17
    assert np.allclose(acq.frequencies, 2.5 + 0.0625 * np.arange(17))
    assert len(acq.bands) == 4
    assert all(len(b) == 4 for b in acq.bands)
    assert acq.bands[0] == (0, 1, 2, 3)
    assert np.allclose(acq.frequencies[list(acq.bands[0])], [2.5, 2.5625, 2.625, 2.6875])
    assert acq.bands[3] == (12, 13, 14, 15)      # 3.5 Hz stays out of the bands
    # receivers one grid row below the surface
    assert np.all(acq.receivers[:, 1] == 50.0)
    assert np.all(acq.sources[:, 1] == 0.0)
    # sources and receivers sit on grid nodes
    assert np.all(np.mod(acq.sources[:, 0], 50.0) == 0)
    assert np.all(np.mod(acq.receivers[:, 0], 50.0) == 0)


def test_full_scale_acquisition_requires_big_grid():
    with pytest.raises(ValueError):
        build_paper_acquisition(Grid2D(nx=101, nz=31, h=50.0))


def test_forward_model_deterministic(small_grid, small_salt_model, small_acq, small_pml):
    c1 = forward_model(small_grid, small_salt_model.m, small_acq, pml=small_pml)
    c2 = forward_model(small_grid, small_salt_model.m, small_acq, pml=small_pml)
    assert np.array_equal(c1.values, c2.values)


def test_forward_model_threaded_matches_serial(small_grid, small_salt_model, small_acq, small_pml):
    c1 = forward_model(small_grid, small_salt_model.m, small_acq, pml=small_pml)
    c2 = forward_model(small_grid, small_salt_model.m, small_acq, pml=small_pml, threads=2)
    assert np.array_equal(c1.values, c2.values)


def test_forward_model_frequency_subset(small_grid, small_salt_model, small_acq, small_pml):
    full = forward_model(small_grid, small_salt_model.m, small_acq, pml=small_pml)
    part = forward_model(small_grid, small_salt_model.m, small_acq, pml=small_pml,
                         freq_indices=[1])
    assert np.array_equal(part.values[1], full.values[1])
    assert np.all(part.values[0] == 0)


def test_forward_reciprocity_source_receiver_swap():
    grid = Grid2D(nx=41, nz=21, h=50.0)
    rng = np.random.default_rng(1)
    m = (1.0 / 2000.0**2) * (1 + 0.2 * rng.random(grid.shape))
    p1, p2 = (300.0, 200.0), (1500.0, 700.0)
    acq = Acquisition(sources=[p1, p2], receivers=[p1, p2],
                      frequencies=[3.0], bands=((0,),))
    cube = forward_model(grid, m, acq, pml=PmlConfig(width=15))
    a = cube.values[0, 0, 1]
    b = cube.values[0, 1, 0]
    assert abs(a - b) / abs(a) < 1e-8


def test_forward_single_trace_matches_weighted_green_function():
    # homogeneous medium, on-axis receiver close to the source: the sampled
    # value equals W(f) * (i/4) H0^(1)(kr) within a few percent
    v = 1500.0
    grid = Grid2D(nx=41, nz=41, h=50.0)
    m = np.full(grid.shape, 1.0 / v**2)
    f = 2.5                       # 12 points per wavelength at h=50
    src = (1000.0, 1000.0)
    rec = (1250.0, 1000.0)        # r = 5h on-axis
    acq = Acquisition(sources=[src], receivers=[rec], frequencies=[f], bands=((0,),))
    cube = forward_model(grid, m, acq, f_peak=15.0, pml=PmlConfig(width=20))
    k = 2 * np.pi * f / v
    exact = ricker_weight(f, 15.0) * (1j / 4) * hankel1(0, k * 250.0)
    assert abs(cube.values[0, 0, 0] - exact) / abs(exact) < 0.05


def test_add_noise_snr_exact(small_data):
    noisy = add_noise(small_data, snr_db=10.0, seed=7)
    n = noisy.values - small_data.values
    ratio = np.linalg.norm(n) / np.linalg.norm(small_data.values)
    assert ratio == pytest.approx(10 ** (-0.5), rel=1e-13)
    assert noisy.values.shape == small_data.values.shape


def test_add_noise_deterministic(small_data):
    n1 = add_noise(small_data, snr_db=10.0, seed=42)
    n2 = add_noise(small_data, snr_db=10.0, seed=42)
    assert np.array_equal(n1.values, n2.values)
    n3 = add_noise(small_data, snr_db=10.0, seed=43)
    assert not np.array_equal(n1.values, n3.values)


def test_add_noise_infinite_snr_is_identity(small_data):
    out = add_noise(small_data, snr_db=np.inf, seed=0)
    assert np.array_equal(out.values, small_data.values)
    assert out.values is not small_data.values


def test_add_noise_zero_cube_raises(small_acq):
    zero = DataCube(acquisition=small_acq,
                    values=np.zeros(small_acq.shape, dtype=complex))
    with pytest.raises(NoiseScaleError):
        add_noise(zero, snr_db=10.0, seed=0)
    with pytest.raises(ValueError):
        add_noise(zero, snr_db=np.nan, seed=0)


def test_ricker_rescaling_is_diagonal_within_rounding(small_data):
    # unweight/reweight is elementwise; float rounding allows at most
    # one ulp per entry on the round trip
    freqs = small_data.acquisition.frequencies
    w = np.array([ricker_weight(f, 15.0) for f in freqs])[:, None, None]
    roundtrip = (small_data.values / w) * w
    err = np.abs(roundtrip - small_data.values)
    assert np.max(err / np.abs(small_data.values)) < 4e-16


def test_custom_acquisition_band_partition():
    grid = Grid2D(nx=101, nz=31, h=50.0)
    acq = build_acquisition(grid, n_sources=16, n_receivers=32)
    assert acq.n_frequencies == 17
    assert [list(b) for b in acq.bands] == [[0, 1, 2, 3], [4, 5, 6, 7],
                                            [8, 9, 10, 11], [12, 13, 14, 15]]
    assert acq.n_sources == 16 and acq.n_receivers == 32
    acq.validate_for_grid(grid)
