"""Acquisition geometry, the forward operator F(m), Ricker frequency
weighting and noise injection at a target SNR."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NoiseScaleError
from .grid import Grid2D
from .helmholtz import PmlConfig, assemble_system, factorize, solve_multi_rhs

DEFAULT_PEAK_HZ = 15.0

# survey layout used by the bundled full-scale experiments
FULL_SCALE_GRID = dict(nx=201, nz=61, h=50.0)
FULL_SCALE_SOURCES = 50
FULL_SCALE_RECEIVERS = 100
FREQ_MIN_HZ = 2.5
FREQ_MAX_HZ = 3.5
FREQ_STEP_HZ = 0.0625
RECEIVER_DEPTH_M = 50.0
N_BANDS = 4
FREQS_PER_BAND = 4


@dataclass(frozen=True)
class Acquisition:
    """Source/receiver positions (meters), frequency list (Hz) and the
    ordered low-to-high partition of frequency indices into bands."""

    sources: np.ndarray        # (n_s, 2)
    receivers: np.ndarray      # (n_r, 2)
    frequencies: np.ndarray    # (n_f,)
    bands: tuple               # tuple of tuples of frequency indices

    def __post_init__(self):
        object.__setattr__(self, "sources", np.atleast_2d(np.asarray(self.sources, dtype=float)))
        object.__setattr__(self, "receivers", np.atleast_2d(np.asarray(self.receivers, dtype=float)))
        object.__setattr__(self, "frequencies", np.asarray(self.frequencies, dtype=float))
        object.__setattr__(self, "bands", tuple(tuple(int(i) for i in b) for b in self.bands))
        if np.any(self.frequencies <= 0):
            raise ValueError("frequencies must be positive")
        seen = set()
        prev_max = -np.inf
        for band in self.bands:
            if not band:
                raise ValueError("empty frequency band")
            idx = list(band)
            if any(i < 0 or i >= len(self.frequencies) for i in idx):
                raise ValueError("band index out of range")
            if seen.intersection(idx):
                raise ValueError("bands must be disjoint")
            seen.update(idx)
            fvals = self.frequencies[idx]
            if fvals.min() <= prev_max:
                raise ValueError("bands must be ordered low to high")
            prev_max = fvals.max()

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def n_receivers(self) -> int:
        return len(self.receivers)

    @property
    def n_frequencies(self) -> int:
        return len(self.frequencies)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_frequencies, self.n_sources, self.n_receivers)

    def validate_for_grid(self, grid: Grid2D):
        for pos in np.vstack([self.sources, self.receivers]):
            if not grid.contains(pos):
                raise ValueError(f"acquisition position {tuple(pos)} outside grid")

    def source_nodes(self, grid: Grid2D):
        return [grid.node_index(p) for p in self.sources]

    def receiver_nodes(self, grid: Grid2D):
        return [grid.node_index(p) for p in self.receivers]


@dataclass
class DataCube:
    """Complex observations indexed (frequency, source, receiver)."""

    acquisition: Acquisition
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.acquisition.shape:
            raise ValueError(
                f"cube shape {self.values.shape} does not match acquisition {self.acquisition.shape}"
            )

    def copy(self) -> "DataCube":
        return DataCube(acquisition=self.acquisition, values=self.values.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def ricker_weight(f: float, f_peak: float = DEFAULT_PEAK_HZ) -> float:
    """Ricker spectrum weight W(f) = (f/f_peak)^2 * exp(1 - (f/f_peak)^2),
    normalized to 1 at the peak frequency."""
    if f <= 0 or f_peak <= 0:
        raise ValueError("frequencies must be positive")
    x = (f / f_peak) ** 2
    return float(x * np.exp(1.0 - x))


def build_acquisition(grid: Grid2D, n_sources: int, n_receivers: int,
                      receiver_depth: float = RECEIVER_DEPTH_M,
                      f_min: float = FREQ_MIN_HZ, f_max: float = FREQ_MAX_HZ,
                      f_step: float = FREQ_STEP_HZ,
                      n_bands: int = N_BANDS,
                      freqs_per_band: int = FREQS_PER_BAND) -> Acquisition:
    """Equispaced surface sources, receivers on the row at `receiver_depth`,
    and contiguous low-to-high bands of `freqs_per_band` frequencies each.

    Positions are snapped to grid nodes (sources and receivers live on
    nodes only).
    """
    x_min, x_max, z_min, _ = grid.extent

    def snapped(n):
        xs = np.linspace(x_min, x_max, n)
        return grid.origin[0] + grid.h * np.round((xs - grid.origin[0]) / grid.h)

    sources = np.column_stack([snapped(n_sources), np.full(n_sources, z_min)])
    depth = z_min + grid.h * round(receiver_depth / grid.h)
    receivers = np.column_stack([snapped(n_receivers), np.full(n_receivers, depth)])

    n_f = int(round((f_max - f_min) / f_step)) + 1
    freqs = f_min + f_step * np.arange(n_f)
    if n_bands * freqs_per_band > n_f:
        raise ValueError("not enough frequencies for the requested bands")
    per_band = (n_f - 1) / n_bands  # band k starts at its lower edge
    bands = tuple(
        tuple(int(round(k * per_band)) + i for i in range(freqs_per_band))
        for k in range(n_bands)
    )
    acq = Acquisition(sources=sources, receivers=receivers, frequencies=freqs, bands=bands)
    acq.validate_for_grid(grid)
    return acq


def build_paper_acquisition(grid: Grid2D) -> Acquisition:
    """The full-scale survey layout: 50 surface sources, 100 receivers at
    50 m depth, 17 frequencies 2.5..3.5 Hz in 0.0625 Hz steps, four bands
    of four frequencies each starting at the band's lower edge."""
    if grid.nx < FULL_SCALE_GRID["nx"] or grid.nz < FULL_SCALE_GRID["nz"]:
        raise ValueError(
            f"grid {grid.nx}x{grid.nz} smaller than the "
            f"{FULL_SCALE_GRID['nx']}x{FULL_SCALE_GRID['nz']} survey layout"
        )
    return build_acquisition(grid, FULL_SCALE_SOURCES, FULL_SCALE_RECEIVERS)


def forward_model(grid: Grid2D, m: np.ndarray, acq: Acquisition,
                  f_peak: float = DEFAULT_PEAK_HZ,
                  pml: PmlConfig = PmlConfig(),
                  freq_indices=None, threads: int = 1) -> DataCube:
    """Evaluate F(m): per frequency assemble, factorize once, solve all
    sources, sample at receivers and apply the Ricker weight.

    `freq_indices` restricts the computation to a subset of frequencies
    (other slices stay zero).  Deterministic for fixed inputs regardless
    of thread count.
    """
    acq.validate_for_grid(grid)
    values = np.zeros(acq.shape, dtype=complex)
    if freq_indices is None:
        freq_indices = range(acq.n_frequencies)
    src_nodes = acq.source_nodes(grid)
    rec_nodes = acq.receiver_nodes(grid)

    def solve_frequency(k):
        f = acq.frequencies[k]
        omega = 2.0 * np.pi * f
        try:
            system = factorize(assemble_system(grid, m, omega, pml))
            q = np.stack([system.point_source(node) for node in src_nodes])
            fields = solve_multi_rhs(system, q)
            rec_idx = system.pad_indices(rec_nodes)
            w = ricker_weight(f, f_peak)
            return k, w * np.stack([fld.values[rec_idx] for fld in fields])
        except Exception as exc:
            exc.args = (f"frequency index {k} (f={f:.4g} Hz): {exc}",) + exc.args[1:]
            raise

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for k, block in pool.map(solve_frequency, freq_indices):
                values[k] = block
    else:
        for k in freq_indices:
            k, block = solve_frequency(k)
            values[k] = block
    return DataCube(acquisition=acq, values=values)


def add_noise(d: DataCube, snr_db: float, seed: int) -> DataCube:
    """Add i.i.d. complex Gaussian noise rescaled post-draw so that
    20*log10(||d|| / ||n||) equals `snr_db` exactly.  snr_db = inf returns
    an unchanged copy."""
    if np.isinf(snr_db) and snr_db > 0:
        return d.copy()
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite or +inf")
    d_norm = d.norm()
    if d_norm == 0:
        raise NoiseScaleError("cannot scale noise to a zero data cube")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(d.values.shape) + 1j * rng.standard_normal(d.values.shape)
    noise *= (d_norm * 10.0 ** (-snr_db / 20.0)) / np.linalg.norm(noise)
    return DataCube(acquisition=d.acquisition, values=d.values + noise)
