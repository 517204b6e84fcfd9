"""Inversion drivers: classic multiscale FWI over the full model field,
level-set inversion of the salt shape (single band and multiscale with a
shrinking transition-width schedule), joint salt+background estimation,
and the data/model error metrics used to compare them."""

from dataclasses import dataclass, field

import numpy as np

from .adjoint import misfit_and_gradient, misfit_value
from .errors import UndefinedMetricError
from .grid import Grid2D
from .helmholtz import PmlConfig
from .levelset import HeavisideConfig, adaptive_epsilon, heaviside, heaviside_derivative
from .model import DEFAULT_V_BOUNDS, BackgroundParam, linear_background
from .optimize import OptimizeConfig, bisection_scalar, projected_qn_minimize, lbfgs_minimize
from .rbf import KernelMatrix
from .survey import DEFAULT_PEAK_HZ, Acquisition, DataCube

KAPPA_START = 0.1
KAPPA_FACTOR = 0.8
DEFAULT_B_INTERVAL = (0.5, 1.2)

# Reference metric values at the full 201x61 survey scale for the bundled
# A-D geometries (documentation constants for cross-scale comparison, not
# regression targets; absolute misfits depend on the modeling code).
FULL_SCALE_REFERENCE = {
    "noise_free": {
        # model: (erf_fwi, erf_pls, rre_fwi, rre_pls)
        "a": (0.0281, 5.8197e-4, 0.8213, 0.0707),
        "b": (0.0241, 7.2637e-5, 0.8543, 0.0548),
        "c": (0.0261, 4.7127e-4, 0.9102, 0.0732),
        "d": (0.0339, 9.0299e-6, 0.8088, 0.0434),
    },
    "snr10db": {
        # model: (erf_fwi, erf_pls, erf_achievable, rre_fwi, rre_pls)
        "a": (0.5425, 0.5254, 0.5246, 0.8432, 0.2437),
        "b": (0.5499, 0.5347, 0.5340, 0.8548, 0.1508),
        "c": (0.6090, 0.5958, 0.5951, 0.9199, 0.1817),
        "d": (0.5530, 0.5325, 0.5321, 0.8239, 0.1382),
    },
    "recovered_b": {"a": 0.8351, "b": 0.8352, "c": 0.8345, "d": 0.8333},
}


@dataclass
class InversionConfig:
    iters_per_band: int = 150
    memory: int = 10
    gtol: float = 1e-12
    v_bounds: tuple = DEFAULT_V_BOUNDS
    f_peak: float = DEFAULT_PEAK_HZ
    pml: PmlConfig = field(default_factory=PmlConfig)
    heaviside_kind: str = "compact-sine"
    kappa0: float = KAPPA_START
    kappa_factor: float = KAPPA_FACTOR
    b_interval: tuple = DEFAULT_B_INTERVAL
    bisection_tol: float = 1e-3
    v_top: float = 1500.0
    threads: int = 1

    def optimizer(self) -> OptimizeConfig:
        return OptimizeConfig(max_iters=self.iters_per_band, memory=self.memory,
                              gtol=self.gtol)


@dataclass
class InversionRun:
    kind: str
    config: dict
    band_histories: list
    final_model: np.ndarray
    final_alpha: np.ndarray = None
    kappa_per_band: list = None
    b_per_band: list = None
    b_flags: list = None
    metrics: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def _config_dict(cfg: InversionConfig, **extra) -> dict:
    d = dict(
        iters_per_band=cfg.iters_per_band, memory=cfg.memory, gtol=cfg.gtol,
        v_bounds=list(cfg.v_bounds), f_peak=cfg.f_peak,
        pml=dict(width=cfg.pml.width, reflection=cfg.pml.reflection),
        heaviside_kind=cfg.heaviside_kind, kappa0=cfg.kappa0,
        kappa_factor=cfg.kappa_factor, b_interval=list(cfg.b_interval),
        bisection_tol=cfg.bisection_tol, v_top=cfg.v_top,
    )
    d.update(extra)
    return d


def classic_fwi(grid: Grid2D, m_init: np.ndarray, acq: Acquisition, d_obs: DataCube,
                bands=None, cfg: InversionConfig = None) -> InversionRun:
    """Multiscale continuation over the full node-wise model with velocity
    box bounds: minimize the band-restricted misfit per band, warm-starting
    each band from the previous result."""
    cfg = cfg or InversionConfig()
    bands = list(bands if bands is not None else acq.bands)
    lo_v, hi_v = cfg.v_bounds
    bounds = (1.0 / hi_v**2, 1.0 / lo_v**2)

    m = np.asarray(m_init, dtype=float).reshape(grid.shape).copy()
    histories = []
    notes = []
    for bi, band in enumerate(bands):
        def objective(m_vec):
            res = misfit_and_gradient(grid, m_vec.reshape(grid.shape), acq, d_obs,
                                      freq_indices=band, f_peak=cfg.f_peak,
                                      pml=cfg.pml, threads=cfg.threads)
            return res.value, res.gradient.ravel()

        m_vec, hist = projected_qn_minimize(objective, m.ravel(), bounds, cfg.optimizer())
        m = m_vec.reshape(grid.shape)
        histories.append(hist)
        if hist.status.startswith("aborted"):
            notes.append(f"band {bi}: {hist.status}; continuing from last good iterate")

    return InversionRun(kind="fwi", config=_config_dict(cfg, bands=[list(b) for b in bands]),
                        band_histories=histories, final_model=m, notes=notes)


def pls_fwi_basic(grid: Grid2D, alpha0: np.ndarray, m0: np.ndarray, m1: float,
                  kernel: KernelMatrix, kappa: float, acq: Acquisition, d_obs: DataCube,
                  band, cfg: InversionConfig = None, iteration_hook=None):
    """Level-set inversion on one frequency band: each outer iteration
    recomputes the transition width from the current field range, then takes
    a quasi-Newton step on the band misfit pulled back to weight space.
    Returns (alpha, history); the history's extra column holds epsilon.
    `iteration_hook(k, alpha, epsilon)` is called per outer iteration."""
    cfg = cfg or InversionConfig()
    m0 = np.asarray(m0, dtype=float).reshape(grid.shape)
    hs = HeavisideConfig(kind=cfg.heaviside_kind,
                         epsilon=adaptive_epsilon(kernel.dot(alpha0), kappa),
                         kappa=kappa)
    state = {"hs": hs}

    def objective(alpha):
        phi = kernel.dot(alpha)
        h = heaviside(state["hs"], phi)
        m_field = m0 * (1.0 - h) + m1 * h
        res = misfit_and_gradient(grid, m_field, acq, d_obs, freq_indices=band,
                                  f_peak=cfg.f_peak, pml=cfg.pml, threads=cfg.threads)
        g_alpha = kernel.tdot((m1 - m0) * heaviside_derivative(state["hs"], phi)
                              * res.gradient)
        return res.value, g_alpha

    def on_iteration(k, alpha):
        eps = adaptive_epsilon(kernel.dot(alpha), kappa)
        state["hs"] = state["hs"].with_epsilon(eps)
        if iteration_hook is not None:
            iteration_hook(k, alpha, eps)
        return True

    alpha, hist = lbfgs_minimize(objective, alpha0, cfg.optimizer(),
                                 callback=on_iteration,
                                 history_extra=lambda: state["hs"].epsilon)
    hist.extra_name = "epsilon"
    return alpha, hist


def _sharp_model(grid: Grid2D, m0: np.ndarray, m1: float, kernel: KernelMatrix,
                 alpha: np.ndarray) -> np.ndarray:
    """Compose the model with the sharp step (epsilon = 0)."""
    h = heaviside(HeavisideConfig(epsilon=0.0), kernel.dot(alpha))
    return np.asarray(m0, dtype=float).reshape(grid.shape) * (1.0 - h) + m1 * h


def pls_fwi_multiscale(grid: Grid2D, alpha0: np.ndarray, m0: np.ndarray, m1: float,
                       kernel: KernelMatrix, acq: Acquisition, d_obs: DataCube,
                       bands=None, cfg: InversionConfig = None) -> InversionRun:
    """Band continuation of the level-set inversion: kappa starts at 0.1 and
    shrinks by 0.8 after every band; the final model uses the sharp step."""
    cfg = cfg or InversionConfig()
    bands = list(bands if bands is not None else acq.bands)
    alpha = np.asarray(alpha0, dtype=float).copy()
    kappa = cfg.kappa0
    histories, kappas = [], []
    for band in bands:
        kappas.append(kappa)
        alpha, hist = pls_fwi_basic(grid, alpha, m0, m1, kernel, kappa, acq, d_obs,
                                    band, cfg)
        histories.append(hist)
        kappa *= cfg.kappa_factor

    final = _sharp_model(grid, m0, m1, kernel, alpha)
    return InversionRun(kind="pls", config=_config_dict(cfg, bands=[list(b) for b in bands]),
                        band_histories=histories, final_model=final, final_alpha=alpha,
                        kappa_per_band=kappas)


def joint_invert(grid: Grid2D, alpha0: np.ndarray, b_interval, m1: float,
                 kernel: KernelMatrix, acq: Acquisition, d_obs: DataCube,
                 bands=None, cfg: InversionConfig = None) -> InversionRun:
    """Per band: (1) bisection over the background slope b with the current
    weights frozen and the sharp step, (2) rebuild the background from the
    recovered slope, (3) run the level-set inversion on the band.  The kappa
    schedule matches the multiscale driver."""
    cfg = cfg or InversionConfig()
    bands = list(bands if bands is not None else acq.bands)
    alpha = np.asarray(alpha0, dtype=float).copy()
    kappa = cfg.kappa0
    histories, kappas, b_values, b_flags = [], [], [], []
    notes = []
    m0 = None
    for bi, band in enumerate(bands):
        def b_misfit(b):
            bg = linear_background(grid, BackgroundParam(cfg.v_top, b))
            m_field = _sharp_model(grid, bg, m1, kernel, alpha)
            return misfit_value(grid, m_field, acq, d_obs, freq_indices=band,
                                f_peak=cfg.f_peak, pml=cfg.pml, threads=cfg.threads)

        b_star, flag = bisection_scalar(b_misfit, b_interval, tol=cfg.bisection_tol)
        b_values.append(b_star)
        b_flags.append(flag)
        if flag:
            notes.append(f"band {bi}: no interior minimum for b; proceeding with b={b_star:.4f}")
        m0 = linear_background(grid, BackgroundParam(cfg.v_top, b_star))

        kappas.append(kappa)
        alpha, hist = pls_fwi_basic(grid, alpha, m0, m1, kernel, kappa, acq, d_obs,
                                    band, cfg)
        histories.append(hist)
        kappa *= cfg.kappa_factor

    final = _sharp_model(grid, m0, m1, kernel, alpha)
    return InversionRun(kind="pls-joint",
                        config=_config_dict(cfg, bands=[list(b) for b in bands]),
                        band_histories=histories, final_model=final, final_alpha=alpha,
                        kappa_per_band=kappas, b_per_band=b_values, b_flags=b_flags,
                        notes=notes)


# ---------------------------------------------------------------------------
# metrics

def _data_norm(grid, m_field, acq, d_obs, f_peak, pml) -> float:
    return float(np.sqrt(2.0 * misfit_value(grid, m_field, acq, d_obs,
                                            f_peak=f_peak, pml=pml)))


def erf(grid: Grid2D, m_recon: np.ndarray, m_start: np.ndarray, acq: Acquisition,
        d_obs: DataCube, f_peak: float = DEFAULT_PEAK_HZ,
        pml: PmlConfig = PmlConfig()) -> float:
    """Error reduction factor ||F(m_recon) - d|| / ||F(m_start) - d||."""
    denom = _data_norm(grid, m_start, acq, d_obs, f_peak, pml)
    if denom == 0:
        raise UndefinedMetricError("starting model already fits the data exactly")
    return _data_norm(grid, m_recon, acq, d_obs, f_peak, pml) / denom


def achievable_erf(grid: Grid2D, m_true: np.ndarray, m_start: np.ndarray,
                   acq: Acquisition, d_obs: DataCube, f_peak: float = DEFAULT_PEAK_HZ,
                   pml: PmlConfig = PmlConfig()) -> float:
    """Smallest reachable error reduction factor: the true model in the
    numerator (equals the noise-to-initial-residual ratio on noisy data)."""
    return erf(grid, m_true, m_start, acq, d_obs, f_peak=f_peak, pml=pml)


def rre(m_recon: np.ndarray, m_true: np.ndarray, m_start: np.ndarray) -> float:
    """Relative reconstruction error in squared-slowness units:
    ||m_recon - m_true|| / ||m_start - m_true||."""
    denom = np.linalg.norm(np.asarray(m_start) - np.asarray(m_true))
    if denom == 0:
        raise UndefinedMetricError("starting model equals the true model")
    return float(np.linalg.norm(np.asarray(m_recon) - np.asarray(m_true)) / denom)
