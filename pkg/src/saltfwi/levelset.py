"""Parametric level-set machinery: smoothed step functions with adaptive
transition width, model composition m(alpha), the chain-rule gradient back
to weight space, initialization and standalone shape fitting.

The salt region is {x | phi(x) >= 0} with phi = K @ alpha expanded in RBFs.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

from .errors import DegenerateLevelSetError, DerivativeUndefinedError, EmptyLevelSetInitError
from .optimize import OptimizeConfig, lbfgs_minimize
from .rbf import KernelMatrix, RbfNodeGrid

HEAVISIDE_KINDS = ("compact-sine", "sigmoid")


@dataclass(frozen=True)
class HeavisideConfig:
    """Smoothed step: kind, transition half-width epsilon and the adaptive
    width fraction kappa used when epsilon is recomputed from the field."""

    kind: str = "compact-sine"
    epsilon: float = 0.1
    kappa: float = 0.1

    def __post_init__(self):
        if self.kind not in HEAVISIDE_KINDS:
            raise ValueError(f"unknown Heaviside kind {self.kind!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must be in (0, 1]")

    def with_epsilon(self, epsilon: float) -> "HeavisideConfig":
        return replace(self, epsilon=epsilon)


def heaviside(cfg: HeavisideConfig, s):
    """Smoothed step value in [0, 1]; the sharp step (1 + sign(s))/2 when
    epsilon = 0."""
    s = np.asarray(s, dtype=float)
    if cfg.epsilon == 0:
        out = 0.5 * (1.0 + np.sign(s))
    elif cfg.kind == "sigmoid":
        out = expit(s / cfg.epsilon)
    else:
        # evaluate on |t| and mirror, so h(s) + h(-s) = 1 holds exactly
        t = np.abs(s) / cfg.epsilon
        core = np.where(t >= 1.0, 1.0,
                        np.minimum(0.5 * (1.0 + t + np.sin(np.pi * t) / np.pi), 1.0))
        out = np.where(s < 0, 1.0 - core, core)
    return out if out.ndim else float(out)


def heaviside_derivative(cfg: HeavisideConfig, s):
    """d/ds of the smoothed step; exactly zero outside |s| <= epsilon for the
    compact-sine form."""
    if cfg.epsilon == 0:
        raise DerivativeUndefinedError("derivative undefined for the sharp step (epsilon = 0)")
    s = np.asarray(s, dtype=float)
    if cfg.kind == "sigmoid":
        h = expit(s / cfg.epsilon)
        out = h * (1.0 - h) / cfg.epsilon
    else:
        t = s / cfg.epsilon
        core = (1.0 + np.cos(np.pi * t)) / (2.0 * cfg.epsilon)
        out = np.where(np.abs(t) <= 1.0, core, 0.0)
    return out if out.ndim else float(out)


def adaptive_epsilon(phi, kappa: float) -> float:
    """Transition half-width tied to the current field range:
    epsilon = kappa/2 * (max(phi) - min(phi))."""
    phi = np.asarray(phi, dtype=float)
    if phi.size == 0:
        raise ValueError("empty level-set field")
    span = float(phi.max() - phi.min())
    if span == 0.0:
        raise DegenerateLevelSetError("constant level-set field; adaptive epsilon undefined")
    return 0.5 * kappa * span


@dataclass
class LevelSet:
    """RBF weight vector together with its kernel and step configuration."""

    alpha: np.ndarray
    kernel: KernelMatrix
    heaviside: HeavisideConfig

    def phi(self) -> np.ndarray:
        return self.kernel.dot(self.alpha)

    def update_epsilon(self) -> float:
        """Recompute epsilon from the current field via the adaptive rule."""
        eps = adaptive_epsilon(self.phi(), self.heaviside.kappa)
        self.heaviside = self.heaviside.with_epsilon(eps)
        return eps

    def indicator(self) -> np.ndarray:
        """Sharp salt mask h(phi) >= 1/2 (phi = 0 ties count as salt)."""
        return self.phi() >= 0.0


def compose_model(m0: np.ndarray, m1: float, ls: LevelSet):
    """Blend background and salt values:
    m = m0*(1 - h(K alpha)) + m1*h(K alpha).  Returns (m, h_field)."""
    h = heaviside(ls.heaviside, ls.phi())
    if h.shape != m0.shape:
        raise ValueError("level-set kernel does not match the background field shape")
    return m0 * (1.0 - h) + m1 * h, h


def levelset_gradient(ls: LevelSet, m0: np.ndarray, m1: float,
                      grad_m: np.ndarray) -> np.ndarray:
    """Chain rule from a model-space gradient to weight space:
    K.T @ [(m1 - m0) * h'(K alpha) * grad_m]."""
    hprime = heaviside_derivative(ls.heaviside, ls.phi())
    return ls.kernel.tdot((m1 - m0) * hprime * grad_m)


def init_levelset(nodes: RbfNodeGrid, center, radius: float,
                  inside: float = 1.0, outside: float = -1.0) -> np.ndarray:
    """Seed weights: `inside` for nodes within `radius` of `center`,
    `outside` elsewhere."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    pos = nodes.positions()
    dist = np.hypot(pos[:, 0] - center[0], pos[:, 1] - center[1])
    mask = dist <= radius
    if not mask.any():
        raise EmptyLevelSetInitError(
            f"no RBF node within {radius} m of {tuple(center)}"
        )
    return np.where(mask, inside, outside).astype(float)


def fit_shape(mask: np.ndarray, kernel: KernelMatrix, cfg: HeavisideConfig,
              adaptive: bool = True, alpha0: np.ndarray = None,
              opt: OptimizeConfig = None):
    """Fit RBF weights to a binary mask by minimizing
    0.5*||h_eps(K alpha) - mask||^2 with L-BFGS.

    With `adaptive`, epsilon is recomputed from the current field at the
    start of every outer iteration (line searches hold it fixed).
    Returns (alpha, fitted_mask, history).
    """
    mask = np.asarray(mask)
    if not np.isin(mask, (0, 1)).all():
        raise ValueError("mask must be binary")
    target = mask.astype(float).ravel()
    if alpha0 is None:
        # seed each weight from the mask value at the node's nearest grid
        # point; mixed signs keep the adaptive transition band active
        grid = kernel.grid
        pos = kernel.nodes.positions()
        ii = np.clip(np.round((pos[:, 0] - grid.origin[0]) / grid.h).astype(int), 0, grid.nx - 1)
        jj = np.clip(np.round((pos[:, 1] - grid.origin[1]) / grid.h).astype(int), 0, grid.nz - 1)
        alpha0 = np.where(mask.reshape(grid.shape)[ii, jj] > 0, 1.0, -1.0)
    ls = LevelSet(alpha=np.asarray(alpha0, dtype=float), kernel=kernel, heaviside=cfg)

    def objective(alpha):
        phi = kernel.dot(alpha).ravel()
        h = heaviside(ls.heaviside, phi)
        r = h - target
        value = 0.5 * float(r @ r)
        grad = kernel.tdot(heaviside_derivative(ls.heaviside, phi) * r)
        return value, grad

    def on_iteration(k, alpha):
        if not adaptive:
            return False
        ls.alpha = alpha
        ls.update_epsilon()
        return True

    opt = opt or OptimizeConfig(max_iters=200)
    alpha, hist = lbfgs_minimize(objective, alpha0, opt, callback=on_iteration,
                                 history_extra=lambda: ls.heaviside.epsilon)
    hist.extra_name = "epsilon"
    ls.alpha = alpha
    fitted = ls.indicator()
    return alpha, fitted, hist


def intersection_over_union(a: np.ndarray, b: np.ndarray) -> float:
    """Pixel-count IoU of two binary masks (1.0 when both are empty)."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)
