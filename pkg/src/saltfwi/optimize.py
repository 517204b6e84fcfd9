"""Smooth optimizers: L-BFGS with strong-Wolfe line search, a projected
quasi-Newton variant for box constraints, and a derivative-sign bisection
for scalar problems.

Objectives are callbacks returning (value, gradient).  All drivers are
single-threaded; parallelism belongs inside the callback.
"""

import csv
from dataclasses import dataclass, field, replace

import numpy as np


@dataclass
class OptimizeConfig:
    max_iters: int = 100
    memory: int = 10
    c1: float = 1e-4          # sufficient decrease
    c2: float = 0.9           # curvature
    gtol: float = 1e-10
    max_line_search: int = 25
    step0: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.memory < 0:
            raise ValueError("memory must be >= 0")


@dataclass
class History:
    """Per accepted iteration: objective, gradient norm, step length and an
    optional extra column (e.g. the transition width of an outer schedule)."""

    rows: list = field(default_factory=list)
    status: str = "running"
    extra_name: str = ""

    def record(self, iteration, value, gnorm, step, extra=None):
        self.rows.append((iteration, value, gnorm, step, extra))

    @property
    def values(self):
        return [r[1] for r in self.rows]

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            header = ["iteration", "objective", "gradient_norm", "step_length"]
            header.append(self.extra_name or "extra")
            w.writerow(header)
            for row in self.rows:
                w.writerow(["" if v is None else v for v in row])


def _check_finite(f, g):
    return np.isfinite(f) and np.all(np.isfinite(g))


def _two_loop(g, s_list, y_list):
    """L-BFGS two-loop recursion; returns the descent direction -H*g."""
    q = g.copy()
    alphas = []
    for s, y in zip(reversed(s_list), reversed(y_list)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y), a in zip(zip(s_list, y_list), reversed(alphas)):
        rho = 1.0 / np.dot(y, s)
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def _cubic_step(a_lo, f_lo, d_lo, a_hi, f_hi):
    """Minimizer of the cubic through (a_lo, f_lo, d_lo) and (a_hi, f_hi);
    falls back to bisection when ill-conditioned."""
    da = a_hi - a_lo
    if da == 0:
        return a_lo
    # quadratic interpolation using f_lo, d_lo, f_hi
    denom = 2.0 * (f_hi - f_lo - d_lo * da)
    if denom == 0 or not np.isfinite(denom):
        return 0.5 * (a_lo + a_hi)
    a = a_lo - d_lo * da * da / denom
    lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
    span = hi - lo
    if not np.isfinite(a) or a < lo + 0.1 * span or a > hi - 0.1 * span:
        return 0.5 * (a_lo + a_hi)
    return a


def _wolfe_line_search(fun, x, f0, g0, d, cfg):
    """Strong-Wolfe search along d from x (bracket + zoom).

    Returns (step, x_new, f_new, g_new, n_evals) or None on failure.
    """
    d0 = np.dot(g0, d)
    if d0 >= 0:
        return None
    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = cfg.step0
    evals = 0

    def phi(alpha):
        xn = x + alpha * d
        fn, gn = fun(xn)
        return xn, fn, gn

    def zoom(a_lo, f_lo, d_lo, a_hi, f_hi):
        nonlocal evals
        for _ in range(cfg.max_line_search):
            a_j = _cubic_step(a_lo, f_lo, d_lo, a_hi, f_hi)
            xj, fj, gj = phi(a_j)
            evals += 1
            dj = np.dot(gj, d)
            if not _check_finite(fj, gj) or fj > f0 + cfg.c1 * a_j * d0 or fj >= f_lo:
                a_hi, f_hi = a_j, fj
            else:
                if abs(dj) <= -cfg.c2 * d0:
                    return a_j, xj, fj, gj
                if dj * (a_hi - a_lo) >= 0:
                    a_hi, f_hi = a_lo, f_lo
                a_lo, f_lo, d_lo = a_j, fj, dj
            if abs(a_hi - a_lo) < 1e-16:
                break
        return None

    for _ in range(cfg.max_line_search):
        xa, fa, ga = phi(a)
        evals += 1
        if not _check_finite(fa, ga):
            a = 0.5 * (a_prev + a)
            continue
        da = np.dot(ga, d)
        if fa > f0 + cfg.c1 * a * d0 or (evals > 1 and fa >= f_prev):
            out = zoom(a_prev, f_prev, d_prev, a, fa)
            break
        if abs(da) <= -cfg.c2 * d0:
            out = (a, xa, fa, ga)
            break
        if da >= 0:
            out = zoom(a, fa, da, a_prev, f_prev)
            break
        a_prev, f_prev, d_prev = a, fa, da
        a = min(2.0 * a, 1e10)
    else:
        out = None
    if out is None:
        return None
    step, xn, fn, gn = out
    return step, xn, fn, gn, evals


def lbfgs_minimize(fun, x0, cfg: OptimizeConfig = None, callback=None,
                   history_extra=None):
    """Minimize fun(x) -> (value, gradient) with limited-memory BFGS.

    `callback(k, x)` runs at the start of each outer iteration; a truthy
    return means the objective itself changed (e.g. a schedule update), so
    the current value/gradient are re-evaluated before stepping.
    `history_extra()` is sampled per iteration into the history's extra
    column.  With memory 0 the direction degrades to steepest descent.
    """
    cfg = cfg or OptimizeConfig()
    x = np.asarray(x0, dtype=float).copy()
    hist = History()
    f, g = fun(x)
    if not _check_finite(f, g):
        hist.status = "aborted: non-finite at x0"
        return x, hist
    s_list, y_list = [], []

    for k in range(cfg.max_iters):
        if callback is not None and callback(k, x):
            f, g = fun(x)
            if not _check_finite(f, g):
                hist.status = "aborted: non-finite after callback"
                return x, hist
        gnorm = np.linalg.norm(g)
        if k == 0:
            hist.record(0, f, gnorm, 0.0, history_extra() if history_extra else None)
        if gnorm <= cfg.gtol:
            hist.status = "converged: gradient tolerance"
            return x, hist

        d = _two_loop(g, s_list, y_list) if s_list else -g
        if np.dot(d, g) >= 0:
            s_list, y_list = [], []
            d = -g

        # the raw gradient direction at the very first iteration carries no
        # scale information; start the search at a unit-length move
        if k == 0 and not s_list:
            search_cfg = replace(cfg, step0=1.0 / max(gnorm, 1e-30))
        else:
            search_cfg = cfg
        res = _wolfe_line_search(fun, x, f, g, d, search_cfg)
        if res is None:
            hist.status = "stopped: line search failure"
            return x, hist
        step, x_new, f_new, g_new, _ = res

        if cfg.memory > 0:
            s = x_new - x
            y = g_new - g
            if np.dot(s, y) > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
                s_list.append(s)
                y_list.append(y)
                if len(s_list) > cfg.memory:
                    s_list.pop(0)
                    y_list.pop(0)
        x, f, g = x_new, f_new, g_new
        hist.record(k + 1, f, np.linalg.norm(g), step,
                    history_extra() if history_extra else None)

    hist.status = "stopped: iteration cap"
    return x, hist


def projected_qn_minimize(fun, x0, bounds, cfg: OptimizeConfig = None, callback=None):
    """Box-constrained quasi-Newton: L-BFGS direction, backtracking along the
    projected arc with an Armijo condition.  Every iterate is feasible."""
    cfg = cfg or OptimizeConfig()
    lo, hi = bounds
    lo = np.broadcast_to(np.asarray(lo, dtype=float), np.shape(x0)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), np.shape(x0)).copy()
    if np.any(lo > hi):
        raise ValueError("need lo <= hi elementwise")
    x = np.asarray(x0, dtype=float).copy()
    if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
        raise ValueError("x0 must be feasible")
    x = np.clip(x, lo, hi)
    project = lambda v: np.clip(v, lo, hi)

    hist = History()
    f, g = fun(x)
    if not _check_finite(f, g):
        hist.status = "aborted: non-finite at x0"
        return x, hist
    s_list, y_list = [], []

    for k in range(cfg.max_iters):
        if callback is not None and callback(k, x):
            f, g = fun(x)
        pg = x - project(x - g)
        pgnorm = np.linalg.norm(pg)
        if k == 0:
            hist.record(0, f, pgnorm, 0.0)
        if pgnorm <= max(cfg.gtol, 1e-15):
            hist.status = "converged: projected gradient tolerance"
            return x, hist

        d = _two_loop(g, s_list, y_list) if s_list else -g

        # backtracking on the projected arc x(a) = P(x + a*d); the first
        # search has no curvature scale, so start from a box-sized move
        # (backtracking only ever shrinks)
        if k == 0 and not s_list:
            box = np.linalg.norm(hi - lo)
            a = box / max(np.linalg.norm(d), 1e-30) if np.isfinite(box) and box > 0 \
                else cfg.step0
        else:
            a = cfg.step0
        accepted = None
        for _ in range(cfg.max_line_search):
            x_try = project(x + a * d)
            dx = x_try - x
            slope = np.dot(g, dx)
            if slope >= 0 or not np.any(dx):
                # projected direction not a descent direction: fall back
                if np.array_equal(d, -g):
                    break
                s_list, y_list = [], []
                d = -g
                a = cfg.step0
                continue
            f_try, g_try = fun(x_try)
            if _check_finite(f_try, g_try) and f_try <= f + cfg.c1 * slope:
                accepted = (a, x_try, f_try, g_try)
                break
            a *= 0.5
        if accepted is None:
            hist.status = "stopped: line search failure"
            return x, hist
        a, x_new, f_new, g_new = accepted

        s = x_new - x
        y = g_new - g
        if np.dot(s, y) > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            s_list.append(s)
            y_list.append(y)
            if len(s_list) > max(cfg.memory, 1):
                s_list.pop(0)
                y_list.pop(0)
        x, f, g = x_new, f_new, g_new
        hist.record(k + 1, f, np.linalg.norm(x - project(x - g)), a)

    hist.status = "stopped: iteration cap"
    return x, hist


def bisection_scalar(fun, interval, tol=1e-4, max_iters=200, deriv_step_rel=1e-3):
    """Locate the minimizer of a smooth unimodal scalar function by bisecting
    on the sign of a symmetric finite-difference derivative.

    Returns (b_star, flag) where flag is True when no interior sign change
    exists and the better endpoint is returned instead.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if lo > hi:
        raise ValueError("need lo <= hi")
    if lo == hi:
        return lo, False
    delta = deriv_step_rel * (hi - lo)

    def deriv(t):
        a = max(lo, t - delta)
        b = min(hi, t + delta)
        return (fun(b) - fun(a)) / (b - a)

    d_lo = deriv(lo)
    d_hi = deriv(hi)
    if not (d_lo < 0 < d_hi):
        # no interior minimum bracketed: pick the better endpoint
        better = lo if fun(lo) <= fun(hi) else hi
        return better, True
    a, b = lo, hi
    for _ in range(max_iters):
        if b - a <= tol:
            break
        mid = 0.5 * (a + b)
        dm = deriv(mid)
        if dm > 0:
            b = mid
        elif dm < 0:
            a = mid
        else:
            return mid, False
    return 0.5 * (a + b), False
