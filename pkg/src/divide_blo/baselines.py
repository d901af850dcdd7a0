"""Comparison methods: two-timescale implicit gradient (TTSA) and
value-function penalty with an inner loop (V-PBGD).

Both are deterministic full-gradient versions over (x, y) in X x Y.  Their
traces store f(x, y) in the ``f_gamma`` column and leave the feasibility
gap undefined (nan).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import ProblemSpec, project_box
from .solver import IterationTrace, SolverError, _Recorder

CURVATURE_GUARD = 1e-6
FD_STEP = 1e-5


@dataclass(frozen=True)
class BaselineConfig:
    algorithm: str  # "ttsa" | "vpbgd"
    eta1: float
    eta2: float
    gamma: float = 0.0
    inner_iters: int = 10
    max_iters: int = 5_000
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ("ttsa", "vpbgd"):
            raise ValueError(f"unknown baseline {self.algorithm!r}")
        if not (self.eta1 > 0 and self.eta2 > 0):
            raise ValueError("step scales must be positive")
        if self.inner_iters < 1 or self.max_iters < 1:
            raise ValueError("inner_iters and max_iters must be >= 1")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")


def initial_xy(prob: ProblemSpec, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    return prob.x_domain.uniform(rng), prob.y_domain.uniform(rng)


def ttsa_steps(cfg: BaselineConfig, t: int) -> tuple[float, float]:
    """(lower step eta1 / t^(3/5), upper step eta2 / t^(2/5)) for t >= 1."""
    return cfg.eta1 / t ** 0.6, cfg.eta2 / t ** 0.4


def _second_derivatives(prob: ProblemSpec, x, y, h: float = FD_STEP):
    """Central differences of grad_y g in y and in x: (H_yy (m, m), H_yx (m, n))."""
    n, m = x.size, y.size
    Hyy = np.empty((m, m))
    Hyx = np.empty((m, n))
    for j in range(m):
        e = np.zeros(m)
        e[j] = h
        Hyy[:, j] = (prob.lower.grad_y(x, y + e) - prob.lower.grad_y(x, y - e)) / (2 * h)
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        Hyx[:, j] = (prob.lower.grad_y(x + e, y) - prob.lower.grad_y(x - e, y)) / (2 * h)
    return 0.5 * (Hyy + Hyy.T), Hyx


def hypergradient(prob: ProblemSpec, x, y) -> np.ndarray:
    """grad_x f - H_xy H_yy^{-1} grad_y f, with the correction dropped when
    H_yy is numerically singular or the cross term vanishes."""
    h = prob.upper.grad_x(x, y)
    Hyy, Hyx = _second_derivatives(prob, x, y)
    if not np.any(Hyx):
        return h
    if np.min(np.abs(np.linalg.eigvalsh(Hyy))) <= CURVATURE_GUARD:
        return h
    return h - Hyx.T @ np.linalg.solve(Hyy, prob.upper.grad_y(x, y))


def run_ttsa(prob: ProblemSpec, cfg: BaselineConfig, x0=None, y0=None) -> IterationTrace:
    x, y = _start(prob, cfg, x0, y0)
    rec = _Recorder()
    for t in range(1, cfg.max_iters + 1):
        a_low, a_up = ttsa_steps(cfg, t)
        y_next = project_box(prob.y_domain, y - a_low * prob.lower.grad_y(x, y))
        x_next = project_box(prob.x_domain, x - a_up * hypergradient(prob, x, y_next))
        _record(rec, prob, x, y, x_next, y_next, a_up, t - 1)
        x, y = x_next, y_next
    _record(rec, prob, x, y, x, y, 1.0, cfg.max_iters)
    return rec.build("ttsa", "max_iters", cfg.eta2)


def inner_descent(prob: ProblemSpec, x, theta, step: float, iters: int) -> np.ndarray:
    """Projected gradient steps on g(x, .) over Y."""
    for _ in range(iters):
        theta = project_box(prob.y_domain, theta - step * prob.lower.grad_y(x, theta))
    return theta


def run_vpbgd(prob: ProblemSpec, cfg: BaselineConfig, x0=None, y0=None) -> IterationTrace:
    """Outer step eta1 on f + gamma (g(x, y) - g(x, theta)); theta follows
    inner_iters projected steps of size eta2 on g(x, .), warm-started."""
    x, y = _start(prob, cfg, x0, y0)
    theta = y.copy()
    rec = _Recorder()
    for t in range(cfg.max_iters):
        theta = inner_descent(prob, x, theta, cfg.eta2, cfg.inner_iters)
        gx = prob.upper.grad_x(x, y) + cfg.gamma * (prob.lower.grad_x(x, y) - prob.lower.grad_x(x, theta))
        gy = prob.upper.grad_y(x, y) + cfg.gamma * prob.lower.grad_y(x, y)
        x_next = project_box(prob.x_domain, x - cfg.eta1 * gx)
        y_next = project_box(prob.y_domain, y - cfg.eta1 * gy)
        _record(rec, prob, x, y, x_next, y_next, cfg.eta1, t)
        x, y = x_next, y_next
    _record(rec, prob, x, y, x, y, 1.0, cfg.max_iters)
    return rec.build("vpbgd", "max_iters", cfg.eta1)


def run_baseline(prob: ProblemSpec, cfg: BaselineConfig, x0=None, y0=None) -> IterationTrace:
    runner = run_ttsa if cfg.algorithm == "ttsa" else run_vpbgd
    return runner(prob, cfg, x0, y0)


def _start(prob, cfg, x0, y0):
    if x0 is None or y0 is None:
        sx, sy = initial_xy(prob, cfg.seed)
        x0 = sx if x0 is None else x0
        y0 = sy if y0 is None else y0
    x = np.asarray(x0, dtype=float)
    y = np.asarray(y0, dtype=float)
    if not (prob.x_domain.contains(x) and prob.y_domain.contains(y)):
        raise ValueError("initial point must lie in X x Y")
    return x, y


def _record(rec, prob, x, y, x_next, y_next, step, t):
    f_val = float(prob.upper.eval(x, y))
    move = math.sqrt(np.sum((x - x_next) ** 2) + np.sum((y - y_next) ** 2)) / step
    if not (np.isfinite(f_val) and np.all(np.isfinite(x_next)) and np.all(np.isfinite(y_next))):
        raise SolverError(f"non-finite iterate at iteration {t}")
    rec.add(f_val, move, np.nan, x, y)
