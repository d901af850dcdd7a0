"""Brute-force certification of a terminal iterate: lower-level violation,
total gap against the relaxed bilevel optimum f*, and the lower bound C_f."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..covering import Covering
from ..problem import ProblemSpec
from ..solver import IterationTrace
from ..value_function import _check_oracle_dims, _polish_lower, oracle_true_values

LEVEL_SET_RELAXATION = 1e-6


@dataclass(frozen=True)
class OracleReport:
    v_of_x: float
    violation: float
    f_star: float
    total_gap: float
    c_f: float


def _lower_candidates(p: ProblemSpec, xs: np.ndarray, ys: np.ndarray, polish_steps: int):
    """Near-optimal lower-level points for each x in xs.

    Returns (owner index, y, g) for every candidate: grid points whose value
    is within the grid discretization slack of the grid minimum, polished
    by projected gradient steps.
    """
    h = np.where(p.y_domain.upper > p.y_domain.lower,
                 (p.y_domain.upper - p.y_domain.lower) / (round(len(ys) ** (1 / p.m)) - 1), 0.0)
    slack = 0.5 * p.constants.Lbar_g * float(np.sum((0.5 * h) ** 2)) + LEVEL_SET_RELAXATION
    G = p.lower.eval(xs[:, None, :], ys[None, :, :])
    gmin = G.min(axis=1)
    owner, idx = np.nonzero(G <= gmin[:, None] + slack)
    X = xs[owner]
    Y = _polish_lower(p, X, ys[idx], polish_steps)
    gy = p.lower.eval(X, Y)
    keep = gy > G[owner, idx]  # polish never makes things worse
    Y[keep] = ys[idx][keep]
    gy = np.where(keep, G[owner, idx], gy)
    return owner, Y, gy


def _hyper_values(p: ProblemSpec, xs: np.ndarray, ys: np.ndarray, polish_steps: int, chunk: int):
    """phi(x) = min f(x, y) over the relaxed lower-level solution set, per x."""
    phi = np.full(len(xs), np.inf)
    arg = np.zeros((len(xs), p.m))
    rows = max(1, chunk // len(ys))
    for s in range(0, len(xs), rows):
        X = xs[s:s + rows]
        owner, Y, gy = _lower_candidates(p, X, ys, polish_steps)
        V = np.full(len(X), np.inf)
        np.minimum.at(V, owner, gy)
        ok = gy <= V[owner] + LEVEL_SET_RELAXATION
        fv = np.where(ok, p.upper.eval(X[owner], Y), np.inf)
        order = np.lexsort((fv, owner))
        first = order[np.r_[True, owner[order][1:] != owner[order][:-1]]]
        phi[s + owner[first]] = fv[first]
        arg[s + owner[first]] = Y[first]
    return phi, arg


def bilevel_optimum(
    p: ProblemSpec, grid_per_dim: int = 1001, polish_steps: int = 100, chunk: int = 4_000_000
) -> tuple[float, np.ndarray, np.ndarray]:
    """Nested grid search for f* = min over x of min f(x, y) subject to
    g(x, y) <= V(x) + 1e-6, then a bounded local refinement in x."""
    _check_oracle_dims(p, grid_per_dim)
    xs = p.x_domain.grid(grid_per_dim)
    ys = p.y_domain.grid(grid_per_dim)
    phi, arg = _hyper_values(p, xs, ys, polish_steps, chunk)
    i = int(np.argmin(phi))
    best = (float(phi[i]), xs[i], arg[i])

    spacing = (p.x_domain.upper - p.x_domain.lower) / (grid_per_dim - 1)
    lo = np.maximum(xs[i] - spacing, p.x_domain.lower)
    hi = np.minimum(xs[i] + spacing, p.x_domain.upper)
    if np.any(hi > lo):
        def objective(x):
            return float(_hyper_values(p, np.asarray(x, dtype=float)[None, :], ys, polish_steps, chunk)[0][0])

        res = minimize(objective, xs[i], method="Powell", bounds=list(zip(lo, hi)),
                       options={"xtol": 1e-10, "ftol": 1e-14})
        if res.fun < best[0]:
            xr = np.asarray(res.x, dtype=float)
            _, yr = _hyper_values(p, xr[None, :], ys, polish_steps, chunk)
            best = (float(res.fun), xr, yr[0])
    return best


def upper_lower_bound(p: ProblemSpec, c: Covering, grid_per_dim: int = 201, polish_steps: int = 500) -> float:
    """Grid estimate of C_f = inf f(x, sum_i p_i y_i) over X x simplex.

    The induced points fill the convex hull of the covering; its bounding box
    is searched, which can only lower the estimate.
    """
    ylo, yhi = c.points.min(axis=0), c.points.max(axis=0)
    xs = p.x_domain.grid(grid_per_dim)
    ys_box = np.linspace(0, 1, grid_per_dim)
    axes = [np.array([a]) if a == b else a + (b - a) * ys_box for a, b in zip(ylo, yhi)]
    ys = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=-1)
    F = p.upper.eval(xs[:, None, :], ys[None, :, :])
    i, j = np.unravel_index(np.argmin(F), F.shape)
    x, y = xs[i], ys[j]
    step = 1.0 / p.constants.Lbar_f
    for _ in range(polish_steps):
        x = np.clip(x - step * p.upper.grad_x(x, y), p.x_domain.lower, p.x_domain.upper)
        y = np.clip(y - step * p.upper.grad_y(x, y), ylo, yhi)
    return float(min(F[i, j], p.upper.eval(x, y)))


def compute_metrics(
    p: ProblemSpec, trace: IterationTrace, grid_per_dim: int = 1001,
    f_star: float | None = None, c_f: float = float("nan"),
) -> OracleReport:
    _check_oracle_dims(p, grid_per_dim)
    if len(trace) == 0:
        raise ValueError("trace has no terminal state")
    if f_star is None:
        f_star = bilevel_optimum(p, grid_per_dim)[0]
    x, y = trace.final_x, trace.final_y
    V = float(oracle_true_values(p, x[None, :], grid_per_dim)[0][0])
    violation = float(p.lower.eval(x, y)) - V
    total = float(p.upper.eval(x, y)) - f_star + violation
    return OracleReport(V, violation, f_star, total, c_f)


def gap_series(p: ProblemSpec, trace: IterationTrace, iterations, f_star: float, grid_per_dim: int = 1001):
    """Total gap at the requested iterations; runs that stopped early hold
    their terminal value."""
    rows = np.minimum(np.asarray(iterations, dtype=int), len(trace) - 1)
    xs, ys = trace.x[rows], trace.y[rows]
    V, _ = oracle_true_values(p, xs, grid_per_dim)
    return p.upper.eval(xs, ys) - f_star + p.lower.eval(xs, ys) - V
