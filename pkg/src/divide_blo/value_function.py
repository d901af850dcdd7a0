"""Regularized discretized value function and brute-force lower-level oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covering import Covering
from .geometry import project_simplex
from .problem import ProblemSpec, SmoothnessConstants

ORACLE_MAX_M = 3


@dataclass(frozen=True, eq=False)
class ValueFunctionEval:
    x: np.ndarray
    g_values: np.ndarray
    p_star: np.ndarray
    v_tilde: float
    grad: np.ndarray
    lam: float
    g_grad_x: np.ndarray  # (k, n), kept for the penalty gradient

    @property
    def v_hat(self) -> float:
        """Plain discrete minimum min_i g(x, y_i)."""
        return float(np.min(self.g_values))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.p_star > 0)


def eval_value_function(p: ProblemSpec, c: Covering, lam: float, x) -> ValueFunctionEval:
    """Evaluate min over the simplex of sum_i p_i g(x, y_i) + lam/2 ||p||^2.

    The minimizer is the simplex projection of -g(x, y_i)/lam, and the
    gradient in x is sum_i p*_i grad_x g(x, y_i).
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise ValueError(f"x must have shape ({p.n},), got {x.shape}")
    if not p.x_domain.contains(x):
        raise ValueError(f"x = {x} lies outside the upper-level domain")
    gv = p.lower.eval(x, c.points)
    if not np.all(np.isfinite(gv)):
        raise FloatingPointError("non-finite lower-level values on the covering")
    p_star = project_simplex(-gv / lam)
    gx = p.lower.grad_x(x, c.points)
    v_tilde = float(p_star @ gv + 0.5 * lam * (p_star @ p_star))
    return ValueFunctionEval(x, gv, p_star, v_tilde, p_star @ gx, lam, gx)


def approximation_error_bound(constants: SmoothnessConstants, m: int, k: int, lam: float) -> float:
    """2 L_g D sqrt(m) / k^(1/m) + lam/2."""
    if k < 1 or not lam > 0:
        raise ValueError("need k >= 1 and lam > 0")
    return 2.0 * constants.L_g * constants.D * math.sqrt(m) / k ** (1.0 / m) + 0.5 * lam


def radius_error_bound(L_g: float, r: float, lam: float) -> float:
    """Same sandwich stated with the achieved covering radius: L_g r + lam/2."""
    return L_g * r + 0.5 * lam


# ---------------------------------------------------------------------------
# oracles


def _polish_lower(p: ProblemSpec, X: np.ndarray, Y: np.ndarray, steps: int) -> np.ndarray:
    step = 1.0 / p.constants.Lbar_g
    for _ in range(steps):
        Y = np.clip(Y - step * p.lower.grad_y(X, Y), p.y_domain.lower, p.y_domain.upper)
    return Y


def _check_oracle_dims(p: ProblemSpec, grid_per_dim: int):
    if p.m > ORACLE_MAX_M:
        raise ValueError(f"grid oracle supports m <= {ORACLE_MAX_M}, got m = {p.m}")
    if grid_per_dim < 101:
        raise ValueError("grid oracle needs at least 101 points per dimension")


def oracle_true_values(
    p: ProblemSpec, xs, grid_per_dim: int = 1001, polish_steps: int = 20, chunk: int = 4_000_000
) -> tuple[np.ndarray, np.ndarray]:
    """min_y g(x, y) for each row of xs, with the minimizing y.

    Grid minimum over Y followed by projected-gradient polish from the best
    grid point; the smaller of the two values is returned.
    """
    _check_oracle_dims(p, grid_per_dim)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = p.y_domain.grid(grid_per_dim)
    values = np.empty(len(xs))
    argmins = np.empty((len(xs), p.m))
    rows = max(1, chunk // len(ys))
    for s in range(0, len(xs), rows):
        X = xs[s:s + rows]
        G = p.lower.eval(X[:, None, :], ys[None, :, :])
        best = np.argmin(G, axis=1)
        y0 = ys[best]
        g0 = G[np.arange(len(X)), best]
        y1 = _polish_lower(p, X, y0, polish_steps)
        g1 = p.lower.eval(X, y1)
        better = g1 < g0
        values[s:s + rows] = np.where(better, g1, g0)
        argmins[s:s + rows] = np.where(better[:, None], y1, y0)
    return values, argmins


def oracle_true_value(p: ProblemSpec, x, grid_per_dim: int = 1001) -> float:
    """Brute-force V(x) = min over Y of g(x, y)."""
    return float(oracle_true_values(p, np.asarray(x, dtype=float)[None, :], grid_per_dim)[0][0])
