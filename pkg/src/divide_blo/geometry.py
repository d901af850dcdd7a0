"""Euclidean projections onto the unit simplex and onto X x simplex."""

from __future__ import annotations

import itertools

import numpy as np

from .problem import BoxSet, project_box

ORACLE_MAX_DIM = 6


def project_simplex(v) -> np.ndarray:
    """Project v onto {p >= 0, sum(p) = 1} by sorting and thresholding.

    Sort descending, take the largest j with u_j - (cumsum_j - 1)/j > 0,
    then clip v - tau at zero.  Ties sort stably by original index.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("project_simplex expects a non-empty 1-d vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("project_simplex got non-finite entries")
    k = v.size
    u = -np.sort(-v, kind="stable")
    css = np.cumsum(u) - 1.0
    j = np.arange(1, k + 1)
    rho = np.nonzero(u - css / j > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(v - tau, 0.0)


def is_simplex_point(p, atol_neg: float = 1e-12, atol_sum: float = 1e-10) -> bool:
    p = np.asarray(p, dtype=float)
    return bool(p.ndim == 1 and p.size >= 1 and np.all(p >= -atol_neg) and abs(p.sum() - 1.0) <= atol_sum)


def project_product(x_domain: BoxSet, v_x, v_p) -> tuple[np.ndarray, np.ndarray]:
    """Projection onto X x simplex splits into the two blocks."""
    return project_box(x_domain, v_x), project_simplex(v_p)


def simplex_oracle_qp(v) -> np.ndarray:
    """Reference projection by enumerating every support set (k <= 6).

    On a support S the minimizer of ||p - v||^2 with sum(p_S) = 1 and
    p outside S zero is p_S = v_S + (1 - sum(v_S)) / |S|.  Keep the
    nonnegative candidates and return the nearest one.
    """
    v = np.asarray(v, dtype=float)
    k = v.size
    if v.ndim != 1 or k == 0:
        raise ValueError("simplex_oracle_qp expects a non-empty 1-d vector")
    if k > ORACLE_MAX_DIM:
        raise ValueError(f"support enumeration limited to k <= {ORACLE_MAX_DIM}, got {k}")
    best, best_dist = None, np.inf
    for size in range(1, k + 1):
        for support in itertools.combinations(range(k), size):
            idx = list(support)
            p = np.zeros(k)
            p[idx] = v[idx] + (1.0 - v[idx].sum()) / size
            if np.any(p[idx] < 0):
                continue
            dist = float(np.sum((p - v) ** 2))
            if dist < best_dist:
                best, best_dist = p, dist
    return best
