"""Finite coverings of the lower-level box: tensor grids and random samples."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .problem import BoxSet

PROBE_POINTS = 10_000


@dataclass(frozen=True, eq=False)
class Covering:
    points: np.ndarray  # (k, m)
    radius: float
    method: str  # "grid" | "random"
    seed: int | None = None
    spacing: tuple | None = None  # per-dimension grid spacing (grid only)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("covering needs a non-empty (k, m) point array")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def k(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return self.points.shape[1]

    def induced(self, p) -> np.ndarray:
        """Convex combination sum_i p_i y_i."""
        return np.asarray(p) @ self.points


def grid_covering(y_domain: BoxSet, points_per_dim) -> Covering:
    counts = np.broadcast_to(np.asarray(points_per_dim, dtype=int), (y_domain.dim,))
    if np.any(counts < 2):
        raise ValueError("grid coverings need at least 2 points per dimension")
    degenerate = y_domain.lower == y_domain.upper
    spacing = np.where(degenerate, 0.0, (y_domain.upper - y_domain.lower) / (counts - 1))
    radius = 0.5 * float(np.linalg.norm(spacing))
    return Covering(y_domain.grid(counts), radius, "grid", spacing=tuple(float(s) for s in spacing))


def empirical_radius(y_domain: BoxSet, points: np.ndarray, probes: int = PROBE_POINTS) -> float:
    """Largest nearest-point distance over a probe grid of about `probes` points."""
    per_dim = max(2, math.ceil(probes ** (1.0 / y_domain.dim)))
    dist, _ = cKDTree(points).query(y_domain.grid(per_dim))
    return float(np.max(dist))


def random_covering(y_domain: BoxSet, k: int, seed: int) -> Covering:
    if k < 1:
        raise ValueError("random covering needs k >= 1")
    rng = np.random.default_rng(seed)
    points = y_domain.uniform(rng, k)
    return Covering(points, empirical_radius(y_domain, points), "random", seed=seed)


def covering_size_bound(D: float, m: int, r: float) -> int:
    """ceil((2 D sqrt(m) / r)^m)."""
    if r <= 0:
        raise ValueError("target radius must be positive")
    value = (2.0 * D * math.sqrt(m) / r) ** m
    # absorb float noise such as (100*sqrt(2))**2 = 20000.000000000004
    return math.ceil(value * (1.0 - 1e-12))


def covering_from_dict(y_domain: BoxSet, d: dict) -> Covering:
    d = dict(d)
    method = d.pop("method", "grid")
    if method == "grid":
        allowed = {"points_per_dim"}
    elif method == "random":
        allowed = {"k", "seed"}
    else:
        raise ValueError(f"unknown covering method {method!r}")
    extra = set(d) - allowed
    if extra:
        raise ValueError(f"unknown covering keys: {sorted(extra)}")
    if method == "grid":
        return grid_covering(y_domain, d["points_per_dim"])
    return random_covering(y_domain, int(d["k"]), int(d.get("seed", 0)))
