"""Bilevel problem instances: objectives, box domains and smoothness constants.

Objective callables broadcast over leading batch axes: ``x`` has shape
``(..., n)``, ``y`` has shape ``(..., m)`` and the leading shapes must be
broadcast-compatible.  ``eval`` returns the broadcast leading shape,
``grad_x``/``grad_y`` append a trailing axis of size n/m.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

CONSTANT_FLOOR = 1e-12
SAFETY_FACTOR = 1.1


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BoxSet:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(_frozen(self.lower))
        hi = np.atleast_1d(_frozen(self.upper))
        if lo.ndim != 1 or lo.shape != hi.shape:
            raise ValueError(f"box bounds must be 1-d of equal length, got {lo.shape} and {hi.shape}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("box requires lower <= upper in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, v, atol: float = 0.0) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.all(v >= self.lower - atol) and np.all(v <= self.upper + atol))

    def corners(self) -> np.ndarray:
        return np.array(list(itertools.product(*zip(self.lower, self.upper))))

    def radius(self) -> float:
        """Largest Euclidean norm over the box (attained at a corner)."""
        return float(np.max(np.linalg.norm(self.corners(), axis=1)))

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def grid(self, points_per_dim: int | Sequence[int]) -> np.ndarray:
        """Tensor grid including both endpoints, shape (N, dim)."""
        counts = np.broadcast_to(np.asarray(points_per_dim, dtype=int), (self.dim,))
        axes = [
            np.array([lo]) if lo == hi else np.linspace(lo, hi, int(c))
            for lo, hi, c in zip(self.lower, self.upper, counts)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def uniform(self, rng: np.random.Generator, size=None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        return self.lower + (self.upper - self.lower) * rng.random(shape)


def project_box(b: BoxSet, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1:] != (b.dim,):
        raise ValueError(f"dimension mismatch: box has dim {b.dim}, vector has shape {v.shape}")
    return np.clip(v, b.lower, b.upper)


@dataclass(frozen=True, eq=False)
class SmoothFunction:
    eval: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_x: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_y: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, x, y):
        return self.eval(x, y)


@dataclass(frozen=True)
class SmoothnessConstants:
    L_f: float
    L_g: float
    Lbar_f: float
    Lbar_g: float
    D: float

    def __post_init__(self):
        for name in ("L_f", "L_g", "Lbar_f", "Lbar_g", "D"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and strictly positive, got {value}")


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    upper: SmoothFunction
    lower: SmoothFunction
    x_domain: BoxSet
    y_domain: BoxSet
    constants: SmoothnessConstants | None = None
    name: str = "custom"

    @property
    def n(self) -> int:
        return self.x_domain.dim

    @property
    def m(self) -> int:
        return self.y_domain.dim

    def with_constants(self, constants: SmoothnessConstants) -> "ProblemSpec":
        return ProblemSpec(self.upper, self.lower, self.x_domain, self.y_domain, constants, self.name)


# ---------------------------------------------------------------------------
# quadratic-plus-trig family


@dataclass(frozen=True)
class TrigTerm:
    amplitude: float
    weights: tuple  # over the stacked (x, y) vector
    phase: float = 0.0


def _stack(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lead = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
    return np.concatenate(
        [np.broadcast_to(x, lead + x.shape[-1:]), np.broadcast_to(y, lead + y.shape[-1:])], axis=-1
    )


def quadratic_trig(n: int, Q, c=None, const: float = 0.0, trig: Sequence[TrigTerm] = ()) -> SmoothFunction:
    """h(z) = 0.5 z'Qz + c'z + const + sum_j a_j sin(w_j'z + phi_j), z = (x, y)."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    d = Q.shape[0]
    if Q.shape != (d, d):
        raise ValueError("Q must be square")
    Q = 0.5 * (Q + Q.T)
    c = np.zeros(d) if c is None else np.asarray(c, dtype=float)
    if c.shape != (d,):
        raise ValueError(f"linear term must have length {d}")
    amps = np.array([t.amplitude for t in trig], dtype=float)
    W = np.array([t.weights for t in trig], dtype=float).reshape(len(trig), d)
    phases = np.array([t.phase for t in trig], dtype=float)

    def value(x, y):
        z = _stack(x, y)
        out = 0.5 * np.einsum("...i,ij,...j->...", z, Q, z) + z @ c + const
        if len(amps):
            out = out + np.sin(z @ W.T + phases) @ amps
        return out

    def grad(x, y):
        z = _stack(x, y)
        out = z @ Q + c
        if len(amps):
            out = out + (np.cos(z @ W.T + phases) * amps) @ W
        return out

    return SmoothFunction(
        eval=value,
        grad_x=lambda x, y: grad(x, y)[..., :n],
        grad_y=lambda x, y: grad(x, y)[..., n:],
    )


# ---------------------------------------------------------------------------
# constants


def _full_grad(fn: SmoothFunction, x, y) -> np.ndarray:
    return np.concatenate([fn.grad_x(x, y), fn.grad_y(x, y)], axis=-1)


def _hessian_norms(fn: SmoothFunction, x, y, n: int, h: float = 1e-5) -> np.ndarray:
    """Spectral norms of central-difference Hessians (of the analytic gradient)."""
    d = x.shape[-1] + y.shape[-1]
    H = np.empty(x.shape[:-1] + (d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        gp = _full_grad(fn, x + e[:n], y + e[n:])
        gm = _full_grad(fn, x - e[:n], y - e[n:])
        H[..., :, j] = (gp - gm) / (2 * h)
    H = 0.5 * (H + np.swapaxes(H, -1, -2))
    return np.max(np.abs(np.linalg.eigvalsh(H)), axis=-1)


def derive_constants_numerically(
    p: ProblemSpec, grid_per_dim: int, chunk: int = 200_000
) -> SmoothnessConstants:
    """Grid suprema of gradient and Hessian norms over X x Y, inflated by 1.1."""
    if grid_per_dim < 2:
        raise ValueError("grid_per_dim must be at least 2")
    n = p.n
    xs = p.x_domain.grid(grid_per_dim)
    ys = p.y_domain.grid(grid_per_dim)
    sup = dict(L_f=0.0, L_g=0.0, Lbar_f=0.0, Lbar_g=0.0)
    per_chunk = max(1, chunk // len(ys))
    for start in range(0, len(xs), per_chunk):
        X = xs[start:start + per_chunk, None, :]
        Y = ys[None, :, :]
        X, Y = np.broadcast_to(X, (X.shape[0], len(ys), n)), np.broadcast_to(Y, (X.shape[0], len(ys), p.m))
        for key, fn in (("f", p.upper), ("g", p.lower)):
            vals = [fn.eval(X, Y), _full_grad(fn, X, Y)]
            hess = _hessian_norms(fn, X, Y, n)
            if not all(np.all(np.isfinite(v)) for v in vals + [hess]):
                raise FloatingPointError(f"non-finite evaluation of {'upper' if key == 'f' else 'lower'} objective")
            sup[f"L_{key}"] = max(sup[f"L_{key}"], float(np.max(np.linalg.norm(vals[1], axis=-1))))
            sup[f"Lbar_{key}"] = max(sup[f"Lbar_{key}"], float(np.max(hess)))
    scaled = {k: max(SAFETY_FACTOR * v, CONSTANT_FLOOR) for k, v in sup.items()}
    return SmoothnessConstants(D=max(p.y_domain.radius(), CONSTANT_FLOOR), **scaled)


# ---------------------------------------------------------------------------
# registry


@functools.lru_cache(maxsize=None)
def make_synthetic_1d() -> ProblemSpec:
    """f = 3x^2 + 7xy + 5y^2 + x - y + 5 over x in [-10, 10];
    g = sin(10y) + 2y^2 over y in [-5, 5]."""
    upper = quadratic_trig(1, Q=[[6.0, 7.0], [7.0, 10.0]], c=[1.0, -1.0], const=5.0)
    lower = quadratic_trig(1, Q=[[0.0, 0.0], [0.0, 4.0]], trig=[TrigTerm(1.0, (0.0, 10.0))])
    p = ProblemSpec(upper, lower, BoxSet([-10.0], [10.0]), BoxSet([-5.0], [5.0]), name="synthetic-1d")
    return p.with_constants(derive_constants_numerically(p, 1001))


REGISTRY: dict[str, Callable[[], ProblemSpec]] = {
    "synthetic-1d": make_synthetic_1d,
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {sorted(REGISTRY)}") from None


@dataclass
class _QuadTrigDesc:
    Q: list
    c: list | None = None
    const: float = 0.0
    trig: list = field(default_factory=list)


def problem_from_dict(d: dict, grid_per_dim: int = 201) -> ProblemSpec:
    """Build a registry or quadratic-plus-trig problem from a config section.

    Custom problems take ``x_domain``/``y_domain`` as ``{"lower": [...], "upper": [...]}``
    and ``upper``/``lower`` as ``{"Q", "c", "const", "trig": [{"amplitude",
    "weights", "phase"}]}`` over the stacked vector (x, y).
    """
    d = dict(d)
    name = d.pop("name", "quadratic-trig")
    if name in REGISTRY:
        if d:
            raise ValueError(f"unknown keys for registry problem {name!r}: {sorted(d)}")
        return get_problem(name)
    if name != "quadratic-trig":
        raise KeyError(f"unknown problem {name!r}; known: {sorted(REGISTRY) + ['quadratic-trig']}")
    allowed = {"x_domain", "y_domain", "upper", "lower", "constants_grid"}
    extra = set(d) - allowed
    if extra:
        raise ValueError(f"unknown problem keys: {sorted(extra)}")
    X = BoxSet(**_strict(d["x_domain"], {"lower", "upper"}, "x_domain"))
    Y = BoxSet(**_strict(d["y_domain"], {"lower", "upper"}, "y_domain"))
    fns = []
    for key in ("upper", "lower"):
        desc = _QuadTrigDesc(**_strict(d[key], {"Q", "c", "const", "trig"}, key))
        if np.shape(desc.Q) != (X.dim + Y.dim,) * 2:
            raise ValueError(f"{key}.Q must be {X.dim + Y.dim}x{X.dim + Y.dim} over the stacked (x, y)")
        terms = [TrigTerm(**_strict(t, {"amplitude", "weights", "phase"}, f"{key}.trig")) for t in desc.trig]
        terms = [TrigTerm(t.amplitude, tuple(t.weights), t.phase) for t in terms]
        fns.append(quadratic_trig(X.dim, desc.Q, desc.c, desc.const, terms))
    p = ProblemSpec(fns[0], fns[1], X, Y, name="quadratic-trig")
    return p.with_constants(derive_constants_numerically(p, int(d.get("constants_grid", grid_per_dim))))


def _strict(d: dict, allowed: set, where: str) -> dict:
    if not isinstance(d, dict):
        raise ValueError(f"{where} must be an object")
    extra = set(d) - allowed
    if extra:
        raise ValueError(f"unknown keys in {where}: {sorted(extra)}")
    return d
