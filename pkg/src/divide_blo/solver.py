"""DIVIDE-BLO: projected gradient descent on the discretized penalty problem.

The iterate is z = (x, p) with x in the box X and p on the simplex over the
covering points.  The objective is

    F(x, p) = f(x, sum_i p_i y_i) + gamma * (sum_i p_i g(x, y_i) - V~(x)).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .covering import Covering
from .geometry import is_simplex_point, project_simplex
from .problem import ProblemSpec, SmoothnessConstants, project_box
from .value_function import ValueFunctionEval, eval_value_function

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Raised when an iteration produces non-finite values."""


@dataclass(frozen=True)
class SolverConfig:
    gamma: float
    lam: float
    alpha: Union[float, str] = "auto"
    eps_stop: float = 1e-6
    max_iters: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError("gamma must be nonnegative")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.alpha != "auto" and not (isinstance(self.alpha, (int, float)) and self.alpha > 0):
            raise ValueError("alpha must be positive or 'auto'")
        if not self.eps_stop > 0 or self.max_iters < 1:
            raise ValueError("eps_stop must be positive and max_iters >= 1")

    def step_size(self, constants: SmoothnessConstants, k: int) -> float:
        if self.alpha == "auto":
            return 1.0 / lipschitz_constant(constants, k, self.gamma, self.lam)
        return float(self.alpha)


@dataclass(frozen=True, eq=False)
class SolverState:
    x: np.ndarray
    p: np.ndarray
    t: int
    f_gamma: float
    grad_map_norm: float
    feasibility_gap: float


@dataclass(eq=False)
class IterationTrace:
    algorithm: str
    t: np.ndarray
    f_gamma: np.ndarray
    grad_map_norm: np.ndarray
    feasibility_gap: np.ndarray  # nan where not defined (baselines)
    x: np.ndarray  # (T, n)
    y: np.ndarray  # (T, m): induced y for DIVIDE-BLO, raw y for baselines
    wallclock_ms: np.ndarray
    status: str
    alpha: float
    final_state: SolverState | None = None
    warnings: list = field(default_factory=list)
    weights: np.ndarray | None = None  # (T, k), only when requested

    def __len__(self):
        return len(self.t)

    @property
    def final_x(self) -> np.ndarray:
        return self.x[-1]

    @property
    def final_y(self) -> np.ndarray:
        return self.y[-1]

    @property
    def converged(self) -> bool:
        return self.status == "converged"


class _Recorder:
    def __init__(self):
        self.rows = []
        self.start = time.perf_counter()

    def add(self, f_val, gm, gap, x, y):
        elapsed = (time.perf_counter() - self.start) * 1e3
        self.rows.append((f_val, gm, gap, np.array(x, dtype=float), np.array(y, dtype=float), elapsed))

    def build(self, algorithm, status, alpha, **kw) -> IterationTrace:
        f_val, gm, gap, xs, ys, ms = zip(*self.rows)
        return IterationTrace(
            algorithm=algorithm,
            t=np.arange(len(self.rows)),
            f_gamma=np.array(f_val),
            grad_map_norm=np.array(gm),
            feasibility_gap=np.array(gap, dtype=float),
            x=np.array(xs),
            y=np.array(ys),
            wallclock_ms=np.array(ms),
            status=status,
            alpha=alpha,
            **kw,
        )


# ---------------------------------------------------------------------------


def lipschitz_constant(constants: SmoothnessConstants, k: int, gamma: float, lam: float) -> float:
    """Gradient-Lipschitz constant of the penalty objective over (x, p)."""
    c = constants
    head = c.Lbar_f * max(1.0, math.sqrt(k) * c.D ** 2)
    tail = math.sqrt((c.Lbar_g + c.L_g) ** 2 + k * c.L_g ** 2) + c.L_g ** 2 * k / lam + c.Lbar_g
    return head + gamma * tail


def _check_feasible(prob: ProblemSpec, c: Covering, x, pt):
    if not prob.x_domain.contains(x):
        raise ValueError("x lies outside the upper-level domain")
    if np.shape(pt) != (c.k,) or not is_simplex_point(pt):
        raise ValueError("p must be a point of the unit simplex over the covering")


def penalty_value(prob: ProblemSpec, c: Covering, gamma: float, x, pt, aux: ValueFunctionEval) -> float:
    y = c.induced(pt)
    return float(prob.upper.eval(x, y) + gamma * (pt @ aux.g_values - aux.v_tilde))


def penalty_gradient(
    prob: ProblemSpec, c: Covering, cfg: SolverConfig, x, pt
) -> tuple[np.ndarray, np.ndarray, ValueFunctionEval]:
    x = np.asarray(x, dtype=float)
    pt = np.asarray(pt, dtype=float)
    _check_feasible(prob, c, x, pt)
    aux = eval_value_function(prob, c, cfg.lam, x)
    y = c.induced(pt)
    grad_x = prob.upper.grad_x(x, y) + cfg.gamma * (pt @ aux.g_grad_x - aux.grad)
    grad_p = c.points @ prob.upper.grad_y(x, y) + cfg.gamma * aux.g_values
    return grad_x, grad_p, aux


def initial_point(prob: ProblemSpec, c: Covering, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """x0 uniform over X; p0 the simplex projection of standard normals."""
    rng = np.random.default_rng(seed)
    x0 = prob.x_domain.uniform(rng)
    p0 = project_simplex(rng.standard_normal(c.k))
    return x0, p0


def solve(
    prob: ProblemSpec, c: Covering, cfg: SolverConfig, x0=None, p0=None, record_weights: bool = False
) -> IterationTrace:
    """Run projected gradient steps until (1/alpha)||z_t - z_{t+1}|| <= eps_stop.

    Missing starting points are drawn from ``cfg.seed``.  The returned
    trace's final state is the last recorded iterate.
    """
    if x0 is None or p0 is None:
        sx, sp = initial_point(prob, c, cfg.seed)
        x0 = sx if x0 is None else x0
        p0 = sp if p0 is None else p0
    x = np.asarray(x0, dtype=float)
    pt = np.asarray(p0, dtype=float)
    _check_feasible(prob, c, x, pt)
    alpha = cfg.step_size(prob.constants, c.k)

    warnings = []
    limit = prob.constants.L_f * prob.constants.D / cfg.gamma if cfg.gamma > 0 else math.inf
    if cfg.lam > limit:
        warnings.append(f"lambda={cfg.lam} exceeds L_f*D/gamma={limit:.6g}; feasibility bound does not apply")
        log.warning(warnings[-1])

    rec = _Recorder()
    status = "max_iters"
    state = None
    weights = []
    for t in range(cfg.max_iters):
        gx, gp, aux = penalty_gradient(prob, c, cfg, x, pt)
        f_val = penalty_value(prob, c, cfg.gamma, x, pt, aux)
        gap = float(pt @ aux.g_values - aux.v_tilde)
        if not (np.isfinite(f_val) and np.all(np.isfinite(gx)) and np.all(np.isfinite(gp))):
            raise SolverError(f"non-finite objective or gradient at iteration {t} (x={x}, F={f_val})")
        x_next = project_box(prob.x_domain, x - alpha * gx)
        p_next = project_simplex(pt - alpha * gp)
        gm = math.sqrt(np.sum((x - x_next) ** 2) + np.sum((pt - p_next) ** 2)) / alpha
        rec.add(f_val, gm, gap, x, c.induced(pt))
        if record_weights:
            weights.append(pt.copy())
        state = SolverState(x.copy(), pt.copy(), t, f_val, gm, gap)
        if gm <= cfg.eps_stop:
            status = "converged"
            break
        x, pt = x_next, p_next
    return rec.build("divide-blo", status, alpha, final_state=state, warnings=warnings,
                     weights=np.array(weights) if record_weights else None)


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class BoundCheck:
    value: float
    bound: float
    passed: bool
    applicable: bool = True
    note: str = ""


def rate_certificate(trace: IterationTrace, cfg: SolverConfig, c_f: float, T: int | None = None) -> BoundCheck:
    """Average squared gradient-map norm over the first T rows against
    2 (F(z_first) - C_f + lam/2) / (alpha T)."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    T = len(trace) if T is None else T
    if not 1 <= T <= len(trace):
        raise ValueError(f"T must lie in [1, {len(trace)}]")
    lhs = float(np.mean(trace.grad_map_norm[:T] ** 2))
    rhs = 2.0 * (float(trace.f_gamma[0]) - c_f + 0.5 * cfg.lam) / (trace.alpha * T)
    return BoundCheck(lhs, rhs, lhs <= rhs, note=f"T={T}")


def kkt_feasibility_check(state: SolverState, constants: SmoothnessConstants, cfg: SolverConfig) -> BoundCheck:
    """Terminal feasibility gap against 5 L_f D / (2 gamma)."""
    if cfg.gamma == 0:
        return BoundCheck(state.feasibility_gap, math.inf, False, applicable=False, note="penalty off")
    bound = 5.0 * constants.L_f * constants.D / (2.0 * cfg.gamma)
    if cfg.lam > constants.L_f * constants.D / cfg.gamma:
        return BoundCheck(state.feasibility_gap, bound, False, applicable=False, note="lambda > L_f D / gamma")
    return BoundCheck(state.feasibility_gap, bound, state.feasibility_gap <= bound)


def is_monotone(trace: IterationTrace, rtol: float = 1e-12) -> bool:
    """F non-increasing across rows, up to rounding of relative size rtol."""
    f = trace.f_gamma
    slack = rtol * np.maximum(1.0, np.abs(f[:-1]))
    return bool(np.all(f[1:] <= f[:-1] + slack))


def stationarity_check(
    prob: ProblemSpec, c: Covering, cfg: SolverConfig, state: SolverState, alpha: float,
    n_samples: int = 200, seed: int = 0,
) -> BoundCheck:
    """Sample feasible z and compare <grad F(z*), z* - z> with its
    gradient-map bound ||G|| (alpha ||grad F|| + ||z - z+||)."""
    rng = np.random.default_rng(seed)
    gx, gp, _ = penalty_gradient(prob, c, cfg, state.x, state.p)
    x_plus = project_box(prob.x_domain, state.x - alpha * gx)
    p_plus = project_simplex(state.p - alpha * gp)
    g_norm = math.sqrt(gx @ gx + gp @ gp)
    gm = math.sqrt(np.sum((state.x - x_plus) ** 2) + np.sum((state.p - p_plus) ** 2)) / alpha
    worst, worst_bound = -np.inf, 0.0
    for _ in range(n_samples):
        xz = prob.x_domain.uniform(rng)
        pz = rng.dirichlet(np.ones(c.k))
        inner = gx @ (state.x - xz) + gp @ (state.p - pz)
        dist = math.sqrt(np.sum((xz - x_plus) ** 2) + np.sum((pz - p_plus) ** 2))
        bound = gm * (alpha * g_norm + dist)
        if inner - bound > worst - worst_bound:
            worst, worst_bound = inner, bound
    return BoundCheck(worst, worst_bound, worst <= worst_bound)
