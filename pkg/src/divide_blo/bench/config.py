"""JSON run/sweep configuration.

Top-level sections: ``problem``, ``covering``, ``solver`` and/or ``baseline``,
and ``sweep``.  Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..baselines import BaselineConfig
from ..covering import Covering, covering_from_dict, grid_covering, random_covering
from ..problem import ProblemSpec, problem_from_dict
from ..solver import SolverConfig

ALGORITHMS = ("divide-blo", "ttsa", "vpbgd")
TOP_LEVEL = {"problem", "covering", "solver", "baseline", "sweep"}
DEFAULT_ORACLE_GRID = 1001

# summary/cell parameter columns, in order
CELL_PARAMS = ("gamma", "alpha", "eta1", "eta2", "lambda", "k")
GRID_KEYS = {
    "divide-blo": {"gamma", "alpha", "lambda", "k"},
    "ttsa": {"eta1", "eta2"},
    "vpbgd": {"gamma", "eta1", "eta2"},
}
SOLVER_DEFAULTS = {"gamma": 20.0, "lambda": 0.01, "alpha": 0.1, "eps_stop": 1e-6, "max_iters": 10_000}
BASELINE_DEFAULTS = {
    "ttsa": {"eta1": 0.1, "eta2": 0.1, "max_iters": 2_000},
    "vpbgd": {"gamma": 80.0, "eta1": 0.05, "eta2": 0.005, "inner_iters": 10, "max_iters": 1_000},
}


class ConfigError(ValueError):
    pass


def _check_keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


@dataclass(frozen=True)
class SweepSpec:
    problem: str
    algorithms: tuple
    grids: dict
    n_seeds: int = 1
    base_seed: int = 0
    out_dir: str | None = None
    oracle_grid: int = DEFAULT_ORACLE_GRID
    record_wallclock: bool = False

    def __post_init__(self):
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be >= 1")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}")
            for key, values in self.grids.get(alg, {}).items():
                if not isinstance(values, list) or not values:
                    raise ConfigError(f"grid {alg}.{key} must be a non-empty list")


@dataclass(frozen=True)
class BenchConfig:
    raw: dict  # validated JSON document; rebuilt in worker processes
    sweep: SweepSpec | None = None
    solver_section: dict = field(default_factory=dict)
    baseline_section: dict = field(default_factory=dict)

    @property
    def problem(self) -> ProblemSpec:
        return _problem_cached(json.dumps(self.raw["problem"], sort_keys=True))

    @property
    def oracle_grid(self) -> int:
        return self.sweep.oracle_grid if self.sweep else DEFAULT_ORACLE_GRID

    @property
    def record_wallclock(self) -> bool:
        return bool(self.sweep and self.sweep.record_wallclock)

    def covering(self, k: int | None = None) -> Covering:
        return build_covering(self.problem, self.raw.get("covering", {"method": "grid", "points_per_dim": 201}), k)

    def single_algorithm(self) -> str:
        if self.raw.get("solver") is not None:
            return "divide-blo"
        if self.raw.get("baseline") is not None:
            return self.baseline_section["algorithm"]
        raise ConfigError("config needs a solver or baseline section to run a single solve")

    def cells(self, algorithm: str) -> list[dict]:
        """Cartesian product of the sweep grid for one algorithm, on top of
        the section defaults."""
        base = self.base_params(algorithm)
        grid = (self.sweep.grids.get(algorithm, {}) if self.sweep else {})
        keys = sorted(grid)
        cells = []
        for combo in itertools.product(*(grid[k] for k in keys)):
            cell = dict(base)
            cell.update(zip(keys, combo))
            cells.append(cell)
        return cells

    def base_params(self, algorithm: str) -> dict:
        if algorithm == "divide-blo":
            params = dict(SOLVER_DEFAULTS)
            params.update({k: v for k, v in self.solver_section.items() if k != "seed"})
            params.setdefault("k", None)
            return params
        params = dict(BASELINE_DEFAULTS[algorithm])
        if self.baseline_section.get("algorithm") == algorithm:
            params.update({k: v for k, v in self.baseline_section.items() if k not in ("algorithm", "seed")})
        return params


@functools.lru_cache(maxsize=16)
def _problem_cached(key: str) -> ProblemSpec:
    return problem_from_dict(json.loads(key))


def build_covering(problem: ProblemSpec, section: dict, k: int | None = None) -> Covering:
    """Covering from its config section; a sweep value k overrides the size."""
    if k is None:
        return covering_from_dict(problem.y_domain, section)
    if section.get("method", "grid") == "random":
        return random_covering(problem.y_domain, int(k), int(section.get("seed", 0)))
    per_dim = round(k ** (1.0 / problem.m))
    if per_dim ** problem.m != k:
        raise ConfigError(f"k={k} is not a perfect {problem.m}-th power for a grid covering")
    return grid_covering(problem.y_domain, per_dim)


def solver_config(cell: dict, seed: int) -> SolverConfig:
    alpha = cell["alpha"]
    return SolverConfig(
        gamma=float(cell["gamma"]), lam=float(cell["lambda"]),
        alpha=alpha if alpha == "auto" else float(alpha),
        eps_stop=float(cell["eps_stop"]), max_iters=int(cell["max_iters"]), seed=seed,
    )


def baseline_config(algorithm: str, cell: dict, seed: int) -> BaselineConfig:
    return BaselineConfig(
        algorithm=algorithm, eta1=float(cell["eta1"]), eta2=float(cell["eta2"]),
        gamma=float(cell.get("gamma", 0.0)), inner_iters=int(cell.get("inner_iters", 10)),
        max_iters=int(cell["max_iters"]), seed=seed,
    )


def parse_config(doc: dict, out_dir: str | None = None) -> BenchConfig:
    _check_keys(doc, TOP_LEVEL, "config")
    if "problem" not in doc:
        raise ConfigError("config needs a problem section")
    try:
        _problem_cached(json.dumps(doc["problem"], sort_keys=True))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid problem section: {exc}") from exc

    cov = doc.get("covering")
    if cov is not None:
        _check_keys(cov, {"method", "points_per_dim", "k", "seed"}, "covering")

    solver = doc.get("solver") or {}
    _check_keys(solver, set(SOLVER_DEFAULTS) | {"seed"}, "solver")
    baseline = doc.get("baseline") or {}
    _check_keys(baseline, {"algorithm", "gamma", "eta1", "eta2", "inner_iters", "max_iters", "seed"}, "baseline")
    if baseline and baseline.get("algorithm") not in ("ttsa", "vpbgd"):
        raise ConfigError("baseline.algorithm must be 'ttsa' or 'vpbgd'")

    sweep = None
    if "sweep" in doc:
        s = doc["sweep"]
        _check_keys(s, {"algorithms", "grids", "n_seeds", "base_seed", "oracle_grid", "record_wallclock"}, "sweep")
        grids = s.get("grids", {})
        _check_keys(grids, ALGORITHMS, "sweep.grids")
        for alg, grid in grids.items():
            _check_keys(grid, GRID_KEYS[alg], f"sweep.grids.{alg}")
        names = {f.name for f in fields(SweepSpec)}
        kwargs = {k: v for k, v in s.items() if k in names and k not in ("algorithms", "grids")}
        try:
            sweep = SweepSpec(
                problem=doc["problem"].get("name", "quadratic-trig"),
                algorithms=tuple(s.get("algorithms", ["divide-blo"])),
                grids=grids, out_dir=out_dir, **kwargs,
            )
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    cfg = BenchConfig(raw=doc, sweep=sweep, solver_section=solver, baseline_section=baseline)
    # fail early on bad numeric values
    try:
        if solver:
            solver_config(cfg.base_params("divide-blo"), 0)
        if baseline:
            baseline_config(baseline["algorithm"], cfg.base_params(baseline["algorithm"]), 0)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid solver/baseline section: {exc}") from exc
    return cfg


def load_config(path, out_dir: str | None = None) -> BenchConfig:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return parse_config(doc, out_dir)
