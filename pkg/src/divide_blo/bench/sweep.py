"""Seeded runs and parameter sweeps with oracle metrics."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..baselines import run_baseline
from ..solver import IterationTrace, SolverError, solve
from .config import ALGORITHMS, CELL_PARAMS, BenchConfig, baseline_config, parse_config, solver_config
from .io import SUMMARY_COLUMNS, write_rows, write_trace
from .metrics import bilevel_optimum, compute_metrics, gap_series

log = logging.getLogger(__name__)

N_CHECKPOINTS = 40
SERIES_COLUMNS = ("algorithm",) + CELL_PARAMS + ("iteration", "mean_total_gap", "runs")
BEST_COLUMNS = ("algorithm",) + CELL_PARAMS + ("mean_total_gap", "runs")


@dataclass(frozen=True)
class Job:
    index: int
    algorithm: str
    cell: dict
    seed: int
    raw: dict
    f_star: float
    oracle_grid: int
    checkpoints: tuple
    trace_path: str | None
    record_wallclock: bool


def checkpoints(max_iters: int) -> tuple:
    pts = np.unique(np.r_[0, np.geomspace(1, max_iters, N_CHECKPOINTS).astype(int)])
    return tuple(int(v) for v in pts)


def cell_label(algorithm: str, cell: dict) -> str:
    parts = [f"{k}={cell[k]}" for k in CELL_PARAMS if cell.get(k) is not None and k in _shown(algorithm)]
    return "_".join([algorithm] + parts)


def _shown(algorithm: str) -> tuple:
    return {"divide-blo": ("gamma", "alpha", "lambda", "k"),
            "ttsa": ("eta1", "eta2"),
            "vpbgd": ("gamma", "eta1", "eta2")}[algorithm]


def cell_columns(algorithm: str, cell: dict, k: int) -> dict:
    shown = _shown(algorithm)
    row = {c: (cell.get(c) if c in shown else None) for c in CELL_PARAMS}
    if algorithm == "divide-blo":
        row["k"] = k
    return row


def execute(cfg: BenchConfig, algorithm: str, cell: dict, seed: int) -> tuple[IterationTrace, int]:
    """One run; returns the trace and the covering size (0 for baselines)."""
    problem = cfg.problem
    if algorithm == "divide-blo":
        cov = cfg.covering(cell.get("k"))
        return solve(problem, cov, solver_config(cell, seed)), cov.k
    return run_baseline(problem, baseline_config(algorithm, cell, seed)), 0


def run_job(job: Job) -> tuple[dict, np.ndarray | None]:
    cfg = parse_config(job.raw)
    k = None
    try:
        trace, k = execute(cfg, job.algorithm, job.cell, job.seed)
        report = compute_metrics(cfg.problem, trace, job.oracle_grid, f_star=job.f_star)
        if job.trace_path:
            write_trace(trace, job.trace_path, job.record_wallclock)
        series = gap_series(cfg.problem, trace, job.checkpoints, job.f_star, job.oracle_grid)
        row = dict(iters=int(trace.t[-1]), violation=report.violation, total_gap=report.total_gap,
                   status=trace.status)
    except (SolverError, ValueError, FloatingPointError) as exc:
        log.warning("run %s seed %d failed: %s", job.algorithm, job.seed, exc)
        series = None
        row = dict(iters=None, violation=None, total_gap=None, status=f"failed: {exc}".replace("\n", " "))
    if k is None and job.algorithm == "divide-blo":
        k = job.cell.get("k")
    row.update(cell_columns(job.algorithm, job.cell, k or 0), algorithm=job.algorithm, seed=job.seed)
    if job.algorithm != "divide-blo":
        row["k"] = None
    return row, series


def run_sweep(cfg: BenchConfig, out_dir, workers: int = 1) -> dict:
    """Run every (algorithm, cell, seed) and write summary.csv, traces/,
    gap_series.csv and best.csv under out_dir."""
    if cfg.sweep is None:
        raise ValueError("config has no sweep section")
    spec = cfg.sweep
    out = Path(out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    f_star = bilevel_optimum(cfg.problem, spec.oracle_grid)[0]

    jobs = []
    for algorithm in spec.algorithms:
        for cell in cfg.cells(algorithm):
            label = cell_label(algorithm, cell)
            for i in range(spec.n_seeds):
                seed = spec.base_seed + i
                jobs.append(Job(
                    index=len(jobs), algorithm=algorithm, cell=cell, seed=seed, raw=cfg.raw, f_star=f_star,
                    oracle_grid=spec.oracle_grid, checkpoints=checkpoints(int(cell["max_iters"])),
                    trace_path=str(out / "traces" / f"{label}__seed{seed}.csv"),
                    record_wallclock=spec.record_wallclock,
                ))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_job, jobs, chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        results = [run_job(job) for job in jobs]

    rows = [r for r, _ in results]
    write_rows(out / "summary.csv", SUMMARY_COLUMNS, rows)

    series_rows, best_rows = [], []
    for algorithm in spec.algorithms:
        cells = {}
        for job, (row, series) in zip(jobs, results):
            if job.algorithm != algorithm:
                continue
            key = tuple(row.get(c) for c in CELL_PARAMS)
            entry = cells.setdefault(key, {"row": row, "series": [], "gaps": [], "cps": job.checkpoints})
            if series is not None:
                entry["series"].append(series)
                entry["gaps"].append(row["total_gap"])
        best = None
        for key, entry in cells.items():
            base = {c: entry["row"].get(c) for c in CELL_PARAMS}
            if entry["series"]:
                mean = np.mean(entry["series"], axis=0)
                for it, v in zip(entry["cps"], mean):
                    series_rows.append(dict(base, algorithm=algorithm, iteration=it, mean_total_gap=float(v),
                                            runs=len(entry["series"])))
                score = float(np.mean(entry["gaps"]))
                if best is None or score < best["mean_total_gap"]:
                    best = dict(base, algorithm=algorithm, mean_total_gap=score, runs=len(entry["gaps"]))
        if best is not None:
            best_rows.append(best)
    write_rows(out / "gap_series.csv", SERIES_COLUMNS, series_rows)
    write_rows(out / "best.csv", BEST_COLUMNS, best_rows)
    return {"summary": out / "summary.csv", "rows": rows, "best": best_rows, "f_star": f_star}


__all__ = ["ALGORITHMS", "run_sweep", "run_job", "execute", "Job"]
