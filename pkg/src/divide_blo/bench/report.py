"""Aggregate a sweep summary into per-cell tables."""

from __future__ import annotations

import math
from pathlib import Path

from .config import CELL_PARAMS
from .io import SUMMARY_COLUMNS, read_rows, write_rows

VIOLATION_THRESHOLD = 0.1
AGGREGATE_COLUMNS = ("algorithm",) + CELL_PARAMS + (
    "runs", "failed", "mean_violation", "max_violation", "mean_total_gap", "frac_violation_gt_0.1", "best",
)
BEST_RUN_COLUMNS = ("algorithm",) + CELL_PARAMS + ("seed", "violation", "total_gap")


class ReportError(ValueError):
    pass


def _number(text: str, col: str, lineno: int, errors: list, allow_blank: bool = False):
    if text == "" and allow_blank:
        return None
    try:
        v = float(text)
    except ValueError:
        errors.append(f"row {lineno}: {col}={text!r} is not a number")
        return None
    if math.isnan(v):
        errors.append(f"row {lineno}: {col} is nan")
        return None
    return v


def load_summary(path) -> list[dict]:
    """Parse and validate summary.csv; every problem is reported at once."""
    header, raw = read_rows(path)
    if tuple(header) != SUMMARY_COLUMNS:
        raise ReportError(f"{path}: header {header} does not match {list(SUMMARY_COLUMNS)}")
    rows, errors = [], []
    for lineno, r in enumerate(raw, start=2):
        if len(r) != len(SUMMARY_COLUMNS):
            errors.append(f"row {lineno}: expected {len(SUMMARY_COLUMNS)} fields, got {len(r)}")
            continue
        d = dict(zip(SUMMARY_COLUMNS, r))
        if not d["algorithm"]:
            errors.append(f"row {lineno}: empty algorithm")
        failed = d["status"].startswith("failed")
        for c in CELL_PARAMS:
            if d[c] not in ("", "auto"):
                _number(d[c], c, lineno, errors)
        for c in ("violation", "total_gap"):
            d[c] = _number(d[c], c, lineno, errors, allow_blank=failed)
        if d["status"] not in ("converged", "max_iters") and not failed:
            errors.append(f"row {lineno}: unknown status {d['status']!r}")
        d["failed"] = failed
        rows.append(d)
    if errors:
        raise ReportError("malformed summary:\n  " + "\n  ".join(errors))
    return rows


def aggregate(rows: list[dict]) -> list[dict]:
    cells: dict = {}
    for r in rows:
        key = (r["algorithm"],) + tuple(r[c] for c in CELL_PARAMS)
        cells.setdefault(key, []).append(r)
    out = []
    for key, members in cells.items():
        ok = [r for r in members if not r["failed"]]
        viol = [r["violation"] for r in ok]
        gaps = [r["total_gap"] for r in ok]
        out.append({
            "algorithm": key[0], **dict(zip(CELL_PARAMS, key[1:])),
            "runs": len(members), "failed": len(members) - len(ok),
            "mean_violation": sum(viol) / len(viol) if viol else None,
            "max_violation": max(viol) if viol else None,
            "mean_total_gap": sum(gaps) / len(gaps) if gaps else None,
            "frac_violation_gt_0.1": sum(v > VIOLATION_THRESHOLD for v in viol) / len(viol) if viol else None,
            "best": 0,
        })
    by_alg: dict = {}
    for row in out:
        if row["mean_total_gap"] is None:
            continue
        cur = by_alg.get(row["algorithm"])
        if cur is None or row["mean_total_gap"] < cur["mean_total_gap"]:
            by_alg[row["algorithm"]] = row
    for row in by_alg.values():
        row["best"] = 1
    return out


def emit_report(summary, out_dir=None) -> dict:
    """Write aggregate.csv and best_runs.csv (per-run results of each
    algorithm's best cell) next to the summary or into out_dir."""
    summary = Path(summary)
    out = Path(out_dir) if out_dir else summary.parent
    out.mkdir(parents=True, exist_ok=True)
    rows = load_summary(summary)
    table = aggregate(rows)
    best_keys = {(r["algorithm"],) + tuple(r[c] for c in CELL_PARAMS) for r in table if r["best"]}
    best_runs = [r for r in rows if not r["failed"]
                 and (r["algorithm"],) + tuple(r[c] for c in CELL_PARAMS) in best_keys]
    write_rows(out / "aggregate.csv", AGGREGATE_COLUMNS, table)
    write_rows(out / "best_runs.csv", BEST_RUN_COLUMNS, best_runs)
    return {"aggregate": table, "best_runs": best_runs, "paths": (out / "aggregate.csv", out / "best_runs.csv")}
