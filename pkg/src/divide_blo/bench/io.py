"""CSV schemas for traces and sweep summaries."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from ..solver import IterationTrace
from .config import CELL_PARAMS

SUMMARY_COLUMNS = ("algorithm",) + CELL_PARAMS + ("seed", "iters", "violation", "total_gap", "status")


def fmt(v) -> str:
    """Shortest round-trip decimal; blank for missing values."""
    if v is None or v == "":
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, int)) and not isinstance(v, float):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return ""
    return repr(v)


def trace_columns(n: int, m: int) -> list[str]:
    return (["t", "f_gamma", "grad_map_norm", "feasibility_gap"]
            + [f"x_{i}" for i in range(n)] + [f"y_induced_{j}" for j in range(m)] + ["wallclock_ms"])


def write_trace(trace: IterationTrace, dest, record_wallclock: bool = False):
    """Write a trace CSV to a path or text stream.  wallclock_ms stays blank
    unless requested, so repeated runs produce identical files."""
    n, m = trace.x.shape[1], trace.y.shape[1]
    own = not hasattr(dest, "write")
    fh = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_columns(n, m))
        for i in range(len(trace)):
            w.writerow(
                [str(int(trace.t[i])), fmt(trace.f_gamma[i]), fmt(trace.grad_map_norm[i]),
                 fmt(trace.feasibility_gap[i])]
                + [fmt(v) for v in trace.x[i]] + [fmt(v) for v in trace.y[i]]
                + [fmt(trace.wallclock_ms[i]) if record_wallclock else ""]
            )
    finally:
        if own:
            fh.close()


def write_rows(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])


def rows_to_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        return (header or []), [r for r in reader]
