"""Command line: ``divide-blo solve|sweep|report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .bench.config import ConfigError, load_config
from .bench.io import SUMMARY_COLUMNS, rows_to_text, write_rows, write_trace
from .bench.metrics import bilevel_optimum, compute_metrics
from .bench.report import AGGREGATE_COLUMNS, ReportError, emit_report
from .bench.sweep import cell_columns, execute, run_sweep
from .solver import SolverError


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    algorithm = cfg.single_algorithm()
    section = cfg.solver_section if algorithm == "divide-blo" else cfg.baseline_section
    seed = args.seed if args.seed is not None else int(section.get("seed", 0))
    cell = cfg.base_params(algorithm)
    trace, k = execute(cfg, algorithm, cell, seed)
    f_star = bilevel_optimum(cfg.problem, cfg.oracle_grid)[0]
    report = compute_metrics(cfg.problem, trace, cfg.oracle_grid, f_star=f_star)
    row = dict(cell_columns(algorithm, cell, k), algorithm=algorithm, seed=seed, iters=int(trace.t[-1]),
               violation=report.violation, total_gap=report.total_gap, status=trace.status)
    if algorithm != "divide-blo":
        row["k"] = None
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_trace(trace, out / "trace.csv", cfg.record_wallclock)
        write_rows(out / "summary.csv", SUMMARY_COLUMNS, [row])
    sys.stdout.write(rows_to_text(SUMMARY_COLUMNS, [row]))
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, out_dir=args.out)
    result = run_sweep(cfg, args.out, workers=args.workers)
    failed = sum(1 for r in result["rows"] if str(r["status"]).startswith("failed"))
    print(f"{len(result['rows'])} runs ({failed} failed) -> {result['summary']}")
    return 0


def cmd_report(args) -> int:
    result = emit_report(args.summary, args.out)
    sys.stdout.write(rows_to_text(AGGREGATE_COLUMNS, result["aggregate"]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divide-blo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one seeded solve and print its summary row")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="directory for trace.csv and summary.csv")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a seeded parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate a sweep summary")
    p.add_argument("--summary", required=True)
    p.add_argument("--out", help="directory for aggregate tables (default: next to the summary)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ReportError, SolverError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
