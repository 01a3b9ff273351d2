"""Command-line interface: solve, convergence, sweep-c and table."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench_harness as bh
from .config import ConfigError, build_config, load_config
from .fv_kernel import StepSizeError
from .mr_tree import GradingError
from .solver_driver import MODES, RunConfig, SimulationError, run


def _add_run_options(p):
    p.add_argument("--problem", help="sedimentation-ex1, traffic-ex2 or custom")
    p.add_argument("--initial", help="initial datum name, e.g. default, rough, constant:0.1")
    p.add_argument("--mode", type=str.upper, choices=MODES)
    p.add_argument("--levels", type=int, help="maximal level L (2**L finest cells)")
    p.add_argument("--epsilon", type=float, help="reference tolerance eps_R")
    p.add_argument("--C", dest="C", type=float, help="factor C for the tolerance formula")
    p.add_argument("--alpha", type=float)
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--snapshots", dest="snapshot_times", type=float, nargs="+", metavar="T")
    step = p.add_mutually_exclusive_group()
    step.add_argument("--dt0", type=float)
    step.add_argument("--cfl0", type=float)
    step.add_argument("--lambda", dest="lambda_fixed", type=float, help="fixed dt = lambda * h_L")
    p.add_argument("--delta-desired", dest="delta_desired", type=float)
    p.add_argument("--trace-stride", dest="trace_stride", type=int)
    p.add_argument("--check-grading", dest="check_grading", action="store_true", default=None)


def _run_overrides(args):
    keys = ("problem", "initial", "mode", "levels", "epsilon", "C", "alpha", "t_final",
            "snapshot_times", "dt0", "cfl0", "lambda_fixed", "delta_desired", "trace_stride",
            "check_grading")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _base_config(args, **defaults):
    values, out_dir = load_config(args.config) if getattr(args, "config", None) else ({}, None)
    merged = dict(defaults)
    merged.update(values)
    return build_config(merged, _run_overrides(args)), out_dir


def cmd_solve(args):
    config, file_out = _base_config(args)
    out = args.out or file_out
    report = run(config)
    reference = fv_time = None
    if args.reference_level is not None:
        if args.reference_level < config.levels:
            raise ConfigError("reference level must be at least the run level")
        times = sorted(report.snapshots)
        reference = run(bh.fixed_fv(config, args.reference_level, times))
        if args.reference_level == config.levels:
            fv_time = reference.cpu_time
    rows = bh.metrics_rows(report, reference, fv_time)
    for row in rows:
        print(" ".join(f"{k}={bh.fmt(v)}" for k, v in row.items() if v is not None))
    if out:
        for path in bh.emit_outputs(report, out, reference, fv_time):
            print(f"wrote {path}")
    return 0


def cmd_convergence(args):
    base, file_out = _base_config(args, problem="sedimentation-ex1", initial="rough")
    rep = bh.convergence_study(base, args.levels_list, args.reference_level, args.times)
    print("t level N l1 l2 linf")
    for row in rep.rows():
        print(" ".join(bh.fmt(row[k]) for k in ("t", "level", "N", "l1", "l2", "linf")))
    for n in bh.NORMS:
        a = rep.alpha[n]
        print(f"alpha_{n} = {'n/a' if a is None else format(a, '.4f')}")
    out = args.out or file_out
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        print("wrote", bh.write_csv(Path(out) / "convergence.csv", ("t", "level", "N", "l1", "l2", "linf"),
                                    rep.rows()))
        rows = [{"norm": n, "alpha": rep.alpha[n], **{f"alpha_t{bh.time_label(t)}": rep.alpha_by_time[t][n]
                                                     for t in rep.times}} for n in bh.NORMS]
        print("wrote", bh.write_csv(Path(out) / "convergence_rates.csv", list(rows[0]), rows))
    return 0


SWEEP_COLUMNS = ("L", "C", "epsilon_R", "mu", "V", "l1", "fv_l1", "acceptable", "best")


def cmd_sweep(args):
    base, file_out = _base_config(args)
    t = args.t if args.t is not None else base.t_final
    rows = bh.factor_c_sweep(base, args.level_list, args.c_list, t, args.reference_level,
                             mr_mode="MR_RKF" if args.rkf else "MR")
    print(" ".join(SWEEP_COLUMNS))
    for row in rows:
        print(" ".join(bh.fmt(row[k]) for k in SWEEP_COLUMNS))
    out = args.out or file_out
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        print("wrote", bh.write_csv(Path(out) / "sweep_c.csv", SWEEP_COLUMNS, rows))
    return 0


TABLE_COLUMNS = ("method", "L", "t", "V", "mu", "cpu_time", "l1", "l2", "linf")


def load_matrix(path):
    """JSON file {"defaults": {...}, "reference": {...}, "runs": [{...}, ...]}."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    defaults = data.get("defaults", {})
    if "runs" not in data or "reference" not in data:
        raise ConfigError(f"{path}: matrix needs 'reference' and 'runs'")
    try:
        reference = RunConfig.from_dict({**defaults, "mode": "FV", **data["reference"]})
        runs = [RunConfig.from_dict({**defaults, **r}) for r in data["runs"]]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return reference, runs


def cmd_table(args):
    reference, runs = load_matrix(args.matrix)
    rows = bh.table_run(runs, reference)
    print(" ".join(TABLE_COLUMNS))
    for row in rows:
        print(" ".join(bh.fmt(row[k]) for k in TABLE_COLUMNS))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        print("wrote", bh.write_csv(Path(args.out) / "table.csv", TABLE_COLUMNS, rows))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mrfv",
        description="Adaptive multiresolution finite volume solver for degenerate parabolic equations. "
                    f"Worker processes for matrix runs: ${bh.WORKERS_ENV} (default 1).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one simulation and write CSV outputs")
    p.add_argument("--config", help="INI configuration file")
    _add_run_options(p)
    p.add_argument("--reference-level", type=int, help="also run FV at this level and report errors")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("convergence", help="fixed-step FV convergence study")
    p.add_argument("--config")
    _add_run_options(p)
    p.add_argument("--study-levels", dest="levels_list", type=int, nargs="+", default=[7, 8, 9, 10])
    p.add_argument("--reference-level", type=int, default=11)
    p.add_argument("--times", type=float, nargs="+", default=[4000.0, 9000.0, 12000.0])
    p.add_argument("--out")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("sweep-c", help="MR runs over levels and tolerance factors C")
    p.add_argument("--config")
    _add_run_options(p)
    p.add_argument("--level-list", type=int, nargs="+", required=True)
    p.add_argument("--c-list", type=float, nargs="+", required=True)
    p.add_argument("--rkf", action="store_true", help="sweep MR+RKF instead of fixed-step MR")
    p.add_argument("--t", type=float, help="comparison time (default: t_final)")
    p.add_argument("--reference-level", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table", help="method table from a JSON run matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, StepSizeError) as exc:
        print(f"mrfv: error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, GradingError, OSError) as exc:
        print(f"mrfv: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
