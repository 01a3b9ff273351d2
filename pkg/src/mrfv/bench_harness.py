"""Error norms, convergence studies, method tables, tolerance sweeps and CSV output."""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import json
import math
import os
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .fv_kernel import UniformField
from .solver_driver import RunConfig, RunReport, problem_for, reference_tolerance, run

WORKERS_ENV = "MRFV_WORKERS"
NORMS = ("l1", "l2", "linf")


class OutputError(OSError):
    """Raised when an output file cannot be written."""


@dataclasses.dataclass(frozen=True)
class ErrorTriple:
    l1: float
    l2: float
    linf: float

    def __post_init__(self):
        if min(self.l1, self.l2, self.linf) < 0.0:
            raise ValueError("norms must be non-negative")

    def as_dict(self):
        return dataclasses.asdict(self)

    def normalized(self, scale: "ErrorTriple") -> "ErrorTriple":
        """Divide each norm by the matching norm of ``scale`` (zero scale gives the raw value)."""
        return ErrorTriple(*(v / s if s > 0.0 else v for v, s in
                             zip((self.l1, self.l2, self.linf), (scale.l1, scale.l2, scale.linf))))


@dataclasses.dataclass
class ConvergenceReport:
    levels: tuple
    reference_level: int
    times: tuple
    errors: dict            # t -> list of ErrorTriple, one per level
    alpha: dict             # norm -> pooled slope over all times, or None
    alpha_by_time: dict     # t -> {norm: slope or None}

    @property
    def grid_sizes(self):
        return tuple(2 ** l for l in self.levels)

    def rows(self):
        for t in self.times:
            for l, e in zip(self.levels, self.errors[t]):
                yield {"t": t, "level": l, "N": 2 ** l, **e.as_dict()}


def worker_count(default=1):
    """Worker processes for matrix runs, from the MRFV_WORKERS environment variable."""
    raw = os.environ.get(WORKERS_ENV, "")
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


# ---------------------------------------------------------------------------
# norms and projection

def error_norms(a: UniformField, b: UniformField) -> ErrorTriple:
    """Delta-x weighted L1 and L2 norms and the max norm of a - b."""
    if a.level != b.level or tuple(a.domain) != tuple(b.domain):
        raise ValueError(f"fields differ in level or domain: {a.level}/{a.domain} vs {b.level}/{b.domain}")
    d = np.abs(a.values - b.values)
    dx = a.dx
    return ErrorTriple(float(dx * d.sum()), float(math.sqrt(dx * np.dot(d, d))), float(d.max(initial=0.0)))


def field_norms(a: UniformField) -> ErrorTriple:
    return error_norms(a, UniformField(np.zeros(a.n), a.level, a.domain))


def project_to_level(field: UniformField, level: int) -> UniformField:
    """Exact averaging down to a coarser level."""
    if level > field.level:
        raise ValueError(f"cannot project level {field.level} up to {level}")
    v = field.values
    for _ in range(field.level - level):
        v = 0.5 * (v[0::2] + v[1::2])
    return UniformField(v.copy(), level, field.domain)


def compare(field: UniformField, reference: UniformField, normalize=False) -> ErrorTriple:
    """Errors of ``field`` against ``reference`` projected to the field's level."""
    ref = project_to_level(reference, field.level)
    e = error_norms(field, ref)
    return e.normalized(field_norms(ref)) if normalize else e


def fit_rate(levels, errors):
    """alpha from a least-squares fit of log2(error) = c - alpha*l; None if any error is zero."""
    errors = np.asarray(errors, dtype=float)
    if len(levels) < 2 or np.any(errors <= 0.0):
        return None
    slope = np.polyfit(np.asarray(levels, dtype=float), np.log2(errors), 1)[0]
    return float(-slope)


def pooled_rate(levels, errors_by_time):
    """Common slope over several times with one intercept per time."""
    rows, rhs = [], []
    nt = len(errors_by_time)
    for k, errs in enumerate(errors_by_time):
        errs = np.asarray(errs, dtype=float)
        if np.any(errs <= 0.0):
            return None
        for l, e in zip(levels, errs):
            row = np.zeros(nt + 1)
            row[0] = l
            row[1 + k] = 1.0
            rows.append(row)
            rhs.append(math.log2(e))
    if len(rows) < nt + 2:
        return None
    coef = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)[0]
    return float(-coef[0])


# ---------------------------------------------------------------------------
# running several configurations

def run_many(configs: Sequence[RunConfig], workers: Optional[int] = None):
    """Run independent configurations, in worker processes when workers > 1."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(configs) <= 1:
        return [run(c) for c in configs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, configs))


def fixed_fv(base: RunConfig, level, times):
    times = tuple(sorted(times))
    return base.replace(levels=level, mode="FV", epsilon=None, C=None, t_final=times[-1],
                        snapshot_times=times, dt0=None, lambda_fixed=None,
                        cfl0=0.5 if base.cfl0 is None else base.cfl0)


def convergence_study(base: Optional[RunConfig] = None, levels=(7, 8, 9, 10), reference_level=11,
                      t_list=(4000.0, 9000.0, 12000.0), workers=None) -> ConvergenceReport:
    """Fixed-step FV runs at each level against a finer reference, projected down."""
    if base is None:
        base = RunConfig(problem="sedimentation-ex1", initial="rough")
    levels = tuple(int(l) for l in levels)
    if max(levels) >= reference_level:
        raise ValueError("reference level must exceed every study level")
    times = tuple(sorted(float(t) for t in t_list))
    configs = [fixed_fv(base, l, times) for l in (reference_level,) + levels]
    reports = run_many(configs, workers)
    ref = reports[0]
    errors = {t: [compare(r.snapshots[t], ref.snapshots[t]) for r in reports[1:]] for t in times}
    by_time = {t: {n: fit_rate(levels, [getattr(e, n) for e in errors[t]]) for n in NORMS} for t in times}
    alpha = {n: pooled_rate(levels, [[getattr(e, n) for e in errors[t]] for t in times]) for n in NORMS}
    return ConvergenceReport(levels, reference_level, times, errors, alpha, by_time)


def method_name(config: RunConfig):
    return config.mode.replace("_RKF", "+RKF")


def table_run(matrix: Sequence[RunConfig], reference: RunConfig, workers=None):
    """Rows (method, L, t, V, mu, normalized errors) for each config and snapshot time.

    V is the CPU-time ratio to the FV run at the same level when the matrix
    contains one, else to the reference run when it shares the level.
    """
    if not matrix:
        return []
    t_final = matrix[0].t_final
    if any(c.problem != reference.problem or c.t_final != t_final for c in matrix) \
            or reference.t_final != t_final:
        raise ValueError("all configs must share the problem and t_final")
    reports = run_many([reference] + list(matrix), workers)
    ref, rest = reports[0], reports[1:]
    fv_time = {c.levels: r.cpu_time for c, r in zip(matrix, rest) if c.mode == "FV"}
    fv_time.setdefault(reference.levels, ref.cpu_time)
    rows = []
    for c, r in zip(matrix, rest):
        base_time = fv_time.get(c.levels)
        V = base_time / r.cpu_time if base_time is not None and r.cpu_time > 0 else float("nan")
        for t in sorted(r.snapshots):
            if t not in ref.snapshots:
                continue
            e = compare(r.snapshots[t], ref.snapshots[t], normalize=True)
            rows.append({"method": method_name(c), "L": c.levels, "t": t, "V": V, "mu": r.mu[t],
                         "cpu_time": r.cpu_time, **e.as_dict()})
    return rows


def factor_c_sweep(base: RunConfig, L_list, C_list, t, reference_level=None, workers=None, mr_mode=None):
    """MR runs over (L, C) with mu, V and L1 error against a finer FV reference.

    A pair is acceptable when its L1 error is at most twice the FV-vs-reference
    error at the same L; ``best`` marks the largest acceptable C per L.
    """
    L_list = sorted(int(l) for l in L_list)
    C_list = sorted(float(c) for c in C_list)
    ref_level = max(L_list) + 1 if reference_level is None else int(reference_level)
    t = float(t)
    if mr_mode is None:
        mr_mode = base.mode if base.adaptive else "MR"
    configs = [fixed_fv(base, ref_level, (t,))] + [fixed_fv(base, L, (t,)) for L in L_list]
    configs += [base.replace(levels=L, mode=mr_mode, C=C, epsilon=None, t_final=t, snapshot_times=(t,))
                for L in L_list for C in C_list]
    reports = run_many(configs, workers)
    ref = reports[0]
    fv = dict(zip(L_list, reports[1:1 + len(L_list)]))
    rows = []
    it = iter(reports[1 + len(L_list):])
    for L in L_list:
        fv_err = compare(fv[L].snapshots[t], ref.snapshots[t]).l1
        level_rows = []
        for C in C_list:
            r = next(it)
            err = compare(r.snapshots[t], ref.snapshots[t]).l1
            level_rows.append({"L": L, "C": C, "epsilon_R": r.epsilon_R, "mu": r.mu[t],
                               "V": fv[L].cpu_time / r.cpu_time if r.cpu_time > 0 else float("nan"),
                               "l1": err, "fv_l1": fv_err, "acceptable": err <= 2.0 * fv_err,
                               "best": False})
        ok = [row for row in level_rows if row["acceptable"]]
        if ok:
            max(ok, key=lambda row: row["C"])["best"] = True
        rows.extend(level_rows)
    return rows


# ---------------------------------------------------------------------------
# output

def fmt(x):
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "" if x is None else str(x)


def time_label(t):
    return format(float(t), ".10g")


def write_csv(path, header, rows):
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                if isinstance(row, dict):
                    row = [row.get(h) for h in header]
                w.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def metrics_rows(report: RunReport, reference: Optional[RunReport] = None, fv_cpu_time=None):
    rows = []
    V = fv_cpu_time / report.cpu_time if fv_cpu_time and report.cpu_time > 0 else float("nan")
    if report.config.mode == "FV" and fv_cpu_time is None:
        V = 1.0
    for t in sorted(report.snapshots):
        row = {"method": method_name(report.config), "L": report.config.levels, "t": t, "V": V,
               "mu": report.mu[t], "cpu_time": report.cpu_time, "n_steps": report.n_steps,
               "mass_drift": abs(report.mass[t] - report.mass0) / abs(report.mass0) if report.mass0 else 0.0,
               "l1": None, "l2": None, "linf": None}
        if reference is not None and t in reference.snapshots:
            row.update(compare(report.snapshots[t], reference.snapshots[t], normalize=True).as_dict())
        rows.append(row)
    return rows


METRIC_COLUMNS = ("method", "L", "t", "V", "mu", "cpu_time", "n_steps", "mass_drift", "l1", "l2", "linf")


def emit_outputs(report: RunReport, out_dir, reference: Optional[RunReport] = None, fv_cpu_time=None):
    """Write per-snapshot solution and leaf CSVs, the dt trace, metrics and a run.json manifest."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc.strerror or exc}") from exc
    written = []
    for t, field in sorted(report.snapshots.items()):
        lab = time_label(t)
        written.append(write_csv(out / f"solution_{lab}.csv", ("x", "u"),
                                 zip(field.centers, field.values)))
        leaves = report.leaves.get(t)
        if leaves is not None:
            written.append(write_csv(out / f"leaves_{lab}.csv", ("level", "index", "center_x", "dx", "value"),
                                     ([int(r[0]), int(r[1]), r[2], r[3], r[4]] for r in leaves)))
    tr = report.trace
    written.append(write_csv(out / "dt_trace.csv", ("step", "t", "dt", "delta_old", "n_leaves"),
                             zip(tr["step"], tr["t"], tr["dt"], tr["delta_old"], tr["n_leaves"])))
    written.append(write_csv(out / "metrics.csv", METRIC_COLUMNS,
                             metrics_rows(report, reference, fv_cpu_time)))
    manifest = {"config": report.config.to_dict(),
                "summary": {"epsilon_R": report.epsilon_R, "dt_initial": report.dt_initial,
                            "dt_final": report.dt_final, "n_steps": report.n_steps,
                            "cpu_time": report.cpu_time, "mass0": report.mass0,
                            "snapshot_times": sorted(report.snapshots)}}
    path = out / "run.json"
    try:
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    written.append(path)
    return written


def load_manifest(path) -> RunConfig:
    """RunConfig stored in a run.json manifest."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return RunConfig.from_dict(data["config"])


def reference_epsilon(config: RunConfig):
    """epsilon_R that a C-based config resolves to."""
    if config.epsilon is not None:
        return config.epsilon
    return reference_tolerance(config.C, config.alpha, config.levels, problem_for(config)).epsilon_R
