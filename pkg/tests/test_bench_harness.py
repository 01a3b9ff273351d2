import csv
import json

import numpy as np
import pytest

from mrfv import bench_harness as bh
from mrfv.fv_kernel import UniformField
from mrfv.solver_driver import RunConfig, run

RING = {"flux": [0.0, 1.0, -1.0], "diffusion": [0.05], "boundary": "periodic"}


def uf(values, domain=(0.0, 1.0)):
    values = np.asarray(values, dtype=float)
    return UniformField(values, int(np.log2(values.size)), domain)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_error_norms_examples():
    a = uf([0.3, 0.1, 0.2, 0.4])
    assert bh.error_norms(a, a) == bh.ErrorTriple(0.0, 0.0, 0.0)
    b = uf([0.3, 1.1, 0.2, 0.4])
    e = bh.error_norms(a, b)
    assert (e.l1, e.l2, e.linf) == pytest.approx((0.25, 0.5, 1.0), rel=1e-14)


def test_error_norms_reject_mismatch():
    with pytest.raises(ValueError):
        bh.error_norms(uf(np.zeros(4)), uf(np.zeros(8)))
    with pytest.raises(ValueError):
        bh.error_norms(uf(np.zeros(4)), uf(np.zeros(4), (0.0, 2.0)))
    with pytest.raises(ValueError):
        bh.ErrorTriple(-1.0, 0.0, 0.0)


def test_normalized_errors():
    e = bh.ErrorTriple(1.0, 2.0, 3.0).normalized(bh.ErrorTriple(2.0, 0.0, 3.0))
    assert (e.l1, e.l2, e.linf) == (0.5, 2.0, 1.0)


def test_project_to_level():
    f = uf(np.arange(8.0))
    p = bh.project_to_level(f, 2)
    assert np.array_equal(p.values, [0.5, 2.5, 4.5, 6.5])
    assert p.mass() == pytest.approx(f.mass())
    with pytest.raises(ValueError):
        bh.project_to_level(f, 4)


def test_fit_rate():
    levels = [4, 5, 6, 7]
    assert bh.fit_rate(levels, [2.0 ** (-0.6 * l) for l in levels]) == pytest.approx(0.6)
    assert bh.fit_rate(levels, [0.0, 1.0, 1.0, 1.0]) is None
    assert bh.pooled_rate(levels, [[3 * 2.0 ** (-l) for l in levels],
                                   [5 * 2.0 ** (-l) for l in levels]]) == pytest.approx(1.0)


def test_convergence_constant_datum_skips_fit():
    base = RunConfig(problem="custom", params=RING, initial="constant:0.4")
    rep = bh.convergence_study(base, (3, 4), 5, (0.2,))
    assert all(e == bh.ErrorTriple(0.0, 0.0, 0.0) for e in rep.errors[0.2])
    assert rep.alpha == {"l1": None, "l2": None, "linf": None}
    assert rep.grid_sizes == (8, 16)


def test_convergence_smooth_heat_like():
    base = RunConfig(problem="custom", params=RING, initial="sine:0.5:0.3:1")
    rep = bh.convergence_study(base, (4, 5, 6), 8, (0.2, 0.5))
    assert rep.alpha["l1"] >= 1.0
    assert len(list(rep.rows())) == 6
    with pytest.raises(ValueError):
        bh.convergence_study(base, (4, 5), 5, (0.2,))


def test_table_run_fv_against_itself():
    ref = RunConfig(initial="rough", levels=6, t_final=200.0, snapshot_times=(100.0,), cfl0=0.5)
    rows = bh.table_run([ref], ref)
    assert len(rows) == 2
    for row in rows:
        assert row["method"] == "FV"
        assert (row["l1"], row["l2"], row["linf"]) == (0.0, 0.0, 0.0)
        assert row["mu"] == 1.0
        assert row["V"] == pytest.approx(1.0, rel=1.0)


def test_table_run_mixed_methods():
    ref = RunConfig(initial="rough", levels=7, t_final=200.0, cfl0=0.5)
    runs = [ref.replace(levels=6), ref.replace(levels=6, mode="MR", epsilon=1e-4, cfl0=0.5)]
    rows = bh.table_run(runs, ref)
    assert [r["method"] for r in rows] == ["FV", "MR"]
    assert rows[1]["mu"] > 1.0
    with pytest.raises(ValueError):
        bh.table_run([ref.replace(t_final=100.0)], ref)


def test_factor_c_sweep_small_c_reproduces_fv():
    base = RunConfig(initial="rough", levels=6, t_final=100.0)
    rows = bh.factor_c_sweep(base, [6], [1e-9, 1e3], 100.0)
    tiny = rows[0]
    # details that are exactly zero (flat parts of the datum) stay deletable for any C > 0
    assert 64 / 65 <= tiny["mu"] < 1.3
    assert tiny["l1"] == pytest.approx(tiny["fv_l1"], rel=0.05)
    assert tiny["acceptable"]
    assert sum(r["best"] for r in rows) == 1
    assert rows[1]["mu"] >= tiny["mu"]


def test_emit_outputs(tmp_path):
    cfg = RunConfig(initial="rough", levels=6, mode="MR", epsilon=1e-4, t_final=50.0,
                    snapshot_times=(25.0,))
    rep = run(cfg)
    ref = run(bh.fixed_fv(cfg, 7, (25.0, 50.0)))
    paths = bh.emit_outputs(rep, tmp_path, ref)
    names = {p.name for p in paths}
    assert names == {"solution_25.csv", "solution_50.csv", "leaves_25.csv", "leaves_50.csv",
                     "dt_trace.csv", "metrics.csv", "run.json"}
    sol = read_csv(tmp_path / "solution_50.csv")
    assert sol[0] == ["x", "u"] and len(sol) - 1 == 2 ** 6
    leaves = read_csv(tmp_path / "leaves_50.csv")
    assert leaves[0] == ["level", "index", "center_x", "dx", "value"]
    assert sum(float(r[3]) for r in leaves[1:]) == pytest.approx(1.0)
    metrics = read_csv(tmp_path / "metrics.csv")
    assert tuple(metrics[0]) == bh.METRIC_COLUMNS and len(metrics) == 3
    assert float(metrics[1][metrics[0].index("l1")]) > 0.0
    manifest = json.loads((tmp_path / "run.json").read_text())
    assert manifest["summary"]["n_steps"] == rep.n_steps
    assert bh.load_manifest(tmp_path / "run.json") == cfg


def test_emit_outputs_unwritable(tmp_path):
    rep = run(RunConfig(levels=4, t_final=1.0))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(bh.OutputError):
        bh.emit_outputs(rep, blocker / "sub")


def test_fmt_and_labels():
    assert bh.fmt(0.1) == "0.10000000000000001"
    assert bh.fmt(True) == "true"
    assert bh.fmt(None) == ""
    assert bh.fmt(np.int64(3)) == "3"
    assert bh.time_label(12000.0) == "12000"
    assert bh.time_label(0.2) == "0.2"


def test_worker_count(monkeypatch):
    monkeypatch.delenv(bh.WORKERS_ENV, raising=False)
    assert bh.worker_count() == 1
    monkeypatch.setenv(bh.WORKERS_ENV, "3")
    assert bh.worker_count() == 3
    monkeypatch.setenv(bh.WORKERS_ENV, "zero")
    with pytest.raises(ValueError):
        bh.worker_count()


def test_run_many_parallel_matches_serial():
    cfgs = [RunConfig(initial="rough", levels=l, t_final=50.0) for l in (5, 6)]
    serial = bh.run_many(cfgs, 1)
    parallel = bh.run_many(cfgs, 2)
    for a, b in zip(serial, parallel):
        assert np.array_equal(a.final.values, b.final.values)


def test_reference_epsilon():
    cfg = RunConfig(levels=7, mode="MR", C=500.0)
    assert bh.reference_epsilon(cfg) > 0.0
    assert bh.reference_epsilon(cfg.replace(C=None, epsilon=2e-5)) == 2e-5
