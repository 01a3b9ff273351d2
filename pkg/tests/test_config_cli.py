import csv
import json

import pytest

from mrfv import cli
from mrfv.config import ConfigError, build_config, combine_mode, dump_config, load_config, parse_config
from mrfv.solver_driver import RunConfig

INI = """
[problem]
name = sedimentation-ex1
initial = rough

[params]
v_inf = 1e-4
K = 5

[run]
method = mr
levels = 6
t_final = 50
snapshot_times = 10, 25

[tolerance]
epsilon = 1e-4   ; explicit tolerance

[time]
mode = rkf
delta_desired = 5e-4

[output]
dir = results
"""


def test_parse_config():
    values, out = parse_config(INI)
    assert out == "results"
    assert values["mode"] == "MR_RKF"
    assert values["params"] == {"v_inf": 1e-4, "K": 5}
    assert values["snapshot_times"] == (10.0, 25.0)
    cfg = build_config(values)
    assert cfg.levels == 6 and cfg.epsilon == 1e-4


def test_combine_mode():
    assert combine_mode("fv", None) == "FV"
    assert combine_mode("MR", "fixed") == "MR"
    assert combine_mode(None, "rkf") == "FV_RKF"
    with pytest.raises(ConfigError):
        combine_mode("dg", None)
    with pytest.raises(ConfigError):
        combine_mode("fv", "implicit")


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config("[run]\nlevels = many\n")
    with pytest.raises(ConfigError):
        parse_config("[run]\nspeed = 3\n")
    with pytest.raises(ConfigError):
        parse_config("no section\n")
    with pytest.raises(ConfigError):
        parse_config("[run]\nmode = MR\n[time]\nmode = rkf\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")
    with pytest.raises(ConfigError):
        build_config({"mode": "MR"})


def test_overrides_win():
    values, _ = parse_config(INI)
    cfg = build_config(values, {"levels": 7, "C": 100.0})
    assert cfg.levels == 7 and cfg.C == 100.0 and cfg.epsilon is None


def test_dump_round_trip():
    cfg = RunConfig(problem="traffic-ex2", mode="MR_RKF", levels=8, C=1e6, t_final=0.2,
                    snapshot_times=(0.1,), params={"v_max": 60.0}, cfl0=0.25, light_blocks="convective")
    values, _ = parse_config(dump_config(cfg))
    assert build_config(values) == cfg


def test_cli_solve_writes_outputs(tmp_path, capsys):
    ini = tmp_path / "run.ini"
    ini.write_text(INI)
    out = tmp_path / "out"
    assert cli.main(["solve", "--config", str(ini), "--reference-level", "7", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "method=MR+RKF" in text
    for name in ("solution_10.csv", "leaves_25.csv", "dt_trace.csv", "metrics.csv", "run.json"):
        assert (out / name).exists()
    with open(out / "solution_50.csv") as fh:
        assert len(list(csv.reader(fh))) == 2 ** 6 + 1


def test_cli_solve_overrides(tmp_path, capsys):
    assert cli.main(["solve", "--mode", "fv", "--levels", "5", "--t-final", "20", "--cfl0", "0.3"]) == 0
    assert "method=FV L=5 t=20" in capsys.readouterr().out


def test_cli_errors(capsys):
    assert cli.main(["solve", "--levels", "30"]) == 2
    assert "levels" in capsys.readouterr().err
    assert cli.main(["solve", "--levels", "11", "--lambda", "20"]) == 2
    assert cli.main(["solve", "--config", "/nonexistent/run.ini"]) == 2
    assert cli.main(["solve", "--levels", "6", "--t-final", "100", "--reference-level", "5"]) == 2
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])


def test_cli_convergence(tmp_path, capsys):
    args = ["convergence", "--problem", "custom", "--initial", "sine:0.5:0.3:1", "--study-levels", "4", "5",
            "--reference-level", "7", "--times", "0.1", "0.2", "--out", str(tmp_path)]
    ini = tmp_path / "ring.ini"
    ini.write_text('[params]\nflux = [0, 1, -1]\ndiffusion = [0.05]\nboundary = periodic\n')
    assert cli.main(args + ["--config", str(ini)]) == 0
    text = capsys.readouterr().out
    assert "alpha_l1 =" in text
    with open(tmp_path / "convergence.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 and set(rows[0]) == {"t", "level", "N", "l1", "l2", "linf"}
    with open(tmp_path / "convergence_rates.csv") as fh:
        assert [r["norm"] for r in csv.DictReader(fh)] == ["l1", "l2", "linf"]


def test_cli_sweep(tmp_path, capsys):
    assert cli.main(["sweep-c", "--levels", "6", "--t-final", "50", "--level-list", "5", "6",
                     "--c-list", "1", "1000", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "sweep_c.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert {r["acceptable"] for r in rows} <= {"true", "false"}


def test_cli_table(tmp_path, capsys):
    matrix = {"defaults": {"problem": "sedimentation-ex1", "initial": "rough", "t_final": 50.0},
              "reference": {"levels": 7},
              "runs": [{"mode": "FV", "levels": 6}, {"mode": "MR", "levels": 6, "epsilon": 1e-4}]}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(matrix))
    assert cli.main(["table", "--matrix", str(path), "--out", str(tmp_path)]) == 0
    with open(tmp_path / "table.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["method"] for r in rows] == ["FV", "MR"]
    path.write_text("{not json")
    assert cli.main(["table", "--matrix", str(path)]) == 2
    path.write_text(json.dumps({"runs": []}))
    assert cli.main(["table", "--matrix", str(path)]) == 2
