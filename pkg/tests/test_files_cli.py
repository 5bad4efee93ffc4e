import json

import numpy as np
import pytest

from pecsynth import cli, files
from pecsynth.simulator import SimConfig, simulate


def test_model_round_trip(tmp_path, case):
    path = tmp_path / "model.json"
    files.save_model(path, case.plant, case.base, case.L, case.bounds,
                     observer_poles=case.params.observer_poles)
    plant, base, L, bounds = files.load_model(path)
    assert np.array_equal(plant.A, case.plant.A)
    assert np.array_equal(base.D_c, case.base.D_c)
    assert np.array_equal(L, case.L)
    assert np.array_equal(bounds.W_v, case.bounds.W_v)


def test_trace_csv_shape(tmp_path, case, detector):
    cfg = SimConfig(dt=0.01, horizon=2.0, disturbance_mode="zero")
    tr = simulate(case.plant, case.base, detector, cfg)
    path = tmp_path / "trace.csv"
    files.trace_to_csv(path, tr)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "time,x1,x2,x3,x4,u1,u2,r1,r2,r3,r4,stealth,alarm"
    assert len(lines) == tr.n_steps + 1


def test_emit_quadtank_and_missing_file(tmp_path, capsys):
    rc = cli.main(["emit-quadtank", "--out-dir", str(tmp_path), "--name", "m.json"])
    assert rc == 0
    assert (tmp_path / "m.json").exists()
    with pytest.raises(SystemExit) as exc:
        cli.main(["residual-set", "--model", str(tmp_path / "nope.json")])
    assert exc.value.code == 2
    assert "nope.json" in capsys.readouterr().err


def test_cli_residual_set_single_alpha(tmp_path, capsys):
    cli.main(["emit-quadtank", "--out-dir", str(tmp_path)])
    rc = cli.main([
        "residual-set", "--model", str(tmp_path / "quadtank.json"),
        "--alpha-grid", "2.0,0.5", "--out-dir", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "-logdet(Pi)" in out
    assert (tmp_path / "residual_Pi.json").exists()
    cert, doc = files.load_certificate(tmp_path / "residual_Pe.json")
    assert cert.program == "ResidualSet"
    assert cert.residual >= -1e-6


def test_cli_simulate_deterministic(tmp_path):
    cli.main(["emit-quadtank", "--out-dir", str(tmp_path)])
    args = [
        "simulate", "--model", str(tmp_path / "quadtank.json"),
        "--alpha-grid", "2.0,0.5",
        "--attack-sensor", "1", "--attack-start", "5", "--horizon", "20",
        "--dt", "0.01", "--mode", "boundary", "--seed", "7",
        "--out-dir", str(tmp_path),
    ]
    assert cli.main(args) == 0
    first = (tmp_path / "trace_base.csv").read_bytes()
    assert cli.main(args) == 0
    assert (tmp_path / "trace_base.csv").read_bytes() == first


def test_cli_simulate_loud_attack_alarms(tmp_path, capsys):
    cli.main(["emit-quadtank", "--out-dir", str(tmp_path)])
    rc = cli.main([
        "simulate", "--model", str(tmp_path / "quadtank.json"),
        "--alpha-grid", "2.0,0.5",
        "--attack-sensor", "1", "--attack-start", "5", "--amplitude", "100",
        "--horizon", "20", "--dt", "0.01", "--out-dir", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    alarms = int(out.split("alarms = ")[1].split()[0])
    assert alarms > 0


def test_cli_table2_parallel_matches_serial(tmp_path):
    cli.main(["emit-quadtank", "--out-dir", str(tmp_path)])
    grid = "2.0,0.5,0.05,0.02,0.01,0.005"
    base = ["table2", "--model", str(tmp_path / "quadtank.json"),
            "--alpha-grid", grid]
    assert cli.main(base + ["--out-dir", str(tmp_path / "serial")]) == 0
    assert cli.main(base + ["--out-dir", str(tmp_path / "par"), "--jobs", "3"]) == 0
    serial = (tmp_path / "serial" / "table2.csv").read_bytes()
    par = (tmp_path / "par" / "table2.csv").read_bytes()
    assert serial == par


def test_out_dir_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("PECSYNTH_OUT_DIR", str(tmp_path / "envout"))
    assert cli.main(["emit-quadtank"]) == 0
    assert (tmp_path / "envout" / "quadtank.json").exists()


def test_cli_synthesize_writes_realization(tmp_path, capsys):
    cli.main(["emit-quadtank", "--out-dir", str(tmp_path)])
    rc = cli.main([
        "synthesize", "--model", str(tmp_path / "quadtank.json"),
        "--scenario", "4", "--alpha-grid", "2.0,0.5,0.05,0.02",
        "--out-dir", str(tmp_path),
    ])
    assert rc == 0
    real = files.load_realization(tmp_path / "realization_4.json")
    assert real["trace"] <= real["baseline_trace"] + 1e-6
    assert real["F"].shape == (2, 4)
