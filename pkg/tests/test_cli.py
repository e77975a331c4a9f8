import csv
import json
from pathlib import Path

import numpy as np
import pytest

from freebound.artifacts import ArtifactError, load_trajectory, read_manifest
from freebound.cli import main
from freebound.config import parse_config

SMALL = """\
params:
  N: 2
  gamma: 2.0
  theta: 1.0
  sigma: 0.5
  m: 2
  rho_star_lo: 2.5
  rho_star_hi: 4.0
grid:
  M: 64
run:
  horizon: 0.1*T1a
output:
  snapshots: 8
"""

TRIP = SMALL + """\
profile:
  velocity:
    kind: ramp
    amplitude: 2.0
    center: 0.6
    width: 0.05
monitors:
  M0: 0.5
  M1: 50.0
"""


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    cfg = write(tmp, SMALL)
    assert main(["run", "--config", cfg, "--out", str(tmp / "a")]) == 0
    return tmp, cfg


def test_run_writes_artifacts(small_run):
    tmp, _ = small_run
    out = tmp / "a"
    for name in ("trajectory.csv", "functionals.csv", "boundary.csv", "manifest.json",
                 "diagnostics.csv", "plot_energy.gp"):
        assert (out / name).is_file(), name
    with open(out / "trajectory.csv") as fh:
        assert next(csv.reader(fh)) == ["tau", "x", "rho", "u", "r"]
    with open(out / "boundary.csv") as fh:
        assert next(csv.reader(fh)) == ["tau", "a", "u_boundary"]
    man = read_manifest(out)
    assert man["halted_reason"] == "horizon" and man["n_snapshots"] == 9
    assert man["config"]["grid"]["M"] == 64


def test_rerun_is_byte_identical(small_run):
    tmp, cfg = small_run
    assert main(["run", "--config", cfg, "--out", str(tmp / "b")]) == 0
    for name in ("trajectory.csv", "functionals.csv", "boundary.csv", "diagnostics.csv"):
        assert (tmp / "a" / name).read_bytes() == (tmp / "b" / name).read_bytes()
    ma, mb = read_manifest(tmp / "a"), read_manifest(tmp / "b")
    ma.pop("created"), mb.pop("created")
    assert ma == mb


def test_floats_roundtrip(small_run):
    tmp, cfg = small_run
    traj, _ = load_trajectory(tmp / "a")
    from freebound.cli import simulate
    orig, _ = simulate(parse_config(Path(cfg).read_text()))
    for s, t in zip(orig.snapshots, traj.snapshots):
        assert np.array_equal(s.rho, t.rho) and np.array_equal(s.u, t.u) and np.array_equal(s.r, t.r)
        assert s.tau == t.tau
    assert np.array_equal(orig.rate_integral, traj.rate_integral)


def test_verify_fresh_artifacts(small_run, capsys):
    tmp, _ = small_run
    assert main(["verify", str(tmp / "a")]) == 0
    rep = json.loads((tmp / "a" / "verification.json").read_text())
    assert rep["passed"] is True


def test_verify_detects_scaled_density(small_run, tmp_path):
    src = small_run[0] / "a"
    dst = tmp_path / "bad"
    dst.mkdir()
    for f in src.iterdir():
        (dst / f.name).write_bytes(f.read_bytes())
    rows = np.loadtxt(dst / "trajectory.csv", delimiter=",", skiprows=1)
    rows[:, 2] *= 1.1
    with open(dst / "trajectory.csv", "w") as fh:
        fh.write("tau,x,rho,u,r\n")
        np.savetxt(fh, rows, fmt="%.17g", delimiter=",")
    assert main(["verify", str(dst), "--out", str(tmp_path / "v.json")]) == 1
    rep = json.loads((tmp_path / "v.json").read_text())
    failed = {c["check_id"] for c in rep["checks"] if c["status"] == "fail"}
    assert "weak-form-momentum" in failed


def test_verify_empty_directory(tmp_path):
    assert main(["verify", str(tmp_path)]) == 2
    with pytest.raises(ArtifactError):
        load_trajectory(tmp_path)


def test_verify_corrupt_trajectory(small_run, tmp_path):
    src = small_run[0] / "a"
    for f in src.iterdir():
        (tmp_path / f.name).write_bytes(f.read_bytes())
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    (tmp_path / "trajectory.csv").write_text("\n".join(lines[:-3]) + "\n")
    assert main(["verify", str(tmp_path)]) == 2


def test_monitor_trip_exits_zero(tmp_path):
    cfg = write(tmp_path, TRIP)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    man = read_manifest(tmp_path / "o")
    assert man["halted_reason"] == "monitor-trip"
    assert man["final_tau"] < man["horizon"]


def test_config_errors_exit_two(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.replace("M: 64", "M: 8"))
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert f"{cfg}:10:" in capsys.readouterr().err


def test_converge_rejects_bad_grids(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    assert main(["converge", "--config", cfg, "--grids", "64", "--out", str(tmp_path)]) == 2
    assert main(["converge", "--config", cfg, "--grids", "32,32,64", "--out", str(tmp_path)]) == 2
    assert main(["converge", "--config", cfg, "--grids", "8,16,32", "--out", str(tmp_path)]) == 2


def test_converge_small(tmp_path):
    cfg = write(tmp_path, SMALL)
    code = main(["converge", "--config", cfg, "--grids", "32,64,128", "--out", str(tmp_path / "c"),
                 "--jobs", "2"])
    doc = json.loads((tmp_path / "c" / "converge.json").read_text())
    assert doc["grids"] == [32, 64, 128]
    assert "energy-identity-gradient" in doc["refinement_orders"]
    assert doc["refinement_orders"]["energy-identity-gradient"] > 1.5
    for M in (32, 64, 128):
        assert (tmp_path / "c" / f"M{M}" / "manifest.json").is_file()
    failed = [c for c in doc["checks"] if c["status"] == "fail"]
    assert code == (1 if failed else 0)


def read_sweep(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_sweep_theta(tmp_path):
    cfg = str(Path(__file__).resolve().parent.parent / "configs" / "sweep_theta.yaml")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = read_sweep(tmp_path / "sweep.csv")
    assert [float(r["theta"]) for r in rows] == [0.4, 0.6, 0.8, 1.0, 1.2]
    for r in rows:
        inadmissible = float(r["theta"]) <= 2 / 3
        assert r["admissible"] == ("false" if inadmissible else "true")
        if inadmissible:
            assert "theta>(N-1)/N" in r["violations"]
        assert float(r["T1a"]) > 0 and r["outcome"] == "not-run"


def test_sweep_sigma_beta_monotone(tmp_path):
    cfg = write(tmp_path, SMALL + "sweep:\n  values:\n    sigma: [0.2, 0.4, 0.5, 0.7]\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    beta = [float(r["beta"]) for r in read_sweep(tmp_path / "sweep.csv")]
    assert np.all(np.diff(beta) > 0)


def test_sweep_single_point_runs(tmp_path):
    cfg = write(tmp_path, SMALL + "sweep:\n  values:\n    theta: [1.0]\n  execute: true\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    (row,) = read_sweep(tmp_path / "sweep.csv")
    assert row["outcome"] == "horizon" and float(row["final_tau"]) > 0


def test_sweep_empty(tmp_path):
    cfg = write(tmp_path, SMALL)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_module_entry_point():
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-m", "freebound", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "converge" in out.stdout
