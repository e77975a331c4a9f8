"""Run artifacts: CSV series, the run manifest and gnuplot scripts.

Trajectory CSV rows are one per node and snapshot; the ``rho`` column holds
the density of the cell to the right of the node, 0 at the boundary node.
The diagnostics CSV keeps the per-cell time integral of the log-density
rate as accumulated by the integrator.
Floats are printed with 17 significant digits so that files read back
bit-exactly. Only the manifest carries a timestamp.
"""
from __future__ import annotations

import datetime as _dt
import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from .config import RunConfig, parse_config
from .functionals import functional_report
from .grid import LagrangianState, MassGrid
from .solver import HorizonEstimate, Trajectory

TRAJECTORY_CSV = "trajectory.csv"
FUNCTIONALS_CSV = "functionals.csv"
BOUNDARY_CSV = "boundary.csv"
DIAGNOSTICS_CSV = "diagnostics.csv"
MANIFEST_JSON = "manifest.json"
TRAJECTORY_COLUMNS = ("tau", "x", "rho", "u", "r")
BOUNDARY_COLUMNS = ("tau", "a", "u_boundary")
DIAGNOSTICS_COLUMNS = ("tau", "x_cell", "log_rate_integral")
DISSIPATION_COLUMNS = ("D_radial", "D_gradient", "D_divergence", "D_shear")
FLOAT_FMT = "%.17g"


class ArtifactError(RuntimeError):
    """Missing or corrupt run artifacts."""


def _write_csv(path: Path, columns: Sequence[str], table: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        if table.size:
            np.savetxt(fh, table, fmt=FLOAT_FMT, delimiter=",")


def _read_csv(path: Path, columns: Sequence[str] | None = None) -> tuple[list[str], np.ndarray]:
    if not path.is_file():
        raise ArtifactError(f"missing artifact {path}")
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            table = np.loadtxt(fh, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ArtifactError(f"corrupt artifact {path}: {exc}") from None
    if columns is not None and tuple(header[:len(columns)]) != tuple(columns):
        raise ArtifactError(f"{path}: expected columns {list(columns)}, got {header}")
    if table.size and table.shape[1] != len(header):
        raise ArtifactError(f"{path}: rows do not match the header")
    return header, table


def json_dumps(obj: Any) -> str:
    def clean(o):
        if isinstance(o, dict):
            return {str(k): clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, (np.floating, float)):
            v = float(o)
            return v if math.isfinite(v) else str(v)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.bool_):
            return bool(o)
        return o
    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------- tables

def trajectory_table(traj: Trajectory) -> np.ndarray:
    x = traj.grid.nodes
    blocks = []
    for s in traj.snapshots:
        blocks.append(np.column_stack([np.full(x.size, s.tau), x, np.append(s.rho, 0.0), s.u, s.r]))
    return np.vstack(blocks)


def functional_rows(traj: Trajectory, region=None) -> tuple[list[str], np.ndarray]:
    init = traj.snapshots[0]
    rows = [functional_report(s, traj.params, traj.E0, d, region, initial=init).as_row()
            for s, d in zip(traj.snapshots, traj.dissipation)]
    cols = list(rows[0])
    return cols, np.array([[row[c] for c in cols] for row in rows], dtype=float)


def boundary_table(traj: Trajectory) -> np.ndarray:
    return np.array([[s.tau, s.r[-1], s.u[-1]] for s in traj.snapshots])


def diagnostics_table(traj: Trajectory) -> np.ndarray:
    xc = traj.grid.cells
    return np.vstack([np.column_stack([np.full(xc.size, s.tau), xc, q])
                      for s, q in zip(traj.snapshots, traj.rate_integral)])


# ---------------------------------------------------------------- writing

def write_run(out: str | Path, traj: Trajectory, cfg: RunConfig, horizon: float) -> list[Path]:
    """Write trajectory, functional and boundary CSVs plus the manifest."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / TRAJECTORY_CSV, TRAJECTORY_COLUMNS, trajectory_table(traj))
    cols, tab = functional_rows(traj, cfg.region)
    _write_csv(out / FUNCTIONALS_CSV, cols, tab)
    _write_csv(out / BOUNDARY_CSV, BOUNDARY_COLUMNS, boundary_table(traj))
    files = [out / TRAJECTORY_CSV, out / FUNCTIONALS_CSV, out / BOUNDARY_CSV]
    if traj.rate_integral is not None:
        _write_csv(out / DIAGNOSTICS_CSV, DIAGNOSTICS_COLUMNS, diagnostics_table(traj))
        files.append(out / DIAGNOSTICS_CSV)
    if "gnuplot" in cfg.formats:
        files += write_plot_scripts(out)
    mon = traj.monitors
    dmin, dmax = traj.dtau_range
    manifest = {
        "config": cfg.echo(),
        "halted_reason": traj.halted_reason,
        "horizon": horizon,
        "final_tau": traj.snapshots[-1].tau,
        "n_snapshots": len(traj.snapshots),
        "n_steps": traj.n_steps,
        "M": traj.grid.M,
        "E0": traj.E0,
        "monitors": {"T1a": mon.T1a, "T1b": mon.T1b, "M0": mon.M0, "M1": mon.M1,
                     "E0": mon.E0, "x0": mon.x0},
        "dtau_min": dmin,
        "dtau_max": dmax,
        "files": [f.name for f in files],
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    (out / MANIFEST_JSON).write_text(json_dumps(manifest))
    return files + [out / MANIFEST_JSON]


_PLOTS = {
    "plot_energy.gp": """\
# energy and energy + dissipation against time
set datafile separator ','
set key autotitle columnhead
set xlabel 'tau'
plot 'functionals.csv' using 'tau':'E' with lines, \\
     '' using 'tau':(column('E') + column('D_radial') + column('D_gradient')) with lines title 'E + D'
pause -1
""",
    "plot_boundary.gp": """\
# free-boundary radius and boundary velocity
set datafile separator ','
set key autotitle columnhead
set xlabel 'tau'
plot 'boundary.csv' using 'tau':'a' with lines, '' using 'tau':'u_boundary' with lines axes x1y2
pause -1
""",
    "plot_density.gp": """\
# density against the mass coordinate, all snapshots
set datafile separator ','
set xlabel 'x'
set ylabel 'rho'
plot 'trajectory.csv' using 'x':'rho' with dots notitle
pause -1
""",
}


def write_plot_scripts(out: str | Path) -> list[Path]:
    out = Path(out)
    paths = []
    for name, text in _PLOTS.items():
        (out / name).write_text(text)
        paths.append(out / name)
    return paths


# ---------------------------------------------------------------- reading

def read_manifest(directory: str | Path) -> dict[str, Any]:
    path = Path(directory) / MANIFEST_JSON
    if not path.is_file():
        raise ArtifactError(f"missing artifact {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"corrupt artifact {path}: {exc}") from None


def load_trajectory(directory: str | Path, cfg: RunConfig | None = None) -> tuple[Trajectory, RunConfig]:
    """Rebuild a Trajectory from run artifacts.

    The per-step log is not stored. Without the diagnostics file the
    density cross-check integrates over snapshots.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ArtifactError(f"no such directory {directory}")
    manifest = read_manifest(directory)
    if cfg is None:
        try:
            cfg = parse_config(yaml.safe_dump(manifest["config"]), str(directory / MANIFEST_JSON))
        except (KeyError, ValueError) as exc:
            raise ArtifactError(f"manifest config unreadable: {exc}") from None
    _, tab = _read_csv(directory / TRAJECTORY_CSV, TRAJECTORY_COLUMNS)
    fcols, ftab = _read_csv(directory / FUNCTIONALS_CSV)
    try:
        M = int(manifest["M"])
        mon = HorizonEstimate(**{k: float(v) for k, v in manifest["monitors"].items()})
        E0 = float(manifest["E0"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"manifest incomplete: {exc}") from None
    if tab.shape[0] == 0 or tab.shape[0] % (M + 1):
        raise ArtifactError(f"trajectory rows are not a multiple of M + 1 = {M + 1}")
    blocks = tab.reshape(-1, M + 1, 5)
    grid = MassGrid(blocks[0, :, 1].copy())
    snaps = []
    for b in blocks:
        if np.any(b[:, 1] != grid.nodes):
            raise ArtifactError("mass grid changes between snapshots")
        if np.any(~np.isfinite(b)):
            raise ArtifactError("non-finite values in the trajectory")
        snaps.append(LagrangianState(float(b[0, 0]), b[:-1, 2].copy(), b[:, 3].copy(),
                                     b[:, 4].copy(), float(b[-1, 4]), grid))
    try:
        idx = [fcols.index(c) for c in DISSIPATION_COLUMNS]
    except ValueError:
        raise ArtifactError(f"functionals.csv lacks the columns {list(DISSIPATION_COLUMNS)}") from None
    if ftab.shape[0] != len(snaps):
        raise ArtifactError("functionals.csv and trajectory.csv disagree on the snapshot count")
    dmin, dmax = manifest.get("dtau_min"), manifest.get("dtau_max")
    limits = None
    if isinstance(dmin, (int, float)) and isinstance(dmax, (int, float)):
        limits = (float(dmin), float(dmax))
    rates = None
    if (directory / DIAGNOSTICS_CSV).is_file():
        _, dtab = _read_csv(directory / DIAGNOSTICS_CSV, DIAGNOSTICS_COLUMNS)
        if dtab.shape[0] != len(snaps) * M:
            raise ArtifactError("diagnostics.csv does not match the trajectory")
        rates = dtab[:, 2].reshape(len(snaps), M).copy()
    traj = Trajectory(cfg.params, snaps, ftab[:, idx].copy(), rates, np.empty((0, 4)),
                      str(manifest.get("halted_reason", "")), mon, E0,
                      int(manifest.get("n_steps", 0)), snaps[0].rho.copy(), limits)
    return traj, cfg
