"""Command line: run, converge, verify and sweep.

Exit codes: 0 success, 1 a verification check failed, 2 configuration or
artifact error.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

from .artifacts import ArtifactError, json_dumps, load_trajectory, write_run
from .config import ConfigError, RunConfig, load_config
from .model import InitialData, ParameterError, make_initial_data, validate_params
from .report import FAIL, VerificationReport
from .solver import HorizonEstimate, Trajectory, horizon_estimates, run
from .verify import combine_reports, run_suite

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2
DEFAULT_GRIDS = (128, 256, 512)
SWEEP_COLUMNS = ("N", "gamma", "theta", "sigma", "beta", "m", "rho_star_lo", "rho_star_hi", "a0",
                 "admissible", "violations", "T1a", "T1b", "outcome", "final_tau")


def prepare(cfg: RunConfig) -> tuple[InitialData, HorizonEstimate]:
    data = make_initial_data(cfg.params, cfg.profile, M=cfg.M)
    mon = horizon_estimates(data, cfg.params, M0=cfg.M0, M1=cfg.M1, x0=cfg.x0)
    return data, mon


def simulate(cfg: RunConfig, horizon: float | None = None,
             stride: float | None = None) -> tuple[Trajectory, float]:
    """One run; horizon and stride default to the config's values."""
    data, mon = prepare(cfg)
    if horizon is None:
        horizon = cfg.horizon.resolve(mon.T1a, mon.T1b)
    if stride is None:
        stride = horizon / cfg.snapshots
    traj = run(data, cfg.params, horizon, monitors=mon, stride=stride, safety=cfg.safety,
               max_steps=cfg.max_steps)
    return traj, horizon


def failed(report: VerificationReport) -> bool:
    return any(c.status == FAIL for c in report.checks)


# ---------------------------------------------------------------- commands

def cmd_run(cfg: RunConfig, out: Path) -> int:
    traj, horizon = simulate(cfg)
    write_run(out, traj, cfg, horizon)
    print(f"run M={cfg.M} horizon={horizon:.6g} reached tau={traj.snapshots[-1].tau:.6g} "
          f"halted={traj.halted_reason} steps={traj.n_steps} -> {out}")
    return EXIT_OK


def _converge_member(cfg: RunConfig, horizon: float, out: Path) -> tuple[int, float, VerificationReport]:
    traj, _ = simulate(cfg, horizon, horizon / (cfg.M / 4))
    write_run(out, traj, cfg, horizon)
    return cfg.M, traj.grid.dx, run_suite(traj, cfg.region)


def shared_horizon(cfg: RunConfig, grids: Sequence[int]) -> float:
    """Horizon resolved against the estimates of the finest grid."""
    _, mon = prepare(cfg.with_grid(max(grids)))
    return cfg.horizon.resolve(mon.T1a, mon.T1b)


def cmd_converge(cfg: RunConfig, grids: Sequence[int], out: Path, jobs: int = 1) -> int:
    grids = list(grids)
    if len(grids) < 3:
        raise ConfigError(f"a refinement study needs at least three grids, got {grids}", None, cfg.source)
    if len(set(grids)) != len(grids):
        raise ConfigError(f"grid sizes must be distinct, got {grids}", None, cfg.source)
    for M in grids:
        if M < 16:
            raise ConfigError(f"grid sizes must be at least 16, got {M}", None, cfg.source)
    horizon = shared_horizon(cfg, grids)
    members = [(cfg.with_grid(M), horizon, out / f"M{M}") for M in grids]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_converge_member, *zip(*members)))
    else:
        results = [_converge_member(*m) for m in members]
    results.sort(key=lambda r: r[0])
    combined = combine_reports([r[0] for r in results], [r[1] for r in results],
                               [r[2] for r in results])
    doc = {"grids": [r[0] for r in results], "horizon": horizon, **combined.to_dict()}
    out.mkdir(parents=True, exist_ok=True)
    (out / "converge.json").write_text(json_dumps(doc))
    for cid, order in combined.refinement_orders.items():
        print(f"{cid:32s} order {order:.3f}")
    bad = [c.check_id for c in combined.checks if c.status == FAIL]
    print(f"{len(bad)} failing checks" + (": " + ", ".join(bad) if bad else ""))
    return EXIT_CHECK if bad else EXIT_OK


def cmd_verify(directory: Path, cfg: RunConfig | None, out: Path | None) -> int:
    traj, cfg = load_trajectory(directory, cfg)
    report = run_suite(traj, cfg.region)
    target = out if out is not None else directory / "verification.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json_dumps(report.to_dict()))
    for c in report.checks:
        print(f"{c.check_id:32s} {c.status:13s} {c.residual:.3e} / {c.tolerance:.3e}")
    return EXIT_CHECK if failed(report) else EXIT_OK


def sweep_points(cfg: RunConfig) -> list[dict[str, Any]]:
    names = sorted(cfg.sweep_values)
    return [dict(zip(names, combo)) for combo in itertools.product(*(cfg.sweep_values[n] for n in names))]


def sweep_row(cfg: RunConfig, point: dict[str, Any], execute: bool) -> dict[str, Any]:
    row: dict[str, Any] = {k: "" for k in SWEEP_COLUMNS}
    try:
        member = cfg.with_params(**point)
    except ParameterError as exc:
        row.update(point)
        row.update(admissible=False, violations=str(exc), outcome="invalid")
        return row
    p = member.params
    adm = validate_params(p)
    row.update(N=p.N, gamma=p.gamma, theta=p.theta, sigma=p.sigma, beta=p.beta, m=p.m,
               rho_star_lo=p.rho_star_lo, rho_star_hi=p.rho_star_hi, a0=p.a0,
               admissible=adm.admissible,
               violations=";".join(v.constraint for v in adm.violations))
    try:
        _, mon = prepare(member)
    except ValueError as exc:
        row["outcome"] = f"data-rejected: {exc}"
        return row
    row.update(T1a=mon.T1a, T1b=mon.T1b)
    if not execute:
        row["outcome"] = "not-run"
    elif not adm.admissible:
        row["outcome"] = "skipped-inadmissible"
    else:
        traj, _ = simulate(member)
        row.update(outcome=traj.halted_reason, final_tau=traj.snapshots[-1].tau)
    return row


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def cmd_sweep(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    points = sweep_points(cfg)
    if not cfg.sweep_values or not points:
        raise ConfigError("empty sweep: give sweep.values as a mapping of parameter lists",
                          None, cfg.source)
    args = [(cfg, pt, cfg.sweep_execute) for pt in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(sweep_row, *zip(*args)))
    else:
        rows = [sweep_row(*a) for a in args]
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS])
    n_ok = sum(1 for r in rows if r["admissible"] is True)
    print(f"sweep: {len(rows)} points, {n_ok} admissible -> {out / 'sweep.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def _grids(text: str) -> list[int]:
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid list must be integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freebound", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="integrate one configuration and write artifacts")
    p_conv = sub.add_parser("converge", help="refinement study over three or more grids")
    p_ver = sub.add_parser("verify", help="run the verification suite on stored artifacts")
    p_sw = sub.add_parser("sweep", help="admissibility and horizons over a parameter grid")
    for p in (p_run, p_conv, p_sw):
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=Path("out"))
    for p in (p_conv, p_sw):
        p.add_argument("--jobs", type=int, default=1)
    p_conv.add_argument("--grids", type=_grids, default=list(DEFAULT_GRIDS))
    p_ver.add_argument("directory", type=Path)
    p_ver.add_argument("--config", type=Path, default=None)
    p_ver.add_argument("--out", type=Path, default=None)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config is not None else None
        if args.command == "run":
            return cmd_run(cfg, args.out)
        if args.command == "converge":
            return cmd_converge(cfg, args.grids, args.out, max(1, args.jobs))
        if args.command == "verify":
            return cmd_verify(args.directory, cfg, args.out)
        return cmd_sweep(cfg, args.out, max(1, args.jobs))
    except (ConfigError, ArtifactError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # initial data rejected by the pinch or mass checks
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
