"""Time integration of the Lagrangian free-boundary system on a fixed mass grid."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .grid import LagrangianState, MassGrid
from .model import InitialData, Params

__all__ = [
    "HorizonEstimate", "LagrangianState", "StepRejected", "Trajectory", "cfl_dtau",
    "density_exponential_crosscheck", "horizon_estimates", "run", "semi_discrete_rhs",
    "snapshot_rate_integral", "step",
]

HALT_NONE = "none"
HALT_HORIZON = "horizon"
HALT_MONITOR = "monitor-trip"
HALT_UNDERFLOW = "dtau-underflow"
HALT_STEPS = "step-limit"

DEFAULT_SAFETY = 0.4
_CHUNK = 200_000


class StepRejected(RuntimeError):
    """A stage produced a non-positive density."""


class DegenerateState(ValueError):
    pass


@dataclass(frozen=True)
class HorizonEstimate:
    T1a: float
    T1b: float
    M0: float
    M1: float
    E0: float = float("nan")
    x0: float = 0.25

    def __post_init__(self) -> None:
        for name in ("T1a", "T1b", "M0", "M1"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def stress_cap(self) -> float:
        return 2.0 * self.M0

    @property
    def guaranteed(self) -> float:
        """Time up to which the density envelope is guaranteed."""
        return min(self.T1a, self.T1b)


@dataclass
class Trajectory:
    """Snapshots plus running diagnostics of one run.

    ``dissipation`` holds, per snapshot, the time integrals of the four
    dissipation rates: columns 0-1 form the first decomposition, 2-3 the
    second. ``rate_integral`` holds per snapshot and cell the time integral
    of the log-density rate rho (r^{N-1} u)_x, accumulated with the stage
    weights; None for trajectories read back from disk.
    """

    params: Params
    snapshots: list[LagrangianState]
    dissipation: np.ndarray
    rate_integral: np.ndarray
    monitor_log: np.ndarray
    halted_reason: str
    monitors: HorizonEstimate
    E0: float
    n_steps: int = 0
    rho0: np.ndarray = field(default=None, repr=False)
    dtau_limits: tuple[float, float] | None = None

    @property
    def grid(self) -> MassGrid:
        return self.snapshots[0].grid

    @property
    def times(self) -> np.ndarray:
        return np.array([s.tau for s in self.snapshots])

    @property
    def dissipation_gradient_pair(self) -> np.ndarray:
        return self.dissipation[:, 0] + self.dissipation[:, 1]

    @property
    def dissipation_divergence_pair(self) -> np.ndarray:
        return self.dissipation[:, 2] + self.dissipation[:, 3]

    @property
    def dtau_range(self) -> tuple[float, float]:
        if self.monitor_log.shape[0] == 0:
            if self.dtau_limits is not None:
                return self.dtau_limits
            return float("nan"), float("nan")
        dt = self.monitor_log[:, 3]
        return float(dt.min()), float(dt.max())

    @property
    def final(self) -> LagrangianState:
        return self.snapshots[-1]


def _node_widths(grid: MassGrid) -> np.ndarray:
    return grid.node_weights


def _check(state: LagrangianState) -> None:
    if np.any(~(state.rho > 0)):
        raise DegenerateState("non-positive cell density")


def semi_discrete_rhs(state: LagrangianState, p: Params):
    """Time derivatives (drho, du, dr, da) of the semi-discrete system."""
    _check(state)
    g = state.grid
    drho = np.empty(g.M)
    du = np.empty(g.M + 1)
    dr = np.empty(g.M + 1)
    K.rhs(state.rho, state.u, state.r, g.widths, _node_widths(g), p.N,
          float(p.gamma), float(p.theta), drho, du, dr)
    return drho, du, dr, float(dr[-1])


def step(state: LagrangianState, dtau: float, p: Params) -> LagrangianState:
    """One SSP two-stage step; raises StepRejected on a non-positive density."""
    _check(state)
    g = state.grid
    M = g.M
    bufs = [np.empty(M), np.empty(M + 1), np.empty(M + 1)] * 2
    ok = K.ssp_rk2(state.rho, state.u, state.r, g.widths, _node_widths(g), p.N,
                   float(p.gamma), float(p.theta), float(dtau), *bufs)
    if not ok:
        raise StepRejected(f"density turned non-positive with dtau={dtau:g}")
    rho, u, r = bufs[3], bufs[4], bufs[5]
    return LagrangianState(state.tau + dtau, rho, u, r, float(r[-1]), g)


def cfl_dtau(state: LagrangianState, p: Params, safety: float = DEFAULT_SAFETY) -> float:
    """safety * min over cells of the viscous and acoustic step limits.

    Viscous: h^2 / (theta rho^(theta+1) r^(2(N-1))). Acoustic, in mass
    coordinates: h / (sqrt(gamma) rho^((gamma+1)/2) r^(N-1)), with r the
    larger node radius of the cell.
    """
    g = state.grid
    return float(K.cfl(state.rho, state.r, g.widths, p.N, float(p.gamma),
                       float(p.theta), float(safety)))


def horizon_estimates(data: InitialData, p: Params, M0: float | None = None,
                      M1: float | None = None, x0: float = 0.25,
                      E0: float | None = None) -> HorizonEstimate:
    """Explicit existence horizons T1a = a0/M1 and T1b.

    M0 and M1 default to 4 max|rho0 r0^{N-1} u0_x| + 1 and
    4 max|u0| + sqrt(E0).
    """
    from .functionals import energy

    if E0 is None:
        E0 = energy(data.state(), p)
    g = data.grid
    if M0 is None:
        rb = 0.5 * (data.r0[:-1] + data.r0[1:])
        stress = np.abs(data.rho0 * rb ** (p.N - 1) * np.diff(data.u0) / g.widths)
        M0 = 4.0 * float(stress.max()) + 1.0
    if M1 is None:
        M1 = 4.0 * float(np.abs(data.u0).max()) + math.sqrt(E0)
    if not (M0 > 0 and M1 > 0):
        raise ValueError("monitor bounds must be positive")
    T1a = data.a0 / M1
    k = p.N * (p.gamma - 1.0)
    rate = 2.0 * M1 * E0 ** (1.0 / k) * x0 ** (-p.gamma / k) + 2.0 * M0
    T1b = min(T1a, math.log(2.0) / rate)
    return HorizonEstimate(T1a, T1b, float(M0), float(M1), float(E0), x0)


def run(data: InitialData, p: Params, horizon: float, monitors: HorizonEstimate | None = None,
        stride: float | None = None, safety: float = DEFAULT_SAFETY,
        dtau: float | None = None, x0: float | None = None,
        max_steps: int = 50_000_000) -> Trajectory:
    """Integrate from the initial data up to ``horizon`` or a monitor trip.

    ``stride`` is the time between stored snapshots (default horizon/64);
    steps are shortened to land on snapshot times. ``dtau`` fixes the step,
    otherwise the CFL step with ``safety`` is used.
    """
    from .functionals import energy

    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    state = data.state()
    E0 = energy(state, p)
    if monitors is None:
        monitors = horizon_estimates(data, p, x0=0.25 if x0 is None else x0, E0=E0)
    x0 = monitors.x0 if x0 is None else x0
    g = data.grid
    h, m = g.widths, _node_widths(g)
    rho, u, r = state.rho.copy(), state.u.copy(), state.r.copy()
    M = g.M

    snaps = [state]
    diss_rows = [np.zeros(4)]
    rate_rows = [np.zeros(M)]
    logs: list[np.ndarray] = []
    diss = np.zeros(4)
    rate_int = np.zeros(M)
    halted = HALT_HORIZON if horizon > 0 else HALT_NONE
    t = 0.0
    total = 0
    if horizon > 0:
        stride = horizon / 64 if stride is None else stride
        if stride <= 0:
            raise ValueError("stride must be positive")
        n_out = max(1, int(math.ceil(horizon / stride - 1e-9)))
        targets = [min(horizon, (k + 1) * stride) for k in range(n_out)]
        targets[-1] = horizon
        buf = [np.empty(_CHUNK) for _ in range(4)]
        dt_fixed = -1.0 if dtau is None else float(dtau)
        done = False
        for target in targets:
            while True:
                t, steps, status = K.advance(
                    rho, u, r, h, m, g.cells, g.nodes, p.N, float(p.gamma), float(p.theta),
                    t, target, min(_CHUNK, max_steps - total), float(safety), dt_fixed,
                    float(x0), monitors.stress_cap, monitors.M1, diss, rate_int, *buf)
                logs.append(np.column_stack([b[:steps].copy() for b in buf]))
                total += steps
                if status == K.STRIDE and total < max_steps:
                    continue
                break
            if status != K.STRIDE or t >= target:
                snaps.append(LagrangianState(t, rho.copy(), u.copy(), r.copy(), float(r[-1]), g))
                diss_rows.append(diss.copy())
                rate_rows.append(rate_int.copy())
            if status == K.MONITOR_TRIP:
                halted, done = HALT_MONITOR, True
            elif status == K.UNDERFLOW:
                halted, done = HALT_UNDERFLOW, True
            elif status == K.STRIDE:
                halted, done = HALT_STEPS, True
            if done:
                break
    log = np.concatenate(logs) if logs else np.empty((0, 4))
    return Trajectory(p, snaps, np.array(diss_rows), np.array(rate_rows), log, halted,
                      monitors, float(E0), total, data.rho0.copy())


def density_exponential_crosscheck(traj: Trajectory, p: Params) -> float:
    """Max relative gap between rho and rho0 exp(-integral of the log rate)."""
    if len(traj.snapshots) < 2:
        raise ValueError("need at least two snapshots for the time quadrature")
    rho0 = traj.snapshots[0].rho
    rates = traj.rate_integral
    if rates is None:
        rates = snapshot_rate_integral(traj)
    worst = 0.0
    for snap, integral in zip(traj.snapshots[1:], rates[1:]):
        predicted = rho0 * np.exp(-integral)
        worst = max(worst, float(np.max(np.abs(predicted - snap.rho) / snap.rho)))
    return worst


def snapshot_rate_integral(traj: Trajectory) -> np.ndarray:
    """Trapezoid-in-time log-density rate integral over the stored snapshots."""
    p = traj.params
    q = []
    for s in traj.snapshots:
        out = np.empty(s.grid.M)
        K.log_rate(s.rho, s.u, s.r, s.grid.widths, p.N, out)
        q.append(out)
    q = np.array(q)
    dt = np.diff(traj.times)[:, None]
    return np.vstack([np.zeros(q.shape[1]), np.cumsum(0.5 * dt * (q[1:] + q[:-1]), axis=0)])
