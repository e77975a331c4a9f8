"""Executable checks over trajectories: identities, bounds, weak forms, uniqueness."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .coords import vacuum_slope
from .functionals import (
    bd_effective_velocity, bd_entropy, bd_pressure_force, bound_margins, energy,
    velocity_moments,
)
from .grid import LagrangianState, RegionSpec, quintic_step
from .model import Params, lambda0_interval, default_lambda0
from .report import FAIL, INCONCLUSIVE, PASS, CheckResult, VerificationReport
from .solver import Trajectory, density_exponential_crosscheck, semi_discrete_rhs

C_SPACE = 10.0
C_TIME = 10.0
SLOPE_TOL = 0.05
LOG_CONVEX_SLACK = 1e-12


def scheme_tolerance(dx: float, dtau: float, c1: float = C_SPACE, c2: float = C_TIME) -> float:
    return c1 * dx**2 + c2 * dtau**2


def refinement_order(h: Sequence[float], residual: Sequence[float]) -> float:
    """Least-squares slope of log(residual) against log(h)."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(residual, dtype=float)
    if h.size < 2 or np.unique(h).size != h.size:
        raise ValueError("need distinct grid spacings")
    if np.any(~(e > 0)):
        return float("nan")
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


def _snapshot_step(traj: Trajectory) -> float:
    t = traj.times
    return float(np.max(np.diff(t))) if t.size > 1 else 0.0


# ---------------------------------------------------------------- identities

def energy_residuals(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    p = traj.params
    E = np.array([energy(s, p) for s in traj.snapshots])
    return (np.abs(E + traj.dissipation_gradient_pair - traj.E0),
            np.abs(E + traj.dissipation_divergence_pair - traj.E0))


def check_energy_identity(traj: Trajectory, tol: float | None = None) -> list[CheckResult]:
    """Both energy-dissipation balances and their mutual consistency."""
    r10, r11 = energy_residuals(traj)
    dt_max = traj.dtau_range[1]
    if tol is None:
        tol = scheme_tolerance(traj.grid.dx, 0.0 if math.isnan(dt_max) else dt_max)
    gap = float(np.max(np.abs(traj.dissipation_gradient_pair - traj.dissipation_divergence_pair)))
    bound = float(np.max(r10 + r11))
    return [
        CheckResult.compare("energy-identity-gradient", float(r10.max()), tol,
                            "energy balance, radial + gradient dissipation"),
        CheckResult.compare("energy-identity-divergence", float(r11.max()), tol,
                            "energy balance, divergence + shear dissipation"),
        CheckResult.compare("dissipation-consistency", gap, bound + 1e-14 * traj.E0,
                            "two dissipation decompositions agree", bound=bound),
    ]


def check_density_crosscheck(traj: Trajectory, tol: float | None = None) -> CheckResult:
    # without stage-weighted integrals the quadrature runs over snapshots
    dt_max = traj.dtau_range[1] if traj.rate_integral is not None else _snapshot_step(traj)
    tol = scheme_tolerance(0.0, dt_max) if tol is None else tol
    if len(traj.snapshots) < 2:
        return CheckResult("density-exponential", INCONCLUSIVE, float("nan"), tol,
                           "density as exponential of the log rate", {"reason": "one snapshot"})
    return CheckResult.compare("density-exponential", density_exponential_crosscheck(traj, traj.params),
                               tol, "density as exponential of the log rate")


def check_mass(traj: Trajectory, tol_lagrangian: float = 1e-14) -> list[CheckResult]:
    from .coords import eulerian_mass
    p = traj.params
    lag = max(abs(float(np.sum(s.grid.widths)) - 1.0) for s in traj.snapshots)
    eul = np.array([abs(eulerian_mass(s, p) - 1.0) for s in traj.snapshots])
    return [
        CheckResult.compare("mass-lagrangian", lag, tol_lagrangian, "mass conservation"),
        CheckResult.compare("mass-eulerian", float(eul.max()),
                            scheme_tolerance(traj.grid.dx, 0.0), "mass conservation"),
    ]


# ---------------------------------------------------------------- bounds

def check_radius_bounds(traj: Trajectory, slack: float = 1.0) -> list[CheckResult]:
    """Radius, separation and boundary-radius bounds at every snapshot.

    Violations beyond the guaranteed horizon are reported as inconclusive.
    """
    p, horizon = traj.params, traj.monitors.T1a
    a0 = float(traj.snapshots[0].r[-1])
    worst = {"radius": math.inf, "separation": math.inf, "a-lower": math.inf, "a-upper": math.inf}
    late = dict.fromkeys(worst, False)
    violations = 0
    for s in traj.snapshots:
        m = bound_margins(s, p, traj.E0, a0=a0, slack=slack)
        violations += m.radius_violations
        for key, val in (("radius", m.radius), ("separation", m.separation),
                         ("a-lower", m.a_lower), ("a-upper", m.a_upper)):
            if val < worst[key]:
                worst[key] = val
            if val < 0 and s.tau > horizon:
                late[key] = True
    out = []
    for key, val in worst.items():
        res = CheckResult.compare(f"bound-{key}", max(-val, 0.0), 0.0, "a-priori radius bounds",
                                  min_margin=val, node_violations=violations)
        if not res.passed and late[key]:
            res.status = INCONCLUSIVE
        out.append(res)
    return out


def check_envelopes(traj: Trajectory, p: Params | None = None) -> CheckResult:
    """Density ratio in [1/2, 2] and the Eulerian power-law envelope.

    Snapshots after min(T1a, T1b) only count as inconclusive when they fail.
    """
    from .coords import _Reconstruction

    p = traj.params if p is None else p
    rho0 = traj.snapshots[0].rho
    horizon = traj.monitors.guaranteed
    worst_in, worst_out = 0.0, 0.0
    ratio_lo, ratio_hi, env_lo, env_hi = math.inf, 0.0, math.inf, 0.0
    for s in traj.snapshots:
        ratio = s.rho / rho0
        phi = _Reconstruction(s, p.N, p.sigma).phi
        e_lo, e_hi = phi.min() / p.rho_minus, phi.max() / p.rho_plus
        excess = max(0.5 - ratio.min(), ratio.max() - 2.0, 1.0 - e_lo, e_hi - 1.0, 0.0)
        if s.tau <= horizon * (1 + 1e-12):
            worst_in = max(worst_in, excess)
            ratio_lo, ratio_hi = min(ratio_lo, ratio.min()), max(ratio_hi, ratio.max())
            env_lo, env_hi = min(env_lo, e_lo), max(env_hi, e_hi)
        else:
            worst_out = max(worst_out, excess)
    res = CheckResult.compare("density-envelope", worst_in, 0.0, "density envelopes",
                              ratio_min=ratio_lo, ratio_max=ratio_hi, envelope_min=env_lo,
                              envelope_max=env_hi, horizon=horizon,
                              excess_after_horizon=worst_out)
    if res.passed and worst_out > 0:
        res.status = INCONCLUSIVE
        res.detail["reason"] = "fail-after-horizon"
    return res


def check_vacuum_rate(traj: Trajectory, tol: float = SLOPE_TOL) -> CheckResult:
    """Fitted edge slopes against sigma (in r) and beta (in x).

    Like the envelopes, failures after min(T1a, T1b) are inconclusive.
    """
    p = traj.params
    horizon = traj.monitors.guaranteed
    dev_in, dev_out, lag_in = 0.0, 0.0, 0.0
    for s in traj.snapshots:
        dev = abs(vacuum_slope(s, p) - p.sigma)
        if s.tau <= horizon * (1 + 1e-12):
            dev_in = max(dev_in, dev)
            lag_in = max(lag_in, abs(vacuum_slope(s, p, lagrangian=True) - p.beta))
        else:
            dev_out = max(dev_out, dev)
    res = CheckResult.compare("vacuum-rate", dev_in, tol, "power-law vacuum profile",
                              lagrangian_deviation=lag_in, horizon=horizon,
                              deviation_after_horizon=dev_out)
    if res.passed and dev_out > tol:
        res.status = INCONCLUSIVE
        res.detail["reason"] = "fail-after-horizon"
    return res


# ---------------------------------------------------------------- weak form

def _bump(s: np.ndarray, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Value and derivative of a C^2 bump supported on [0, 1]."""
    inside = (s > 0) & (s < 1)
    sc = np.where(inside, s, 0.0)
    if kind == "polynomial-bump":
        v = 64.0 * sc**3 * (1 - sc) ** 3
        d = 192.0 * sc**2 * (1 - sc) ** 2 * (1 - 2 * sc)
    else:
        v = np.sin(np.pi * sc) ** 4
        d = 4.0 * np.pi * np.sin(np.pi * sc) ** 3 * np.cos(np.pi * sc)
    return np.where(inside, v, 0.0), np.where(inside, d, 0.0)


_DEFAULT_SUPPORTS = ((0.05, 0.35), (0.2, 0.5), (0.35, 0.65), (0.5, 0.8), (0.65, 0.95), (0.1, 0.9))


@dataclass(frozen=True)
class TestFunctionFamily:
    """Separable space-time test functions b((r - lo)/(hi - lo)) * T(t/t_end).

    ``supports`` are radius intervals; T(s) = 1 - quintic_step(s), so every
    member vanishes at the final time and near r = 0 and r = a(t).
    """

    kind: str = "polynomial-bump"
    supports: tuple[tuple[float, float], ...] = ()

    __test__ = False

    def __post_init__(self) -> None:
        if self.kind not in ("polynomial-bump", "trigonometric"):
            raise ValueError(f"unknown test-function kind {self.kind!r}")
        for lo, hi in self.supports:
            if not 0.0 < lo < hi:
                raise ValueError(f"bad support ({lo}, {hi})")

    @property
    def count(self) -> int:
        return len(self.supports)

    @classmethod
    def default(cls, traj: Trajectory, kind: str = "polynomial-bump") -> "TestFunctionFamily":
        a_min = min(float(s.r[-1]) for s in traj.snapshots)
        return cls(kind, tuple((lo * a_min, hi * a_min) for lo, hi in _DEFAULT_SUPPORTS))

    def evaluate(self, k: int, r: np.ndarray, t: float, t_end: float):
        """(psi, psi_r, psi_t) of member k."""
        lo, hi = self.supports[k]
        b, db = _bump((r - lo) / (hi - lo), self.kind)
        s = t / t_end
        T = 1.0 - float(quintic_step(s))
        dT = -30.0 * s**2 * (1 - s) ** 2 / t_end if 0 <= s <= 1 else 0.0
        return b * T, db * T / (hi - lo), b * dT


def _cell_fields(s: LagrangianState, p: Params):
    N = p.N
    w = s.r**N
    dV = np.diff(w) / N
    mw = s.rho * dV                       # cell masses via cell volumes
    rc = (0.5 * (w[:-1] + w[1:])) ** (1.0 / N)
    ub = 0.5 * (s.u[:-1] + s.u[1:])
    h = s.grid.widths
    ux = np.diff(s.u) / h
    div = np.diff(s.r ** (N - 1) * s.u) / h
    return mw, rc, ub, ux, div


def weak_form_terms(traj: Trajectory, fam: TestFunctionFamily, k: int):
    """Residuals of the mass and momentum weak forms for member k."""
    p = traj.params
    times = traj.times
    t_end = float(times[-1])
    th, g, N = p.theta, p.gamma, p.N
    mass_rate, mom = [], []
    for s in traj.snapshots:
        mw, rc, ub, ux, div = _cell_fields(s, p)
        psi, psi_r, psi_t = fam.evaluate(k, rc, s.tau, t_end)
        rb_n1 = rc ** (N - 1)
        # mass: integrand (phi_t + u phi_r) per unit mass
        mass_rate.append(np.sum(mw * (psi_t + ub * psi_r)))
        div_psi = psi_r + (N - 1) * psi / rc
        rho = s.rho
        terms = (
            rho ** (g - 1) * div_psi
            - (th - 1) * rho**th * div * div_psi
            - (rho**th * rb_n1 * ux * psi_r + (N - 1) * rho ** (th - 1) * ub * psi / rc**2)
            + ub * psi_t + ub**2 * psi_r
        )
        mom.append(np.sum(mw * terms))
    mass_rate, mom = np.array(mass_rate), np.array(mom)
    first, last = traj.snapshots[0], traj.snapshots[-1]

    def mass_integral(s):
        mw, rc, *_ = _cell_fields(s, p)
        return float(np.sum(mw * fam.evaluate(k, rc, s.tau, t_end)[0]))

    mass_res = mass_integral(last) - mass_integral(first) - trapezoid(mass_rate, times)
    mw0, rc0, ub0, *_ = _cell_fields(first, p)
    data = float(np.sum(mw0 * ub0 * fam.evaluate(k, rc0, 0.0, t_end)[0]))
    mom_res = data + trapezoid(mom, times)
    return float(mass_res), float(mom_res)


def constant_mass_form(traj: Trajectory) -> tuple[float, float]:
    """(residual of the mass form for phi = 1, mass(t_end) - mass(0)) on the same quadrature."""
    p = traj.params
    m0 = float(np.sum(_cell_fields(traj.snapshots[0], p)[0]))
    m1 = float(np.sum(_cell_fields(traj.snapshots[-1], p)[0]))
    # phi_t = phi_r = 0, so the space-time integral vanishes
    return m1 - m0 - 0.0, m1 - m0


def check_weak_form(traj: Trajectory, fam: TestFunctionFamily | None = None,
                    p: Params | None = None, tol: float | None = None) -> list[CheckResult]:
    if len(traj.snapshots) < 2:
        raise ValueError("weak-form residuals need at least two snapshots")
    fam = TestFunctionFamily.default(traj) if fam is None else fam
    a_min = min(float(s.r[-1]) for s in traj.snapshots)
    for lo, hi in fam.supports:
        if hi >= a_min:
            raise ValueError(f"test-function support ({lo}, {hi}) leaves the domain (min a = {a_min})")
    res = [weak_form_terms(traj, fam, k) for k in range(fam.count)]
    mass_max = max(abs(r[0]) for r in res)
    mom_max = max(abs(r[1]) for r in res)
    if tol is None:
        tol = scheme_tolerance(traj.grid.dx, _snapshot_step(traj))
    const, defect = constant_mass_form(traj)
    return [
        CheckResult.compare("weak-form-mass", mass_max, tol, "weak mass equation",
                            members=[r[0] for r in res]),
        CheckResult.compare("weak-form-momentum", mom_max, tol, "weak momentum equation",
                            members=[r[1] for r in res]),
        CheckResult.compare("weak-form-constant", abs(const - defect), 0.0,
                            "weak mass equation with constant test function",
                            residual_value=const, mass_defect=defect),
    ]


# ---------------------------------------------------------------- BD relation

def bd_residual(traj: Trajectory, region: RegionSpec | None = None) -> float:
    """Max over [x0, x1] and snapshot intervals of the time-averaged BD defect.

    For consecutive snapshots: (v(t2) - v(t1))/(t2 - t1) + trapezoid mean of
    r^(N-1)(rho^gamma)_x, scaled by the largest forcing. The centre is left
    out: power-law data have a cusp at r = 0.
    """
    region = region or RegionSpec()
    p = traj.params
    x = traj.grid.nodes
    sel = (x >= region.x0) & (x <= region.x1)
    v = [bd_effective_velocity(s, p)[sel] for s in traj.snapshots]
    f = [bd_pressure_force(s, p)[sel] for s in traj.snapshots]
    scale = max(float(np.max(np.abs(x))) for x in f)
    worst = 0.0
    t = traj.times
    for k in range(len(v) - 1):
        dt = t[k + 1] - t[k]
        d = (v[k + 1] - v[k]) / dt + 0.5 * (f[k] + f[k + 1])
        worst = max(worst, float(np.max(np.abs(d))))
    return worst / scale


def check_bd(traj: Trajectory, region: RegionSpec | None = None,
             tol: float | None = None) -> list[CheckResult]:
    region = region or RegionSpec()
    p = traj.params
    if tol is None:
        tol = scheme_tolerance(traj.grid.dx, _snapshot_step(traj))
    res = bd_residual(traj, region) if len(traj.snapshots) > 1 else 0.0
    values = [bd_entropy(s, region, p, initial=traj.snapshots[0]) for s in traj.snapshots]
    peak = max(v.value for v in values)
    return [
        CheckResult.compare("bd-velocity", res, tol, "effective velocity transport"),
        CheckResult.compare("bd-entropy-bounded", peak if math.isfinite(peak) else math.inf,
                            math.inf if math.isfinite(peak) else 0.0, "cutoff BD entropy",
                            peak=peak, budget=values[0].budget),
    ]


# ---------------------------------------------------------------- moments

def moment_table(traj: Trajectory, region: RegionSpec | None = None) -> np.ndarray:
    region = region or RegionSpec()
    p = traj.params
    ks = range(1, 2 * int(p.m) + 1)
    return np.array([[velocity_moments(s, region, p, k) for k in ks] for s in traj.snapshots])


def check_moments(traj: Trajectory, region: RegionSpec | None = None,
                  slack: float = LOG_CONVEX_SLACK, cap: float = 1e6) -> list[CheckResult]:
    """Moments bounded, and (I_k)^2 <= I_{k-1} I_{k+1} on every snapshot."""
    tab = moment_table(traj, region)
    worst = 0.0
    for row in tab:
        for k in range(1, row.size - 1):
            lhs, rhs = row[k] ** 2, row[k - 1] * row[k + 1]
            worst = max(worst, (lhs - rhs) / max(rhs, 1e-300) if lhs > rhs else 0.0)
    peak = float(tab.max()) if tab.size else 0.0
    return [
        CheckResult.compare("moments-bounded", peak, cap, "velocity moments near the boundary",
                            peaks=list(tab.max(axis=0))),
        CheckResult.compare("moments-log-convex", worst, slack, "Cauchy-Schwarz for moments"),
    ]


# ---------------------------------------------------------------- uniqueness

@dataclass
class SeparationFunctional:
    tau: np.ndarray
    omega2: np.ndarray
    R2w: np.ndarray
    rho2w: np.ndarray

    @property
    def G(self) -> np.ndarray:
        return self.omega2 + self.R2w + self.rho2w


def separation(s1: LagrangianState, s2: LagrangianState, p: Params,
               x_cut: float = 0.9) -> tuple[float, float, float]:
    """(integral of omega^2, of rho1^(theta-1) R^2, of rho1^(theta-3) varrho^2 on [0, x_cut])."""
    w = s1.grid.node_weights
    h = s1.grid.widths
    omega = s1.u - s2.u
    R = np.zeros_like(s1.r)
    R[1:] = s1.r[1:] / s2.r[1:] - 1.0
    R2 = 0.5 * (R[:-1] ** 2 + R[1:] ** 2)
    vr = s1.rho - s2.rho
    inner = s1.grid.cells <= x_cut
    return (float(np.sum(w * omega**2)),
            float(np.sum(h * s1.rho ** (p.theta - 1) * R2)),
            float(np.sum((h * s1.rho ** (p.theta - 3) * vr**2)[inner])))


def uniqueness_contraction(traj1: Trajectory, traj2: Trajectory, x_cut: float = 0.9,
                           p: Params | None = None, floor: float = 0.0):
    """Separation functional over common snapshots and its Gronwall rate.

    C is the smallest rate with G(t) <= G(0) exp(C t) + floor at every
    snapshot. Returns (SeparationFunctional, C, CheckResult).
    """
    p = traj1.params if p is None else p
    if traj1.grid.M != traj2.grid.M or np.any(traj1.grid.nodes != traj2.grid.nodes):
        raise ValueError("trajectories are on different mass grids")
    n = min(len(traj1.snapshots), len(traj2.snapshots))
    t1, t2 = traj1.times[:n], traj2.times[:n]
    if np.any(t1 != t2):
        raise ValueError("trajectories have different snapshot times")
    parts = np.array([separation(a, b, p, x_cut) for a, b in zip(traj1.snapshots[:n],
                                                                 traj2.snapshots[:n])])
    sf = SeparationFunctional(t1, parts[:, 0], parts[:, 1], parts[:, 2])
    G = sf.G
    if G[0] == 0.0:
        C = 0.0 if np.all(G <= floor) else math.inf
    else:
        rates = [math.log(max(g - floor, 1e-300) / G[0]) / t for g, t in zip(G[1:], t1[1:])
                 if t > 0 and g > floor]
        C = max(rates) if rates else 0.0
    excess = float(np.max(G - (G[0] * np.exp(C * t1) + floor))) if math.isfinite(C) else math.inf
    res = CheckResult.compare("uniqueness-gronwall", max(excess, 0.0) if math.isfinite(C) else math.inf,
                              1e-12 * max(float(G.max()), 1e-300), "stability of the separation",
                              C=C, G0=float(G[0]), Gmax=float(G.max()))
    return sf, C, res


# ---------------------------------------------------------------- regularity

# caps on growth: peak / (1 + initial value)
DEFAULT_CAPS = {
    "energy": 10.0, "viscous_dissipation": 1e4, "interior_H1": 1e2, "interior_H2": 1e2,
    "interior_H3": 1e2, "boundary_energy": 1e2, "boundary_ux_lambda0": 1e2,
    "quartic_ratio": 1e2,
}


def _difference_norms(f: np.ndarray, pts: np.ndarray, order: int) -> list[float]:
    out, total = [], float(np.mean(f**2))
    for _ in range(order):
        f = np.diff(f) / np.diff(pts)
        pts = 0.5 * (pts[1:] + pts[:-1])
        total += float(np.mean(f**2))
        out.append(total)
    return out


def regularity_monitor(traj: Trajectory, region: RegionSpec | None = None,
                       p: Params | None = None, lambda0: float | None = None,
                       caps: dict[str, float] | None = None) -> dict[str, object]:
    """Peaks of discrete energy, interior and boundary norms over the snapshots.

    Caps apply to the growth peak / (1 + initial value): power-law data have
    a cusp at the centre, so their interior difference norms are large from
    the start and grow with resolution.
    """
    region = region or RegionSpec()
    p = traj.params if p is None else p
    lo, hi = lambda0_interval(p)
    lam = default_lambda0(p) if lambda0 is None else lambda0
    if not lo < lam < hi:
        raise ValueError(f"lambda0={lam} outside the admissible interval ({lo}, {hi})")
    caps = {**DEFAULT_CAPS, **(caps or {})}
    x, xc = traj.grid.nodes, traj.grid.cells
    h, w = traj.grid.widths, traj.grid.node_weights
    outer_c, inner_c, inner_n = xc >= region.x2, xc <= region.x1, x <= region.x1
    th = p.theta
    c = 1.0 - p.N * (1.0 - th)
    series: dict[str, list[float]] = {k: [] for k in caps}
    for s, diss in zip(traj.snapshots, traj.dissipation):
        ub = 0.5 * (s.u[:-1] + s.u[1:])
        ux = np.diff(s.u) / h
        series["energy"].append(float(np.sum(h * (s.rho ** (p.gamma - 1) + ub**2))))
        series["viscous_dissipation"].append(float((diss[0] + diss[1]) / c))
        rho_n = _difference_norms(s.rho[inner_c], xc[inner_c], 3)
        u_n = _difference_norms(s.u[inner_n], x[inner_n], 3)
        for j, key in enumerate(("interior_H1", "interior_H2", "interior_H3")):
            series[key].append(rho_n[j] + u_n[j])
        ut = semi_discrete_rhs(s, p)[1]
        ut_c = 0.5 * (ut[:-1] + ut[1:])
        rho = s.rho
        be = np.sum((h * (rho ** (th + 1) * ux**2 + rho ** (th - 1) * ub**2 + ut_c**2))[outer_c])
        series["boundary_energy"].append(float(be))
        series["boundary_ux_lambda0"].append(float(np.sum((h * np.abs(ux) ** lam)[outer_c])))
        quart = np.sum((h * rho ** (th + 3) * ux**4)[outer_c])
        series["quartic_ratio"].append(float(quart / (1.0 + be**2)))
    peaks = {k: max(v) for k, v in series.items()}
    growth = {k: max(v) / (1.0 + abs(v[0])) for k, v in series.items()}
    tripped = [k for k, v in growth.items() if not v <= caps[k]]
    return {"lambda0": lam, "peaks": peaks, "growth": growth, "caps": caps,
            "tripped": tripped, "series": {k: np.array(v) for k, v in series.items()}}


def check_regularity(traj: Trajectory, region: RegionSpec | None = None,
                     lambda0: float | None = None) -> CheckResult:
    mon = regularity_monitor(traj, region, lambda0=lambda0)
    worst = max(mon["growth"][k] / mon["caps"][k] for k in mon["growth"])
    return CheckResult.compare("regularity-monitors", worst, 1.0, "regularity monitors",
                               tripped=mon["tripped"], **mon["peaks"])


# ---------------------------------------------------------------- suite

def run_suite(traj: Trajectory, region: RegionSpec | None = None,
              fam: TestFunctionFamily | None = None, slack: float = 1.0) -> VerificationReport:
    """Every single-trajectory check, horizon-aware."""
    region = region or RegionSpec()
    report = VerificationReport()
    for c in check_mass(traj):
        report.add(c)
    for c in check_energy_identity(traj):
        report.add(c)
    report.add(check_density_crosscheck(traj))
    for c in check_radius_bounds(traj, slack):
        report.add(c)
    report.add(check_envelopes(traj))
    report.add(check_vacuum_rate(traj))
    if len(traj.snapshots) > 1:
        for c in check_weak_form(traj, fam):
            report.add(c)
    for c in check_bd(traj, region):
        report.add(c)
    for c in check_moments(traj, region):
        report.add(c)
    report.add(check_regularity(traj, region))
    return report


REFINED_CHECKS = (
    "mass-eulerian", "energy-identity-gradient", "energy-identity-divergence",
    "weak-form-mass", "weak-form-momentum", "bd-velocity",
)


def combine_reports(Ms: Sequence[int], hs: Sequence[float],
                    reports: Sequence[VerificationReport]) -> VerificationReport:
    """Per-grid reports suffixed by ``@M=``, plus fitted orders of the refined checks."""
    if len(Ms) < 3:
        raise ValueError("a refinement study needs at least three grids")
    if len(set(Ms)) != len(Ms):
        raise ValueError("grid sizes must be distinct")
    combined = VerificationReport()
    for cid in REFINED_CHECKS:
        vals = [r[cid].residual for r in reports if cid in r]
        if len(vals) == len(Ms):
            combined.refinement_orders[cid] = refinement_order(hs, vals)
    for M, r in zip(Ms, reports):
        for c in r.checks:
            combined.add(CheckResult(f"{c.check_id}@M={M}", c.status, c.residual, c.tolerance,
                                     c.anchor, c.detail))
    return combined


def refinement_study(trajs: Sequence[Trajectory], reports: Sequence[VerificationReport] | None = None,
                     region: RegionSpec | None = None) -> VerificationReport:
    """Combine per-grid reports and fit convergence orders (three or more grids)."""
    Ms = [t.grid.M for t in trajs]
    if len(trajs) < 3 or len(set(Ms)) != len(Ms):
        return combine_reports(Ms, [t.grid.dx for t in trajs], [])
    reports = [run_suite(t, region) for t in trajs] if reports is None else list(reports)
    return combine_reports(Ms, [t.grid.dx for t in trajs], reports)


__all__ = [
    "FAIL", "INCONCLUSIVE", "PASS", "CheckResult", "SeparationFunctional", "TestFunctionFamily",
    "VerificationReport", "bd_residual", "check_bd", "check_density_crosscheck",
    "check_energy_identity", "check_envelopes", "check_mass", "check_moments",
    "check_radius_bounds", "check_regularity", "check_vacuum_rate", "check_weak_form",
    "combine_reports",
    "refinement_order", "refinement_study", "regularity_monitor", "run_suite",
    "uniqueness_contraction",
]
