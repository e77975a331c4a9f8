"""Scalar functionals of a Lagrangian state: energy, dissipation, BD quantities, bounds."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .coords import _Reconstruction, eulerian_mass
from .grid import LagrangianState, RegionSpec
from .model import Params

__all__ = [
    "BDEntropy", "DissipationRates", "FunctionalReport", "Margins", "RegionSpec",
    "bd_effective_velocity", "bd_entropy", "bound_margins", "dissipation_increment",
    "energy", "functional_report", "mass", "velocity_moments",
]


def energy(state: LagrangianState, p: Params) -> float:
    """Sum over cells of h (u_bar^2 / 2 + rho^(gamma-1) / (gamma-1)), u_bar the node mean."""
    h = state.grid.widths
    ub = 0.5 * (state.u[:-1] + state.u[1:])
    return float(np.sum(h * (0.5 * ub**2 + state.rho ** (p.gamma - 1.0) / (p.gamma - 1.0))))


def kinetic_energy(state: LagrangianState) -> float:
    ub = 0.5 * (state.u[:-1] + state.u[1:])
    return float(0.5 * np.sum(state.grid.widths * ub**2))


class DissipationRates(NamedTuple):
    """Rates of the two dissipation decompositions (first: a, b; second: a, b)."""

    radial: float
    gradient: float
    divergence: float
    shear: float

    @property
    def gradient_pair(self) -> float:
        return self.radial + self.gradient

    @property
    def divergence_pair(self) -> float:
        return self.divergence + self.shear


def dissipation_increment(state: LagrangianState, p: Params) -> DissipationRates:
    out = np.empty(4)
    K.dissipation_rates(state.rho, state.u, state.r, state.grid.widths, p.N,
                        float(p.theta), out)
    return DissipationRates(*map(float, out))


def _theta_gradient(state: LagrangianState, p: Params) -> np.ndarray:
    """Node values of (rho^theta)_x, with rho^theta = 0 on the vacuum side of x = 1."""
    rt = np.append(state.rho**p.theta, 0.0)
    w = state.grid.node_weights
    grad = np.empty(state.grid.M + 1)
    grad[0] = (rt[0] - rt[0]) / w[0]
    grad[1:] = np.diff(rt) / w[1:]
    return grad


def bd_effective_velocity(state: LagrangianState, p: Params) -> np.ndarray:
    """v = u + r^(N-1) (rho^theta)_x at the nodes.

    At x = 0 the factor r^(N-1) vanishes; at x = 1 the difference is taken
    to the vacuum value 0 across the half cell.
    """
    return state.u + state.r ** (p.N - 1) * _theta_gradient(state, p)


def bd_pressure_force(state: LagrangianState, p: Params) -> np.ndarray:
    """r^(N-1) (rho^gamma)_x at the nodes, the forcing of v."""
    pg = np.append(state.rho**p.gamma, 0.0)
    w = state.grid.node_weights
    f = np.zeros(state.grid.M + 1)
    f[1:] = state.r[1:] ** (p.N - 1) * np.diff(pg) / w[1:]
    return f


def _trapezoid_to(x: np.ndarray, f: np.ndarray, end: float) -> float:
    """Integral over [0, end] of the piecewise-linear interpolant of (x, f)."""
    k = np.searchsorted(x, end, side="right") - 1
    total = float(np.sum(0.5 * (f[1:k + 1] + f[:k]) * np.diff(x[:k + 1])))
    if k < x.size - 1 and end > x[k]:
        fe = f[k] + (f[k + 1] - f[k]) * (end - x[k]) / (x[k + 1] - x[k])
        total += 0.5 * (f[k] + fe) * (end - x[k])
    return total


class BDEntropy(NamedTuple):
    value: float
    budget: float


def bd_entropy(state: LagrangianState, region: RegionSpec, p: Params,
               initial: LagrangianState | None = None) -> BDEntropy:
    """Integral over [0, x_cut] of ((rho^theta)_x r^(N-1))^2, trapezoid on nodes.

    With a cutoff ramp the integrand is weighted by the cutoff and the
    integral extends to the end of the ramp. ``budget`` is the data quantity
    E_x bounding it: the same integral plus that of u^2 at the initial
    state, plus the integral of rho0^(gamma-1).
    """
    if not region.x_cut < 1.0:
        raise ValueError("x_cut must be below 1: the integrand is singular at the vacuum edge")
    x = state.grid.nodes

    def integral(s: LagrangianState, extra_u: bool) -> float:
        q = (s.r ** (p.N - 1) * _theta_gradient(s, p)) ** 2
        if extra_u:
            q = q + s.u**2
        if region.ramp == 0.0:
            return _trapezoid_to(x, q, region.x_cut)
        return _trapezoid_to(x, q * region.cutoff(x), region.x_cut + region.ramp)

    value = integral(state, False)
    init = state if initial is None else initial
    budget = integral(init, True) + float(np.sum(init.grid.widths * init.rho ** (p.gamma - 1.0)))
    return BDEntropy(value, budget)


def velocity_moments(state: LagrangianState, region: RegionSpec, p: Params, k: int) -> float:
    """Integral of u^(2k) over [x2, 1], trapezoid on nodes (exact at x2 by interpolation)."""
    if not 1 <= k <= 2 * p.m:
        raise ValueError(f"moment order k must lie in 1..{2 * p.m}, got {k}")
    x = state.grid.nodes
    f = state.u ** (2 * k)
    return _trapezoid_to(x, f, 1.0) - _trapezoid_to(x, f, region.x2)


@dataclass
class Margins:
    """Distances to the a-priori bounds; positive means the bound holds."""

    radius: float            # min over x > 0 of r x^{-k} - c0
    radius_nodes: np.ndarray = field(repr=False)   # r - c0 x^k per node
    radius_violations: int = 0
    separation: float = float("nan")
    a_lower: float = float("nan")
    a_upper: float = float("nan")
    ratio_min: float = float("nan")
    ratio_max: float = float("nan")
    envelope_min: float = float("nan")
    envelope_max: float = float("nan")

    def as_row(self) -> dict[str, float]:
        return {
            "radius_margin": self.radius, "radius_violations": self.radius_violations,
            "separation_margin": self.separation, "a_lower_margin": self.a_lower,
            "a_upper_margin": self.a_upper, "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max, "envelope_min": self.envelope_min,
            "envelope_max": self.envelope_max,
        }


def _separation_margin(state: LagrangianState, p: Params, E0: float, slack: float) -> float:
    """min over node pairs of (r^N(x2) - r^N(x1)) (x2 - x1)^(-g/(g-1)) - E0^(-1/(g-1))."""
    x, w = state.grid.nodes, state.r**p.N
    step = max(1, x.size // 1024)
    xs, ws = x[::step], w[::step]
    dx = xs[None, :] - xs[:, None]
    dw = ws[None, :] - ws[:, None]
    iu = np.triu_indices(xs.size, 1)
    e = p.gamma / (p.gamma - 1.0)
    scaled = dw[iu] / dx[iu] ** e
    return float(scaled.min() - slack * E0 ** (-1.0 / (p.gamma - 1.0)))


def bound_margins(state: LagrangianState, p: Params, E0: float,
                  rho0: np.ndarray | None = None, a0: float | None = None,
                  slack: float = 1.0) -> Margins:
    """Margins of the radius, separation, boundary, ratio and envelope bounds.

    The radius margin is reported scaled by x^k (k = gamma/(N(gamma-1))) so
    the degenerate point x = 0 does not pin it to zero; ``radius_nodes``
    holds the unscaled per-node differences.
    """
    x, r = state.grid.nodes, state.r
    kexp = p.gamma / (p.N * (p.gamma - 1.0))
    c0 = slack * p.radius_floor(E0)
    raw = r - c0 * x**kexp
    scaled = r[1:] / x[1:] ** kexp - c0
    a = float(r[-1])
    a0 = p.a0 if a0 is None else a0
    m = Margins(float(scaled.min()), raw, int(np.count_nonzero(raw < 0)))
    m.separation = _separation_margin(state, p, E0, slack)
    m.a_lower = a - c0
    m.a_upper = 2.0 * a0 - a
    if rho0 is not None:
        ratio = state.rho / rho0
        m.ratio_min, m.ratio_max = float(ratio.min()), float(ratio.max())
    phi = _Reconstruction(state, p.N, p.sigma).phi
    m.envelope_min = float(phi.min() / p.rho_minus)
    m.envelope_max = float(phi.max() / p.rho_plus)
    return m


class MassReport(NamedTuple):
    lagrangian: float
    eulerian: float


def mass(state: LagrangianState, p: Params | None = None) -> MassReport:
    """Total mass: sum of cell widths, and the Eulerian integral when ``p`` is given."""
    lag = float(np.sum(state.grid.widths))
    eul = eulerian_mass(state, p) if p is not None else float("nan")
    return MassReport(lag, eul)


@dataclass
class FunctionalReport:
    tau: float
    E: float
    D_gradient_pair: tuple[float, float]
    D_divergence_pair: tuple[float, float]
    mass: float
    eulerian_mass: float
    bd_entropy: float
    bd_budget: float
    moments: dict[int, float]
    margins: Margins

    def as_row(self) -> dict[str, float]:
        row = {
            "tau": self.tau, "E": self.E,
            "D_radial": self.D_gradient_pair[0], "D_gradient": self.D_gradient_pair[1],
            "D_divergence": self.D_divergence_pair[0], "D_shear": self.D_divergence_pair[1],
            "mass": self.mass, "eulerian_mass": self.eulerian_mass,
            "bd_entropy": self.bd_entropy, "bd_budget": self.bd_budget,
        }
        row.update({f"moment_{k}": v for k, v in sorted(self.moments.items())})
        row.update(self.margins.as_row())
        return row


def functional_report(state: LagrangianState, p: Params, E0: float,
                      dissipation: np.ndarray, region: RegionSpec | None = None,
                      initial: LagrangianState | None = None, slack: float = 1.0) -> FunctionalReport:
    """All functionals of one snapshot; ``dissipation`` holds the four accumulated integrals."""
    region = region or RegionSpec()
    init = initial or state
    bd = bd_entropy(state, region, p, initial=init)
    moments = {k: velocity_moments(state, region, p, k) for k in range(1, 2 * int(p.m) + 1)}
    lag, eul = mass(state, p)
    return FunctionalReport(
        state.tau, energy(state, p),
        (float(dissipation[0]), float(dissipation[1])),
        (float(dissipation[2]), float(dissipation[3])),
        lag, eul, bd.value, bd.budget, moments,
        bound_margins(state, p, E0, rho0=init.rho, a0=float(init.r[-1]), slack=slack),
    )
