"""Maps between the mass coordinate and the radius, and Eulerian reconstruction.

The Eulerian density is reconstructed as (a - r)^sigma times a piecewise
linear factor, so the vacuum power law is built in and the mass integral
of a smooth factor is second order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .grid import LagrangianState
from .model import Params

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(8)
_EDGE_POINTS = 8


class CoordinateError(ValueError):
    pass


@dataclass(frozen=True)
class EulerianField:
    radii: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    a: float

    def __post_init__(self) -> None:
        if np.any(np.diff(self.radii) <= 0):
            raise CoordinateError("Eulerian radii must be increasing")
        if np.any(self.rho < 0):
            raise CoordinateError("Eulerian density must be non-negative")


def _check_state(state: LagrangianState) -> None:
    if np.any(np.diff(state.r) <= 0):
        raise CoordinateError("degenerate state: radii are not strictly increasing")
    if np.any(state.rho <= 0):
        raise CoordinateError("degenerate state: non-positive cell density")


def mass_coordinate(r, rho_profile: Callable[[np.ndarray], np.ndarray], p: Params,
                    a: float | None = None, breaks=None):
    """x(r) = integral of rho(y) y^(N-1) over [0, r].

    ``breaks`` lists radii where the profile jumps (cell faces of a
    piecewise-constant density); they are handed to the quadrature.
    """
    a = p.a0 if a is None else a
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 0) or np.any(r_arr > a * (1 + 1e-14)):
        raise CoordinateError(f"radius outside [0, {a}]")
    brk = np.sort(np.asarray(breaks, dtype=float)) if breaks is not None else np.empty(0)

    def weight(y):
        return rho_profile(y) * y ** (p.N - 1)

    def piece(lo, hi):
        inner = brk[(brk > lo) & (brk < hi)]
        edges = np.concatenate([[lo], inner, [hi]])
        return sum(integrate.quad(weight, e0, e1, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
                   for e0, e1 in zip(edges[:-1], edges[1:]))

    order = np.argsort(r_arr)
    out = np.empty_like(r_arr)
    acc, last = 0.0, 0.0
    for k in order:
        rk = r_arr[k]
        if rk > last:
            acc += piece(last, rk)
            last = rk
        out[k] = acc
    return out if np.ndim(r) else float(out[0])


def radius_from_mass(x, state: LagrangianState, p: Params,
                     boundary_exponent: float | None = None):
    """r(x) from r^N = N * integral of 1/rho over [0, x].

    Interior cells carry constant density, so r^N is linear there. On the
    last cell 1/rho is taken as the power law c (1-y)^(-beta) whose cell
    integral matches the cell density.
    """
    _check_state(state)
    beta = p.beta if boundary_exponent is None else boundary_exponent
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr < 0) or np.any(x_arr > 1):
        raise CoordinateError("mass fraction outside [0, 1]")
    nodes, N = state.grid.nodes, p.N
    w = state.r**N
    i = np.clip(np.searchsorted(nodes, x_arr, side="right") - 1, 0, state.grid.M - 1)
    dx = x_arr - nodes[i]
    wx = w[i] + N * dx / state.rho[i]
    last = i == state.grid.M - 1
    if np.any(last):
        h = state.grid.widths[-1]
        frac = np.clip((1.0 - x_arr[last]) / h, 0.0, 1.0)
        wx[last] = w[-2] + (w[-1] - w[-2]) * (1.0 - frac ** (1.0 - beta))
    rx = np.maximum(wx, 0.0) ** (1.0 / N)
    rx[x_arr == 1.0] = state.r[-1]
    return rx if np.ndim(x) else float(rx[0])


def _segment_integral(lo, hi, a, sigma, N, f, eta=None):
    """Integral of (a-r)^sigma r^(N-1) f(z) over r, on each z-interval [lo_k, hi_k].

    z = (a - r)^eta with eta = min(sigma, 1) by default; in z the integrand
    is z^e (a - z^(1/eta))^(N-1) f(z) / eta with e = (sigma + 1)/eta - 1.
    Intervals starting at z = 0 use Gauss-Jacobi for the z^e factor.
    """
    eta = min(sigma, 1.0) if eta is None else eta
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    q = 1.0 / eta
    e = (sigma + 1.0) * q - 1.0
    out = np.empty(lo.size)
    edge = lo <= 0.0
    if np.any(~edge):
        l, u = lo[~edge], hi[~edge]
        half = 0.5 * (u - l)
        y = 0.5 * (u + l)[:, None] + half[:, None] * _GAUSS_X[None, :]
        g = y**e * np.clip(a - y**q, 0.0, None) ** (N - 1) * f(y)
        out[~edge] = half * (g @ _GAUSS_W) / eta
    if np.any(edge):
        t, wt = special.roots_jacobi(_EDGE_POINTS, 0.0, e)
        u = hi[edge]
        y = 0.5 * u[:, None] * (1.0 + t[None, :])
        g = np.clip(a - y**q, 0.0, None) ** (N - 1) * f(y)
        out[edge] = (0.5 * u) ** (e + 1.0) * (g @ wt) / eta
    return out


class _Reconstruction:
    """rho(r) = (a - r)^sigma phi with phi piecewise linear in z = (a - r)^min(sigma, 1).

    Near the vacuum edge the density carries a (a - r)^(2 sigma) term next to
    the leading one; for sigma < 1 it is linear in z but not smooth in r.
    Each cell gives one sample of phi at the z-centroid of the weight
    (a - r)^sigma r^(N-1); the sample is the cell mass rho dV over the cell
    integral of that weight. phi is extrapolated linearly in z to r = 0 and
    r = a.
    """

    def __init__(self, state: LagrangianState, N: int, sigma: float):
        _check_state(state)
        self.N, self.sigma = N, sigma
        self.eta = eta = min(sigma, 1.0)
        self.a = a = float(state.r[-1])
        sn = np.clip(a - state.r, 0.0, None) ** eta
        sn[-1] = 0.0
        lo, hi = sn[1:], sn[:-1]
        i0 = _segment_integral(lo, hi, a, sigma, N, np.ones_like)
        i1 = _segment_integral(lo, hi, a, sigma, N, lambda y: y)
        vol = np.diff(state.r**N) / N
        self.phi = state.rho * vol / i0
        self.c = a - (i1 / i0) ** (1.0 / eta)
        # knots with z increasing, i.e. from the edge inwards
        self._z = (i1 / i0)[::-1]
        self._phi = self.phi[::-1]
        self.z_max = float(sn[0])

    def phi_z(self, y: np.ndarray) -> np.ndarray:
        s, phi = self._z, self._phi
        y = np.asarray(y, dtype=float)
        out = np.interp(y, s, phi)
        if s.size > 1:
            lo, hi = y < s[0], y > s[-1]
            out = np.where(lo, phi[0] + (phi[1] - phi[0]) / (s[1] - s[0]) * (y - s[0]), out)
            out = np.where(hi, phi[-1] + (phi[-1] - phi[-2]) / (s[-1] - s[-2]) * (y - s[-1]), out)
        return np.clip(out, 0.0, None)

    def phi_at(self, r: np.ndarray) -> np.ndarray:
        return self.phi_z(np.clip(self.a - np.asarray(r, dtype=float), 0.0, None) ** self.eta)

    def __call__(self, r: np.ndarray) -> np.ndarray:
        d = np.clip(self.a - np.asarray(r, dtype=float), 0.0, None)
        return d**self.sigma * self.phi_z(d**self.eta)

    def mass(self) -> float:
        knots = np.concatenate([[0.0], self._z, [self.z_max]])
        return float(np.sum(_segment_integral(knots[:-1], knots[1:], self.a, self.sigma,
                                              self.N, self.phi_z)))


def state_density(state: LagrangianState, p: Params | None = None,
                  kind: str = "smooth") -> Callable[[np.ndarray], np.ndarray]:
    """Eulerian density rho(r) of a state.

    ``cells`` is the piecewise-constant density, whose mass on each cell is
    exactly the cell mass. ``smooth`` is the vacuum-aware reconstruction;
    without ``p`` the dimension is inferred and sigma = 1 is used.
    """
    if kind == "cells":
        _check_state(state)
        r, rho = state.r, state.rho

        def f(y):
            idx = np.clip(np.searchsorted(r, y, side="right") - 1, 0, rho.size - 1)
            return np.where(np.asarray(y) > r[-1], 0.0, rho[idx])
        return f
    if kind != "smooth":
        raise ValueError(f"unknown density kind {kind!r}")
    if p is None:
        return _Reconstruction(state, _infer_dimension(state), 1.0)
    return _Reconstruction(state, p.N, p.sigma)


def eulerian_mass(state: LagrangianState, p: Params) -> float:
    """Integral of r^(N-1) rho(r) over [0, a] for the smooth reconstruction."""
    return _Reconstruction(state, p.N, p.sigma).mass()


def to_eulerian(state: LagrangianState, n_out: int, p: Params | None = None) -> EulerianField:
    """Sample the reconstructed density and velocity on n_out uniform radii.

    Density uses the vacuum-aware reconstruction (sigma = 1 when ``p`` is
    omitted); velocity is linear in r between nodes.
    """
    if n_out < 2:
        raise ValueError("n_out must be at least 2")
    _check_state(state)
    N = p.N if p is not None else _infer_dimension(state)
    sigma = p.sigma if p is not None else 1.0
    a = float(state.r[-1])
    radii = np.linspace(0.0, a, n_out)
    rho = _Reconstruction(state, N, sigma)(radii)
    rho[-1] = 0.0
    u = np.interp(radii, state.r, state.u)
    u[0] = 0.0
    return EulerianField(radii, rho, u, a)


def _infer_dimension(state: LagrangianState) -> int:
    # cell mass h = rho (r_{i+1}^N - r_i^N) / N; pick the N that fits best
    errs = {}
    for N in (2, 3):
        errs[N] = float(np.max(np.abs(state.rho * np.diff(state.r**N) / N - state.grid.widths)))
    return min(errs, key=errs.get)


def vacuum_slope(state: LagrangianState, p: Params, lagrangian: bool = False) -> float:
    """Log-log slope of the density against the distance to the vacuum edge.

    Cell densities are placed at volume midpoints (cell midpoints in x) and
    fitted over the decade of distances next to the edge, leaving out the
    last cell. Expected slopes: sigma in r, beta in x.
    """
    if lagrangian:
        dist = 1.0 - state.grid.cells
    else:
        w = state.r**p.N
        dist = state.r[-1] - (0.5 * (w[:-1] + w[1:])) ** (1.0 / p.N)
    rho = state.rho[:-1]
    dist = dist[:-1]
    sel = dist <= 10.0 * dist[-1]
    if np.count_nonzero(sel) < 3:
        sel = np.zeros_like(sel)
        sel[-3:] = True
    slope, _ = np.polyfit(np.log(dist[sel]), np.log(rho[sel]), 1)
    return float(slope)
