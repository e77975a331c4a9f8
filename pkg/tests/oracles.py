"""Independent reference implementations used by the tests.

These are plain Python loops written from the continuum equations, kept
separate from the compiled kernels so that agreement is a real check.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special


def rhs_loop(rho, u, r, x, N, gamma, theta):
    """Staggered semi-discrete right-hand side, one loop per equation.

    Cells: drho = -rho^2 (r^{N-1} u)_x.
    Nodes: du = -r^{N-1} (p - stress)_x - (N-1) r^{N-2} u (rho^theta)_x,
    with pressure, stress and rho^theta zero on the vacuum side of x = 1
    and the centre node held fixed.
    """
    M = len(rho)
    h = [x[i + 1] - x[i] for i in range(M)]
    dual = [0.0] * (M + 1)
    dual[0] = h[0] / 2
    dual[M] = h[M - 1] / 2
    for j in range(1, M):
        dual[j] = (h[j - 1] + h[j]) / 2
    flux = [r[j] ** (N - 1) * u[j] for j in range(M + 1)]
    drho, total, rth = [], [], []
    for i in range(M):
        div = (flux[i + 1] - flux[i]) / h[i]
        drho.append(-rho[i] ** 2 * div)
        total.append(rho[i] ** gamma - theta * rho[i] ** (theta + 1) * div)
        rth.append(rho[i] ** theta)
    total.append(0.0)
    rth.append(0.0)
    du = [0.0]
    for j in range(1, M + 1):
        grad_total = (total[j] - total[j - 1]) / dual[j]
        grad_rth = (rth[j] - rth[j - 1]) / dual[j]
        du.append(-(r[j] ** (N - 1)) * grad_total - (N - 1) * r[j] ** (N - 2) * u[j] * grad_rth)
    return np.array(drho), np.array(du), np.array(u, dtype=float)


def heun_loop(rho, u, r, x, N, gamma, theta, dt):
    """Two-stage SSP step built from ``rhs_loop`` with the centre velocity pinned."""
    k1 = rhs_loop(rho, u, r, x, N, gamma, theta)
    s1 = [np.asarray(v, dtype=float) + dt * k for v, k in zip((rho, u, r), k1)]
    s1[1][0] = 0.0
    k2 = rhs_loop(*s1, x, N, gamma, theta)
    out = [0.5 * (np.asarray(v, dtype=float) + s + dt * k) for v, s, k in zip((rho, u, r), s1, k2)]
    out[1][0] = 0.0
    return out


def manufactured_state(M, N, rho_fn, u_fn):
    """Cell densities from rho_fn at cell centres, radii from r^N = N int 1/rho."""
    x = np.linspace(0.0, 1.0, M + 1)
    xc = 0.5 * (x[:-1] + x[1:])
    rho = rho_fn(xc)
    w = np.concatenate([[0.0], np.cumsum(N * np.diff(x) / rho)])
    r = w ** (1.0 / N)
    u = u_fn(x)
    u[0] = 0.0
    return x, rho, u, r


def power_law_amplitude(N, sigma, a0=1.0):
    """K normalizing K (a0 - r)^sigma to unit mass, by direct quadrature."""
    total, _ = integrate.quad(lambda y: (a0 - y) ** sigma * y ** (N - 1), 0.0, a0,
                              epsabs=1e-15, epsrel=1e-13)
    return 1.0 / total


def power_law_energy(N, gamma, sigma, a0=1.0):
    """Internal energy of normalized power-law data: int rho^gamma r^{N-1} dr / (gamma - 1)."""
    K = power_law_amplitude(N, sigma, a0)
    val, _ = integrate.quad(lambda y: (K * (a0 - y) ** sigma) ** gamma * y ** (N - 1), 0.0, a0,
                            epsabs=1e-15, epsrel=1e-13)
    return val / (gamma - 1.0)


def power_law_bd_entropy(N, theta, sigma, x_cut, a0=1.0):
    """int_0^{x_cut} ((rho^theta)_x r^{N-1})^2 dx for power-law data, in r.

    With dx = rho r^{N-1} dr, (rho^theta)_x r^{N-1} = theta rho^{theta-2} rho_r.
    """
    K = power_law_amplitude(N, sigma, a0)
    r_cut = a0 * special.betaincinv(N, sigma + 1.0, x_cut)

    def f(y):
        rho = K * (a0 - y) ** sigma
        drho = -sigma * K * (a0 - y) ** (sigma - 1.0)
        return (theta * rho ** (theta - 2.0) * drho) ** 2 * rho * y ** (N - 1)

    val, _ = integrate.quad(f, 0.0, r_cut, epsabs=1e-15, epsrel=1e-13, limit=200)
    return val


def cfl_loop(rho, r, x, N, gamma, theta, safety):
    best = math.inf
    for i in range(len(rho)):
        h = x[i + 1] - x[i]
        rmax = max(r[i], r[i + 1])
        best = min(best, h * h / (theta * rho[i] ** (theta + 1) * rmax ** (2 * (N - 1))))
        best = min(best, h / (math.sqrt(gamma) * rho[i] ** ((gamma + 1) / 2) * rmax ** (N - 1)))
    return safety * best


def dissipation_loop(rho, u, r, x, N, theta):
    """Midpoint quadratures of the four dissipation integrands, cell by cell."""
    c = 1 - N * (1 - theta)
    terms = [0.0, 0.0, 0.0, 0.0]
    for i in range(len(rho)):
        h = x[i + 1] - x[i]
        rm = (r[i] + r[i + 1]) / 2
        um = (u[i] + u[i + 1]) / 2
        ux = (u[i + 1] - u[i]) / h
        div = (r[i + 1] ** (N - 1) * u[i + 1] - r[i] ** (N - 1) * u[i]) / h
        terms[0] += h * c * (N - 1) * rho[i] ** (theta - 1) * um**2 / rm**2
        terms[1] += h * c * rho[i] ** (1 + theta) * (rm ** (N - 1) * ux) ** 2
        terms[2] += h * (theta - 1 + 1 / N) * rho[i] ** (theta + 1) * div**2
        terms[3] += h * (N - 1) / N * rho[i] ** (theta + 1) * (rm ** (N - 1) * ux - um / (rm * rho[i])) ** 2
    return terms
