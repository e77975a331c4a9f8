"""Compiled inner loops for the staggered Lagrangian scheme.

Layout: ``rho`` has one value per cell (M), ``u`` and ``r`` one value per
node (M + 1).  ``h`` are cell widths in mass coordinates, ``m`` the dual
(node) widths, half a cell at either end.  The vacuum side of the last node
carries zero pressure, zero viscous stress and zero ``rho**theta``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

# status codes returned by ``advance``
REACHED = 0
STRIDE = 1
MONITOR_TRIP = 2
UNDERFLOW = 3

MAX_HALVINGS = 20


@njit(cache=True, inline="always")
def _pow(x, e):
    if e == 1.0:
        return x
    if e == 2.0:
        return x * x
    if e == 0.0:
        return 1.0
    if e == 3.0:
        return x * x * x
    if e == 0.5:
        return math.sqrt(x)
    return x**e


@njit(cache=True, inline="always")
def _ipow(x, k):
    out = 1.0
    for _ in range(k):
        out *= x
    return out


@njit(cache=True)
def rhs(rho, u, r, h, m, N, gamma, theta, drho, du, dr):
    M = rho.shape[0]
    pi = np.empty(M + 1)
    rt = np.empty(M + 1)
    f_left = _ipow(r[0], N - 1) * u[0]
    for i in range(M):
        f_right = _ipow(r[i + 1], N - 1) * u[i + 1]
        div = (f_right - f_left) / h[i]
        f_left = f_right
        rho_i = rho[i]
        drho[i] = -rho_i * rho_i * div
        rth = _pow(rho_i, theta)
        rt[i] = rth
        pi[i] = _pow(rho_i, gamma) - theta * rth * rho_i * div
    pi[M] = 0.0
    rt[M] = 0.0
    du[0] = 0.0
    dr[0] = u[0]
    for j in range(1, M + 1):
        rj = r[j]
        geo = 0.0
        if N > 1:
            geo = (N - 1) * _ipow(rj, N - 2) * u[j] * (rt[j] - rt[j - 1])
        du[j] = -(_ipow(rj, N - 1) * (pi[j] - pi[j - 1]) + geo) / m[j]
        dr[j] = u[j]


@njit(cache=True)
def cell_kinematics(rho, u, r, h, N, A, B, div):
    """Cell values of r^{N-1} u_x, u / (r rho) and (r^{N-1} u)_x."""
    M = rho.shape[0]
    for i in range(M):
        rb = 0.5 * (r[i] + r[i + 1])
        ub = 0.5 * (u[i] + u[i + 1])
        A[i] = _ipow(rb, N - 1) * (u[i + 1] - u[i]) / h[i]
        B[i] = ub / (rb * rho[i])
        div[i] = (_ipow(r[i + 1], N - 1) * u[i + 1] - _ipow(r[i], N - 1) * u[i]) / h[i]


@njit(cache=True)
def dissipation_rates(rho, u, r, h, N, theta, out):
    """Spatial quadratures of the two energy-dissipation decompositions.

    out[0], out[1]: the velocity/radius term and the gradient term of the
    first decomposition; out[2], out[3]: the divergence term and the shear
    term of the second.
    """
    M = rho.shape[0]
    c = 1.0 - N * (1.0 - theta)
    s_b = 0.0
    s_a = 0.0
    s_div = 0.0
    s_shear = 0.0
    for i in range(M):
        rb = 0.5 * (r[i] + r[i + 1])
        ub = 0.5 * (u[i] + u[i + 1])
        a = _ipow(rb, N - 1) * (u[i + 1] - u[i]) / h[i]
        b = ub / (rb * rho[i])
        dv = (_ipow(r[i + 1], N - 1) * u[i + 1] - _ipow(r[i], N - 1) * u[i]) / h[i]
        w = h[i] * _pow(rho[i], theta + 1.0)
        s_b += w * b * b
        s_a += w * a * a
        s_div += w * dv * dv
        s_shear += w * (a - b) * (a - b)
    out[0] = c * (N - 1) * s_b
    out[1] = c * s_a
    out[2] = (theta - 1.0 + 1.0 / N) * s_div
    out[3] = (N - 1.0) / N * s_shear


@njit(cache=True)
def log_rate(rho, u, r, h, N, out):
    """rho (r^{N-1} u)_x per cell, the decay rate of log rho.

    In the continuum this equals rho r^{N-1} u_x + (N-1) u / r.
    """
    M = rho.shape[0]
    for i in range(M):
        div = (_ipow(r[i + 1], N - 1) * u[i + 1] - _ipow(r[i], N - 1) * u[i]) / h[i]
        out[i] = rho[i] * div


@njit(cache=True)
def monitor_values(rho, u, r, h, x_cells, x_nodes, x0, N):
    stress = 0.0
    for i in range(rho.shape[0]):
        if x_cells[i] >= x0:
            rb = 0.5 * (r[i] + r[i + 1])
            s = abs(rho[i] * _ipow(rb, N - 1) * (u[i + 1] - u[i]) / h[i])
            if s > stress:
                stress = s
    speed = 0.0
    for j in range(u.shape[0]):
        if x_nodes[j] >= x0 and abs(u[j]) > speed:
            speed = abs(u[j])
    return stress, speed


@njit(cache=True)
def cfl(rho, r, h, N, gamma, theta, safety):
    dt = np.inf
    for i in range(rho.shape[0]):
        rmax = max(r[i], r[i + 1])
        kappa = theta * _pow(rho[i], theta + 1.0) * _ipow(rmax, 2 * (N - 1))
        if kappa > 0.0:
            dt = min(dt, h[i] * h[i] / kappa)
        wave = math.sqrt(gamma) * _pow(rho[i], 0.5 * (gamma + 1.0)) * _ipow(rmax, N - 1)
        if wave > 0.0:
            dt = min(dt, h[i] / wave)
    return safety * dt


@njit(cache=True)
def ssp_rk2(rho, u, r, h, m, N, gamma, theta, dt, rho1, u1, r1, rho2, u2, r2):
    """One Heun (SSP two-stage) step into (rho2, u2, r2); stage one into (rho1, u1, r1).

    Returns False when a density turns non-positive in either stage.
    """
    M = rho.shape[0]
    k_rho = np.empty(M)
    k_u = np.empty(M + 1)
    k_r = np.empty(M + 1)
    rhs(rho, u, r, h, m, N, gamma, theta, k_rho, k_u, k_r)
    ok = True
    for i in range(M):
        rho1[i] = rho[i] + dt * k_rho[i]
        if not rho1[i] > 0.0:
            ok = False
    for j in range(M + 1):
        u1[j] = u[j] + dt * k_u[j]
        r1[j] = r[j] + dt * k_r[j]
    u1[0] = 0.0
    if not ok:
        return False
    rhs(rho1, u1, r1, h, m, N, gamma, theta, k_rho, k_u, k_r)
    for i in range(M):
        rho2[i] = 0.5 * (rho[i] + rho1[i] + dt * k_rho[i])
        if not rho2[i] > 0.0:
            ok = False
    for j in range(M + 1):
        u2[j] = 0.5 * (u[j] + u1[j] + dt * k_u[j])
        r2[j] = 0.5 * (r[j] + r1[j] + dt * k_r[j])
    u2[0] = 0.0
    return ok


@njit(cache=True)
def advance(rho, u, r, h, m, x_cells, x_nodes, N, gamma, theta,
            t, t_end, max_steps, safety, dt_fixed, x0, stress_cap, speed_cap,
            diss, rate_int, log_tau, log_stress, log_speed, log_dt):
    """Integrate in place from ``t`` toward ``t_end``.

    Accumulates the four dissipation rates and the per-cell log-density rate
    with the integrator's own stage weights.  Returns
    ``(t, steps, status)``; monitor values after every accepted step go to the
    ``log_*`` arrays.
    """
    M = rho.shape[0]
    rho1 = np.empty(M)
    u1 = np.empty(M + 1)
    r1 = np.empty(M + 1)
    rho2 = np.empty(M)
    u2 = np.empty(M + 1)
    r2 = np.empty(M + 1)
    d0 = np.empty(4)
    d1 = np.empty(4)
    q0 = np.empty(M)
    q1 = np.empty(M)
    steps = 0
    while steps < max_steps:
        if t >= t_end:
            return t, steps, REACHED
        if dt_fixed > 0.0:
            dt = dt_fixed
        else:
            dt = cfl(rho, r, h, N, gamma, theta, safety)
        last = False
        if t + dt >= t_end:
            dt = t_end - t
            last = True
        dissipation_rates(rho, u, r, h, N, theta, d0)
        log_rate(rho, u, r, h, N, q0)
        halvings = 0
        while not ssp_rk2(rho, u, r, h, m, N, gamma, theta, dt, rho1, u1, r1, rho2, u2, r2):
            halvings += 1
            last = False
            if halvings > MAX_HALVINGS:
                return t, steps, UNDERFLOW
            dt *= 0.5
        dissipation_rates(rho1, u1, r1, h, N, theta, d1)
        log_rate(rho1, u1, r1, h, N, q1)
        half = 0.5 * dt
        for k in range(4):
            diss[k] += half * (d0[k] + d1[k])
        for i in range(M):
            rate_int[i] += half * (q0[i] + q1[i])
            rho[i] = rho2[i]
        for j in range(M + 1):
            u[j] = u2[j]
            r[j] = r2[j]
        t = t_end if last else t + dt
        stress, speed = monitor_values(rho, u, r, h, x_cells, x_nodes, x0, N)
        log_tau[steps] = t
        log_stress[steps] = stress
        log_speed[steps] = speed
        log_dt[steps] = dt
        steps += 1
        if stress > stress_cap or speed > speed_cap:
            return t, steps, MONITOR_TRIP
    if t >= t_end:
        return t, steps, REACHED
    return t, steps, STRIDE
