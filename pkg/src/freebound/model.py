"""Parameters, admissibility and initial data."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, optimize, special

from .grid import LagrangianState, MassGrid, RegionSpec, quintic_step
from .report import INCONCLUSIVE, CheckResult, VerificationReport

MASS_RTOL = 1e-10

PROFILE_KINDS = ("power-law", "uniform", "custom")


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    """Physical and structural constants.

    ``rho_star_lo``/``rho_star_hi`` are the pinch constants of the initial
    density against (a0 - r)^sigma.
    """

    N: int = 2
    gamma: float = 2.0
    theta: float = 1.0
    sigma: float = 0.5
    m: int = 2
    rho_star_lo: float = 1.0
    rho_star_hi: float = 2.0
    a0: float = 1.0

    def __post_init__(self) -> None:
        for name in ("gamma", "theta", "sigma", "rho_star_lo", "rho_star_hi", "a0"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite number, got {value!r}")
        if not isinstance(self.m, (int, float)) or not math.isfinite(self.m):
            raise ParameterError(f"m must be a finite number, got {self.m!r}")
        if self.N not in (2, 3):
            raise ParameterError(f"N must be 2 or 3, got {self.N!r}")
        if self.sigma <= 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.rho_star_lo <= self.rho_star_hi:
            raise ParameterError(
                f"need 0 < rho_star_lo <= rho_star_hi, got {self.rho_star_lo}, {self.rho_star_hi}"
            )
        if self.a0 <= 0:
            raise ParameterError(f"a0 must be positive, got {self.a0}")

    @property
    def beta(self) -> float:
        """Vacuum rate in the mass coordinate."""
        return self.sigma / (1.0 + self.sigma)

    @property
    def rho_plus(self) -> float:
        return 2.0 * self.rho_star_hi

    @property
    def rho_minus(self) -> float:
        return 0.5 * self.rho_star_lo

    def lagrangian_pinch(self) -> tuple[float, float]:
        """Constants (lo, hi) with lo (1-x)^beta <= rho0(x) <= hi (1-x)^beta.

        For K (a0 - r)^sigma the ratio rho0 / (1-x)^beta equals
        K^(1-beta) g(r), with g independent of K; lo and hi take the extreme
        values of g scaled by the Eulerian pinch constants.
        """
        g = self._pinch_shape()
        return (self.rho_star_lo ** (1 - self.beta) * g.min(),
                self.rho_star_hi ** (1 - self.beta) * g.max())

    def _pinch_shape(self) -> np.ndarray:
        a, N, s, b = self.a0, self.N, self.sigma, self.beta
        t = np.linspace(0.0, 1.0, 4097)[:-1]
        tail = a ** (N + s) * special.beta(N, s + 1.0) * special.betainc(s + 1.0, N, 1.0 - t)
        g = (a * (1.0 - t)) ** s / tail**b
        edge = ((1.0 + s) / a ** (N - 1)) ** b
        return np.append(g, edge)

    def radius_exponent(self) -> float:
        return self.gamma / (self.N * (self.gamma - 1.0))

    def radius_floor(self, E0: float) -> float:
        """E0^(-1/(N(gamma-1))), the lower bound on a(tau)."""
        return E0 ** (-1.0 / (self.N * (self.gamma - 1.0)))


class Violation(NamedTuple):
    constraint: str
    lhs: float
    rhs: float


@dataclass
class AdmissibilityReport:
    admissible: bool
    violations: list[Violation] = field(default_factory=list)
    derived: dict[str, float] = field(default_factory=dict)


def validate_params(p: Params) -> AdmissibilityReport:
    """Evaluate A1-A3 with strict inequalities.

    A violation ``(id, lhs, rhs)`` means the requirement ``lhs < rhs``
    failed.
    """
    for name in ("N", "gamma", "theta", "sigma", "m"):
        value = getattr(p, name)
        if not math.isfinite(value):
            raise ParameterError(f"{name} is not finite: {value!r}")
    N, g, th, beta, m = p.N, p.gamma, p.theta, p.beta, p.m
    derived = {
        "beta": beta,
        "theta_lower": (N - 1) / N,
        "beta_lower": 1.0 / (2.0 * g),
        "beta_upper": min(1.0 / (2.0 * th), 1.0 / (1.0 + th)) if th > 0 else math.inf,
        "beta_theta_bound": 1.0 / 3.0,
        "m_lower": max(1.0 / (1.0 + beta * th - beta), 1.0 / (4.0 - 4.0 * beta)),
    }
    required = [
        ("gamma>1", 1.0, g),
        ("theta>(N-1)/N", derived["theta_lower"], th),
        ("theta<gamma", th, g),
        ("beta>1/(2gamma)", derived["beta_lower"], beta),
        ("beta<min(1/(2theta),1/(1+theta))", beta, derived["beta_upper"]),
        ("beta(theta-1)<1/3", beta * (th - 1.0), derived["beta_theta_bound"]),
        ("m>max(...)", derived["m_lower"], m),
    ]
    violations = [Violation(cid, float(lhs), float(rhs))
                  for cid, lhs, rhs in required if not lhs < rhs]
    if float(m) != int(m) or m <= 0:
        violations.append(Violation("m positive integer", float(m), float(round(m))))
    return AdmissibilityReport(not violations, violations, derived)


def lambda0_interval(p: Params) -> tuple[float, float]:
    """Open interval allowed for the exponent of the boundary u_x integrability."""
    b = p.beta
    return 1.0, min(4 * p.m / (4 * p.m * b + 1), 1.0 / (b * (p.theta + 1)))


def default_lambda0(p: Params) -> float:
    lo, hi = lambda0_interval(p)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class VelocitySpec:
    """Initial velocity u0(r) plus an optional bump in the mass coordinate.

    kinds: ``zero``; ``linear`` u0 = A r/a0; ``ramp`` a quintic step of
    height A centred at ``center * a0`` with width ``width * a0``.
    """

    kind: str = "zero"
    amplitude: float = 0.0
    center: float = 0.5
    width: float = 0.2
    bump_amplitude: float = 0.0
    bump_center: float = 0.5
    bump_width: float = 0.2

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "linear", "ramp"):
            raise ValueError(f"unknown velocity kind {self.kind!r}")
        if self.width <= 0 or self.bump_width <= 0:
            raise ValueError("velocity widths must be positive")

    def __call__(self, r: np.ndarray, x: np.ndarray, a0: float) -> np.ndarray:
        s = np.asarray(r, dtype=float) / a0
        if self.kind == "zero":
            u = np.zeros_like(s)
        elif self.kind == "linear":
            u = self.amplitude * s
        else:
            u = self.amplitude * quintic_step((s - self.center) / self.width + 0.5)
        if self.bump_amplitude:
            u = u + self.bump_amplitude * bump(x, self.bump_center, self.bump_width)
        return u


def bump(x: np.ndarray, center: float, width: float) -> np.ndarray:
    """C^2 bump of height 1 at ``center`` supported on center +- width/2."""
    s = (np.asarray(x, dtype=float) - center) / width + 0.5
    return np.where(s < 0.5, quintic_step(2.0 * s), quintic_step(2.0 - 2.0 * s))


@dataclass(frozen=True)
class ProfileSpec:
    """Initial density/velocity recipe.

    ``power-law``: rho0 = K (a0 - r)^sigma, optionally times
    (1 + modulation cos(pi r / a0)) (built through the custom path).
    ``uniform``: constant density, only for coordinate-transform tests.
    ``custom``: ``density(r)`` up to normalization.
    """

    kind: str = "power-law"
    modulation: float = 0.0
    velocity: VelocitySpec | Callable[[np.ndarray], np.ndarray] = field(default_factory=VelocitySpec)
    density: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "custom" and self.density is None:
            raise ValueError("custom profile needs a density callable")
        if abs(self.modulation) >= 1.0:
            raise ValueError("modulation must keep the density positive (|modulation| < 1)")


@dataclass(frozen=True)
class InitialData:
    """Initial fields on the mass grid.

    ``rho0`` holds cell densities (cell mass over cell volume), so the
    node radii satisfy r^N(x_{i+1}) - r^N(x_i) = N h_i / rho0_i exactly.
    """

    grid: MassGrid
    rho0: np.ndarray
    u0: np.ndarray
    r0: np.ndarray
    profile_kind: str
    normalized_mass: float
    amplitude: float = float("nan")

    @property
    def a0(self) -> float:
        return float(self.r0[-1])

    def state(self) -> LagrangianState:
        return LagrangianState(0.0, self.rho0.copy(), self.u0.copy(), self.r0.copy(),
                               float(self.r0[-1]), self.grid)


def power_law_amplitude(p: Params) -> float:
    """K such that the mass of K (a0 - r)^sigma on the ball of radius a0 is 1."""
    return 1.0 / (p.a0 ** (p.N + p.sigma) * special.beta(p.N, p.sigma + 1.0))


def _radii_power_law(p: Params, x: np.ndarray) -> np.ndarray:
    r = p.a0 * special.betaincinv(p.N, p.sigma + 1.0, x)
    r[0] = 0.0
    r[-1] = p.a0
    return r


def _radii_custom(p: Params, f: Callable, x: np.ndarray) -> tuple[np.ndarray, float]:
    N, a0 = p.N, p.a0

    def weight(y):
        return y ** (N - 1) * f(y)

    total, _ = integrate.quad(weight, 0.0, a0, limit=200, epsabs=1e-14, epsrel=1e-12)
    if not math.isfinite(total) or total <= 0:
        raise ValueError(f"density profile has non-positive or non-finite mass ({total})")
    target = x * total
    r = np.empty_like(x)
    r[0], r[-1] = 0.0, a0
    lo, acc = 0.0, 0.0
    for i in range(1, x.size - 1):
        def g(s, acc=acc, lo=lo, t=target[i]):
            return acc + integrate.quad(weight, lo, s, limit=100, epsabs=1e-14, epsrel=1e-12)[0] - t
        hi = optimize.brentq(g, lo, a0, xtol=1e-15 * a0, rtol=1e-15)
        acc += integrate.quad(weight, lo, hi, limit=100, epsabs=1e-14, epsrel=1e-12)[0]
        r[i] = lo = hi
    return r, 1.0 / total


def make_initial_data(p: Params, profile: ProfileSpec | None = None, M: int = 256,
                      grid: MassGrid | None = None) -> InitialData:
    """Build normalized initial data on a uniform (or given) mass grid."""
    profile = profile or ProfileSpec()
    grid = grid or MassGrid.uniform(M)
    x, h = grid.nodes, grid.widths
    N, a0 = p.N, p.a0
    if profile.kind == "power-law" and profile.modulation == 0.0:
        r = _radii_power_law(p, x.copy())
        amplitude = power_law_amplitude(p)
    elif profile.kind == "uniform":
        r = a0 * x ** (1.0 / N)
        amplitude = N / a0**N
    else:
        if profile.kind == "custom":
            f = profile.density
        else:
            eps = profile.modulation

            def f(y):
                return (a0 - y) ** p.sigma * (1.0 + eps * np.cos(np.pi * y / a0))
        r, amplitude = _radii_custom(p, f, x.copy())
    rho = N * h / np.diff(r**N)
    if not np.all(np.isfinite(rho)) or np.any(rho <= 0):
        raise ValueError("density profile produced non-positive cell densities")

    vel = profile.velocity
    if isinstance(vel, VelocitySpec):
        u = vel(r, x, a0)
    else:
        u = np.asarray(vel(r), dtype=float) * np.ones_like(r)
    if u[0] != 0.0:
        raise ValueError(f"u0 must vanish at the centre r = 0 (u(0, t) = 0), got {u[0]}")
    if not np.all(np.isfinite(u)):
        raise ValueError("initial velocity is not finite")

    data = InitialData(grid, rho, u, r, profile.kind, float(np.sum(h)), amplitude)
    if profile.kind != "uniform":
        for check in (_pinch_sigma(data, p), _pinch_beta(data, p)):
            if not check.passed:
                raise ValueError(
                    f"initial density violates the {check.check_id} bounds at cell "
                    f"{check.detail.get('first_cell')} (rho_star_lo={p.rho_star_lo}, "
                    f"rho_star_hi={p.rho_star_hi}, amplitude K={amplitude:.6g})"
                )
    return data


def eulerian_cell_volumes(r: np.ndarray, N: int) -> np.ndarray:
    """Cell volumes divided by the unit-sphere area: (r_{i+1}^N - r_i^N) / N."""
    return np.diff(r**N) / N


def _pinch_sigma(d: InitialData, p: Params) -> CheckResult:
    a = d.r0[-1]
    hi_dist = (a - d.r0[:-1]) ** p.sigma
    lo_dist = np.clip(a - d.r0[1:], 0.0, None) ** p.sigma
    return _pinch_result("pinch-sigma", d.rho0, p.rho_star_lo * lo_dist, p.rho_star_hi * hi_dist,
                         "eulerian pinch")


def _pinch_beta(d: InitialData, p: Params) -> CheckResult:
    lo_c, hi_c = p.lagrangian_pinch()
    x = d.grid.nodes
    lower = 0.5 * lo_c * (1.0 - x[1:]) ** p.beta
    upper = 2.0 * hi_c * (1.0 - x[:-1]) ** p.beta
    return _pinch_result("pinch-beta", d.rho0, lower, upper, "lagrangian pinch")


def _pinch_result(cid: str, rho: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                  anchor: str) -> CheckResult:
    # cell averages must lie between the pinch envelope's extremes over the cell
    excess = np.maximum((lower - rho) / np.maximum(lower, 1e-300), (rho - upper) / upper)
    bad = np.flatnonzero(excess > 0)
    return CheckResult.compare(
        cid, float(max(excess.max(), 0.0)), 0.0, anchor,
        violations=int(bad.size), first_cell=int(bad[0]) if bad.size else None,
        lower_failures=int(np.count_nonzero(rho < lower)),
        upper_failures=int(np.count_nonzero(rho > upper)),
    )


def data_norms(d: InitialData, p: Params, region: RegionSpec | None = None) -> dict[str, float]:
    """Discrete versions of the weighted data norms required of the initial data."""
    region = region or RegionSpec()
    x, h, w = d.grid.nodes, d.grid.widths, d.grid.node_weights
    xc = d.grid.cells
    N, th = p.N, p.theta
    rho, u, r = d.rho0, d.u0, d.r0
    rb = 0.5 * (r[:-1] + r[1:])
    ux = np.diff(u) / h
    with np.errstate(divide="ignore", invalid="ignore"):
        flux = rho ** (1 + th) * rb ** (N - 1) * ux                 # cells
        dflux = np.diff(flux) / w[1:-1]                             # interior nodes
        rho_n = np.interp(x, xc, rho)
        q = np.sqrt(rho_n) * r ** (N - 1) * u                       # nodes
        dq = np.diff(q) / h
    outer_n = x >= region.x2
    outer_c = xc >= region.x2
    inner_n = x <= region.x1
    norms = {
        "stress_flux_x_L2": float(np.sum(w[1:-1][outer_n[1:-1]] * dflux[outer_n[1:-1]] ** 2)),
        "weighted_velocity_H1": float(np.sum(w[outer_n] * q[outer_n] ** 2)
                                      + np.sum(h[outer_c] * dq[outer_c] ** 2)),
        "u_4m_L1": float(np.sum(w[outer_n] * u[outer_n] ** (4 * int(p.m)))),
        "u_L2": float(np.sum(w * u**2)),
        "pressure_L2": float(np.sum(h * rho ** (p.gamma - 1.0))),
    }
    # H^3-type difference quotients on the inner region
    for name, f, pts in (("rho", rho[xc <= region.x1], xc[xc <= region.x1]),
                         ("u", u[inner_n], x[inner_n])):
        total = np.mean(f**2)
        for _ in range(3):
            if f.size < 2:
                break
            f = np.diff(f) / np.diff(pts)
            pts = 0.5 * (pts[1:] + pts[:-1])
            total += np.mean(f**2)
        norms[f"{name}_H3_inner"] = float(total * region.x1)
    return norms


def validate_initial_data(d: InitialData, p: Params,
                          region: RegionSpec | None = None) -> VerificationReport:
    report = VerificationReport()
    x = d.grid.nodes
    report.add(CheckResult.compare(
        "grid", 0.0 if (x[0] == 0.0 and x[-1] == 1.0 and np.all(np.diff(x) > 0)) else 1.0,
        0.0, "mass grid"))
    mass = float(np.sum(d.rho0 * eulerian_cell_volumes(d.r0, p.N)))
    report.add(CheckResult.compare("mass", abs(mass - 1.0), MASS_RTOL, "normalized mass", mass=mass))
    report.add(CheckResult.compare("center-velocity", abs(float(d.u0[0])), 0.0, "centre condition"))
    if d.profile_kind == "uniform":
        for cid, anchor in (("pinch-sigma", "eulerian pinch"),
                           ("pinch-beta", "lagrangian pinch")):
            report.add(CheckResult(cid, INCONCLUSIVE, float("nan"), 0.0, anchor,
                                   {"skipped": "uniform transform-test profile"}))
    else:
        report.add(_pinch_sigma(d, p))
        report.add(_pinch_beta(d, p))
    norms = data_norms(d, p, region)
    finite = all(math.isfinite(v) for v in norms.values())
    report.add(CheckResult.compare("weighted-norms", 0.0 if finite else math.inf, 0.0, "data norms",
                                   **norms))
    return report
