"""Invariants checked over generated states and parameters."""
import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from freebound import LagrangianState, MassGrid, Params, RegionSpec, energy, radius_from_mass, velocity_moments
from freebound.functionals import bd_effective_velocity, dissipation_increment
from freebound.model import validate_params
from freebound.solver import cfl_dtau, semi_discrete_rhs, step
from freebound.verify import separation
from oracles import rhs_loop

SETTINGS = settings(max_examples=60, deadline=None)

dims = st.sampled_from([2, 3])
coef = st.floats(-0.8, 0.8, allow_nan=False)


@st.composite
def states(draw, zero_velocity=False):
    N = draw(dims)
    M = draw(st.integers(4, 40))
    a, b, c = draw(coef), draw(coef), draw(st.floats(0.3, 3.0))
    k = draw(st.floats(-2.0, 2.0))
    x = np.linspace(0.0, 1.0, M + 1)
    xc = 0.5 * (x[:-1] + x[1:])
    rho = c * (1.0 + 0.5 * a * np.cos(np.pi * xc) + 0.4 * b * xc * (1 - xc))
    w = np.concatenate([[0.0], np.cumsum(N * np.diff(x) / rho)])
    r = w ** (1.0 / N)
    u = np.zeros(M + 1) if zero_velocity else k * np.sin(np.pi * x * draw(st.floats(0.2, 2.0)))
    u[0] = 0.0
    return N, LagrangianState(0.0, rho, u, r, float(r[-1]), MassGrid(x))


@st.composite
def params(draw, N):
    gamma = draw(st.floats(1.05, 3.0))
    theta = draw(st.floats(0.3, 2.0))
    return Params(N=N, gamma=gamma, theta=theta, sigma=draw(st.floats(0.1, 1.5)))


@SETTINGS
@given(st.data())
def test_energy_non_negative(data):
    N, s = data.draw(states())
    p = data.draw(params(N))
    assert energy(s, p) >= 0


@SETTINGS
@given(st.data())
def test_dissipation_non_negative_when_prefactor_positive(data):
    N, s = data.draw(states())
    p = data.draw(params(N))
    assume(p.theta > (N - 1) / N)
    d = dissipation_increment(s, p)
    assert all(v >= 0 for v in d)


@SETTINGS
@given(st.data())
def test_static_state_density_frozen(data):
    N, s = data.draw(states(zero_velocity=True))
    p = data.draw(params(N))
    drho, _, dr, da = semi_discrete_rhs(s, p)
    assert np.all(drho == 0) and np.all(dr == 0) and da == 0


@SETTINGS
@given(st.data())
def test_rhs_matches_loop_oracle(data):
    N, s = data.draw(states())
    p = data.draw(params(N))
    drho, du, _, _ = semi_discrete_rhs(s, p)
    o_rho, o_u, _ = rhs_loop(s.rho, s.u, s.r, s.x, N, p.gamma, p.theta)
    scale_rho = max(np.abs(o_rho).max(), 1e-300)
    scale_u = max(np.abs(o_u).max(), 1e-300)
    assert np.abs(drho - o_rho).max() <= 1e-12 * scale_rho
    assert np.abs(du - o_u).max() <= 1e-12 * scale_u


@SETTINGS
@given(st.data())
def test_step_preserves_structure(data):
    N, s = data.draw(states())
    p = data.draw(params(N))
    out = step(s, 0.5 * cfl_dtau(s, p), p)
    assert out.u[0] == 0.0 and out.r[0] == 0.0
    assert np.sum(out.grid.widths) == np.sum(s.grid.widths)
    assert out.a == out.r[-1]


@SETTINGS
@given(st.data())
def test_moment_log_convexity(data):
    N, s = data.draw(states())
    p = Params(N=N, m=3)
    reg = RegionSpec(x2=data.draw(st.floats(0.3, 0.7)))
    I = [velocity_moments(s, reg, p, k) for k in range(1, 7)]
    for k in range(1, 5):
        assert I[k] ** 2 <= I[k - 1] * I[k + 1] * (1 + 1e-12) + 1e-300


@SETTINGS
@given(st.data())
def test_moments_non_increasing_for_small_velocity(data):
    N, s = data.draw(states())
    s = s.replace(u=np.clip(s.u, -1.0, 1.0))
    p = Params(N=N, m=2)
    I = [velocity_moments(s, RegionSpec(), p, k) for k in range(1, 5)]
    assert all(b <= a * (1 + 1e-14) for a, b in zip(I, I[1:]))


@SETTINGS
@given(st.data())
def test_bd_velocity_uniform_density(data):
    N, s = data.draw(states())
    s = s.replace(rho=np.full(s.grid.M, s.rho[0]))
    p = data.draw(params(N))
    v = bd_effective_velocity(s, p)
    np.testing.assert_array_equal(v[:-1], s.u[:-1])


@SETTINGS
@given(st.data())
def test_radius_map_monotone_and_exact_at_nodes(data):
    N, s = data.draw(states())
    p = Params(N=N)
    xs = np.sort(np.array(data.draw(st.lists(st.floats(0, 1), min_size=2, max_size=20))))
    r = radius_from_mass(xs, s, p)
    assert np.all(np.diff(r) >= 0)
    np.testing.assert_allclose(radius_from_mass(s.x, s, p), s.r, rtol=1e-13, atol=1e-15)


@SETTINGS
@given(st.data())
def test_separation_vanishes_only_on_identity(data):
    N, s = data.draw(states())
    p = Params(N=N)
    assert separation(s, s, p) == (0.0, 0.0, 0.0)
    eps = data.draw(st.floats(1e-6, 1e-2))
    other = s.replace(u=s.u + eps * s.x)
    parts = separation(s, other, p)
    assert all(v >= 0 for v in parts) and sum(parts) > 0


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([2, 3]), st.floats(0.5, 4.0), st.floats(0.1, 3.0), st.floats(0.05, 2.0),
       st.integers(1, 6))
def test_admissibility_matches_inequalities(N, gamma, theta, sigma, m):
    p = Params(N=N, gamma=gamma, theta=theta, sigma=sigma, m=m)
    b = sigma / (1 + sigma)
    expected = (gamma > 1 and theta > (N - 1) / N and theta < gamma and b > 1 / (2 * gamma)
                and b < min(1 / (2 * theta), 1 / (1 + theta)) and b * (theta - 1) < 1 / 3
                and m > max(1 / (1 + b * theta - b), 1 / (4 - 4 * b)))
    assert validate_params(p).admissible == expected


@given(st.floats(0.01, 5.0), st.floats(0.01, 5.0))
def test_beta_increases_with_sigma(s1, s2):
    assume(s1 < s2)
    assert Params(sigma=s1).beta < Params(sigma=s2).beta


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_seventeen_digits_roundtrip(v):
    assert float("%.17g" % v) == v
