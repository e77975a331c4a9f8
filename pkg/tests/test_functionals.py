import numpy as np
import pytest

from freebound import (LagrangianState, MassGrid, Params, ProfileSpec, RegionSpec, bd_entropy, bound_margins,
                       energy, functional_report, make_initial_data, mass, velocity_moments)
from freebound.functionals import bd_effective_velocity, dissipation_increment, kinetic_energy
from oracles import dissipation_loop, manufactured_state, power_law_bd_entropy, power_law_energy


def uniform_state(M=64, u=None):
    p = Params()
    st = make_initial_data(p, ProfileSpec(kind="uniform"), M=M).state()
    st = st.replace(rho=np.full(M, 2.0))
    return p, st if u is None else st.replace(u=u)


def smooth(M, N=2, theta=1.0):
    x, rho, u, r = manufactured_state(M, N, lambda y: 2 - y, lambda y: np.sin(np.pi * y / 2) * y)
    return LagrangianState(0.0, rho, u, r, float(r[-1]), MassGrid(x))


def test_energy_uniform():
    p, st = uniform_state()
    assert energy(st, p) == pytest.approx(2.0, rel=1e-14)


def test_kinetic_scaling():
    p, st = uniform_state(32)
    u = np.sin(np.pi * st.x)
    u[0] = 0
    k1 = kinetic_energy(st.replace(u=u))
    k3 = kinetic_energy(st.replace(u=3 * u))
    assert k3 == pytest.approx(9 * k1, rel=1e-15)
    assert energy(st.replace(u=3 * u), p) - energy(st, p) == pytest.approx(k3, rel=1e-13)


def test_initial_energy_against_quadrature(sv_params):
    d = make_initial_data(sv_params, M=16384)
    E = energy(d.state(), sv_params)
    assert E == pytest.approx(power_law_energy(2, 2.0, 0.5), rel=1e-6)


def test_dissipation_zero_velocity(sv_params):
    st = make_initial_data(sv_params, M=32).state()
    assert all(v == 0 for v in dissipation_increment(st, sv_params))


def test_dissipation_tiny_grid_oracle():
    st = smooth(8)
    got = dissipation_increment(st, Params())
    want = dissipation_loop(st.rho, st.u, st.r, st.x, 2, 1.0)
    np.testing.assert_allclose(got, want, rtol=1e-13)


@pytest.mark.parametrize("N,theta", [(2, 0.8), (3, 0.9), (3, 1.4)])
def test_dissipation_oracle_other_parameters(N, theta):
    st = smooth(12, N)
    p = Params(N=N, theta=theta, gamma=2.0)
    np.testing.assert_allclose(dissipation_increment(st, p),
                               dissipation_loop(st.rho, st.u, st.r, st.x, N, theta), rtol=1e-13)


@pytest.mark.parametrize("M", [32, 128, 256])
def test_decompositions_agree(M):
    # at theta = 1 the two splittings of the midpoint integrand coincide cell by cell
    d = dissipation_increment(smooth(M), Params())
    assert d.gradient_pair == pytest.approx(d.divergence_pair, rel=1e-12)


def test_bd_velocity_uniform_density():
    p, st = uniform_state(16)
    u = 0.1 * st.x * (1 - st.x)
    v = bd_effective_velocity(st.replace(u=u), p)
    np.testing.assert_array_equal(v[:-1], u[:-1])


def test_bd_velocity_power_law(sv_params):
    d = make_initial_data(sv_params, M=1024)
    st = d.state()
    v = bd_effective_velocity(st, sv_params)
    sel = (st.x >= 0.25) & (st.x <= 0.9)
    # theta = 1: r^{N-1} rho_x = rho_r / rho = -sigma / (a0 - r)
    exact = -0.5 / (1 - st.r[sel])
    np.testing.assert_allclose(v[sel] - st.u[sel], exact, rtol=1e-4)


def test_bd_entropy_uniform_zero():
    p, st = uniform_state()
    assert bd_entropy(st, RegionSpec(), p).value == 0.0


def test_bd_entropy_power_law(sv_params):
    st = make_initial_data(sv_params, M=1024).state()
    val = bd_entropy(st, RegionSpec(x_cut=0.9), sv_params).value
    assert val == pytest.approx(power_law_bd_entropy(2, 1.0, 0.5, 0.9), rel=1e-4)


def test_bd_entropy_monotone_in_cut(sv_params):
    st = make_initial_data(sv_params, M=128).state()
    vals = [bd_entropy(st, RegionSpec(x_cut=c), sv_params).value for c in (0.6, 0.75, 0.9, 0.95)]
    assert np.all(np.diff(vals) > 0)


def test_bd_entropy_cut_must_stay_inside():
    with pytest.raises(ValueError):
        RegionSpec(x_cut=1.0)


def test_moments_definitions():
    p, st = uniform_state(40)
    reg = RegionSpec()
    assert velocity_moments(st, reg, p, 3) == 0.0
    c = st.replace(u=np.full(41, 0.7))
    for k in range(1, 5):
        assert velocity_moments(c, reg, p, k) == pytest.approx(0.7 ** (2 * k) * 0.5, rel=1e-13)
    u = st.x**2
    k1 = velocity_moments(st.replace(u=u), reg, p, 1)
    x = st.x[st.x >= 0.5]
    assert k1 == pytest.approx(np.trapezoid(u[st.x >= 0.5] ** 2, x), rel=1e-14)
    with pytest.raises(ValueError):
        velocity_moments(st, reg, p, 5)
    with pytest.raises(ValueError):
        velocity_moments(st, reg, p, 0)


def test_margins_uniform_case():
    p, st = uniform_state(64)
    m = bound_margins(st, p, E0=2.0)
    assert m.radius == pytest.approx(1 - 2**-0.5, rel=1e-12)
    assert m.radius_nodes[0] == 0.0
    assert m.radius_violations == 0
    assert m.a_lower == pytest.approx(1 - 2**-0.5)
    assert m.a_upper == pytest.approx(1.0)


def test_margins_at_initial_time(sv_params):
    d = make_initial_data(sv_params, M=128)
    st = d.state()
    m = bound_margins(st, sv_params, energy(st, sv_params), rho0=d.rho0)
    assert m.ratio_min == m.ratio_max == 1.0
    assert m.envelope_min > 1 and m.envelope_max < 1


def test_mass_lagrangian_and_eulerian(sv_params):
    st = make_initial_data(sv_params, M=128).state()
    rep = mass(st, sv_params)
    assert rep.lagrangian == 1.0
    assert abs(rep.eulerian - 1.0) < 1e-4


def test_mass_corruption_detected(sv_params):
    st = make_initial_data(sv_params, M=64).state()
    x = st.x.copy()
    x[10:] += x[10] - x[9]
    with pytest.raises(ValueError):
        MassGrid(x)
    r = st.r.copy()
    r[11:] += r[11] - r[10]
    bad = st.replace(r=r)
    assert abs(mass(bad, sv_params).eulerian - 1.0) > 1e-3


def test_functional_report_row(sv_small, sv_params):
    s = sv_small.snapshots[-1]
    rep = functional_report(s, sv_params, sv_small.E0, sv_small.dissipation[-1],
                            initial=sv_small.snapshots[0])
    row = rep.as_row()
    assert list(row)[:6] == ["tau", "E", "D_radial", "D_gradient", "D_divergence", "D_shear"]
    assert [k for k in row if k.startswith("moment_")] == [f"moment_{k}" for k in range(1, 5)]
    assert rep.E > 0 and rep.mass == 1.0
