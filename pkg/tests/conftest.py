"""Shared fixtures: the Saint-Venant refinement runs and the acceptance summary."""
from __future__ import annotations

import time

import numpy as np
import pytest

from freebound import Params, ProfileSpec, VelocitySpec, make_initial_data
from freebound.solver import horizon_estimates, run
from freebound.verify import run_suite

GRIDS = (128, 256, 512)
BUMP = 1e-6

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    n = marker.args[0]
    note = "; ".join(v for k, v in item.user_properties if k == "summary")
    status = "PASS" if rep.passed else "FAIL"
    prev = _CRITERIA.get(n)
    if prev is not None and prev[0] == "FAIL":
        status = "FAIL"
    _CRITERIA[n] = (status, "; ".join(s for s in (prev[1] if prev else "", note) if s))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, note = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {note}")


@pytest.fixture(scope="session")
def sv_params() -> Params:
    return Params(N=2, gamma=2.0, theta=1.0, sigma=0.5, m=2, rho_star_lo=2.5, rho_star_hi=4.0)


@pytest.fixture(scope="session")
def sv_horizon(sv_params) -> float:
    fine = make_initial_data(sv_params, M=max(GRIDS))
    return 0.5 * horizon_estimates(fine, sv_params).T1a


def _study(p: Params, H: float, profile: ProfileSpec | None = None):
    out, seconds = {}, {}
    for M in GRIDS:
        data = make_initial_data(p, profile, M=M)
        mon = horizon_estimates(data, p)
        t0 = time.perf_counter()
        out[M] = run(data, p, H, monitors=mon, stride=H / (M / 4))
        seconds[M] = time.perf_counter() - t0
    return out, seconds


@pytest.fixture(scope="session")
def sv_study(sv_params, sv_horizon):
    return _study(sv_params, sv_horizon)


@pytest.fixture(scope="session")
def sv_trajs(sv_study):
    return sv_study[0]


@pytest.fixture(scope="session")
def sv_reports(sv_trajs):
    return {M: run_suite(t) for M, t in sv_trajs.items()}


@pytest.fixture(scope="session")
def sv_perturbed(sv_params, sv_horizon):
    prof = ProfileSpec(velocity=VelocitySpec(bump_amplitude=BUMP))
    return _study(sv_params, sv_horizon, prof)[0]


@pytest.fixture(scope="session")
def sv_small(sv_params):
    """A short M=64 run for the cheaper unit tests."""
    data = make_initial_data(sv_params, M=64)
    mon = horizon_estimates(data, sv_params)
    return run(data, sv_params, 0.25 * mon.T1a, monitors=mon, stride=0.25 * mon.T1a / 16)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
