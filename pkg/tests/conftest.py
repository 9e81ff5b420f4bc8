import numpy as np
import pytest

from cebcs.kernel import VariationalState
from cebcs.model import ModelParams, build_uniform_levels, calibrate_g


def random_state(rng, omega, T=None, symmetric=True):
    """Admissible random trial state: v in (0.05, 0.95), f in (0.02, 0.6)."""
    T = T if T is not None else rng.uniform(0.2, 1.5)
    v = rng.uniform(0.05, 0.95, omega)
    f = rng.uniform(0.02, 0.6, omega)
    fbar = None if symmetric else rng.uniform(0.02, 0.6, omega)
    return VariationalState(v=v, f=f, T=T, fbar=fbar)


def nearest_even_number(state):
    """Even particle number closest to the unprojected mean <N> of ``state`` (kept in (0, 2 omega))."""
    v2 = state.v ** 2
    nbar = np.sum(v2 * (1 - state.f - state.fbar) + state.f) + np.sum(v2 * (1 - state.f - state.fbar) + state.fbar)
    return int(np.clip(2 * round(nbar / 2), 2, 2 * state.omega - 2))


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, passed: bool, detail: str):
    ACCEPTANCE[criterion] = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_system():
    """Omega = n = 4 with the coupling calibrated to a unit zero-T gap."""
    levels = build_uniform_levels(4, 10.0)
    return levels, ModelParams(calibrate_g(levels, 4), 4)


@pytest.fixture(scope="session")
def three_level():
    levels = build_uniform_levels(3, 2.0)
    return levels, ModelParams(0.9, 2, mu=0.3)
