import numpy as np
import pytest

from cebcs.model import ModelParams, build_uniform_levels
from cebcs.solvers import ThermalReport
from cebcs.thermo import (NoTransition, critical_temperature, heat_capacity, inflections,
                          order_parameter, sweep)


def test_heat_capacity_of_smooth_energy():
    T = np.linspace(0.1, 2.0, 96)
    hc = heat_capacity(T, T ** 3)
    # central differences are exact up to h^2 F''' / 6 = h^2
    assert np.allclose(hc.C[1:-1], 3 * T[1:-1] ** 2, atol=1.1 * (T[1] - T[0]) ** 2)
    assert hc.jumps == []


def test_heat_capacity_detects_a_jump():
    T = np.linspace(0.1, 2.0, 96)
    E = np.where(T < 1.0, 1.5 * T ** 2, 0.5 * T + 1.0)  # C drops from 3 to 0.5
    hc = heat_capacity(T, E)
    assert len(hc.jumps) == 1
    loc, size = hc.jumps[0]
    assert loc == pytest.approx(1.0, abs=0.05)
    assert size < -2.0


def test_heat_capacity_excludes_unconverged_points():
    T = np.linspace(0.1, 1.0, 10)
    ok = np.ones(10, bool)
    ok[4] = False
    hc = heat_capacity(T, T ** 2, ok)
    assert np.isnan(hc.C[4]) and hc.excluded == [pytest.approx(T[4])]


def test_inflection_of_s_curve():
    T = np.linspace(0.05, 1.0, 200)
    C = 1 / (1 + np.exp(-(T - 0.4) / 0.05))
    pts = inflections(T, C)
    assert len(pts) == 1 and pts[0] == pytest.approx(0.4, abs=0.01)
    assert inflections(T, C, T_max=0.3) == []


def _rep(delta_av, dt):
    z = np.zeros(1)
    return ThermalReport("parity", 2, 1.0, 0.0, 0.0, 0.0, delta_av, dt, dt, 0.0, 0.0, z, z, z,
                         True, 0, 0.0)


def test_order_parameters():
    r = _rep(0.2, 0.0)
    assert order_parameter(r) == 0.2
    assert order_parameter(r, "delta_tilde") == 0.0
    assert order_parameter(r, "pairing") == 0.0
    with pytest.raises(ValueError):
        order_parameter(r, "gap")


def test_gce_critical_temperature_and_no_transition():
    levels = build_uniform_levels(6, 5.0)
    model = ModelParams(1.5, 6)
    tc = critical_temperature("gce", model, levels, 0.05, 3.0, resolution=1e-3)
    assert tc.converged and tc.bracket[1] - tc.bracket[0] <= 1e-3
    assert tc.bracket[0] < tc.T_cr < tc.bracket[1]
    with pytest.raises(NoTransition) as err:
        critical_temperature("gce", model.with_g(0.0), levels, 0.05, 3.0)
    assert err.value.lo[0] == 0.05 and err.value.hi[0] == 3.0


def test_sweep_is_sorted_and_continued(small_system):
    levels, model = small_system
    T = [0.9, 0.3, 0.6]
    reps = sweep("ce", model, levels, T)
    assert [r.T for r in reps] == [0.3, 0.6, 0.9]
    assert all(r.converged for r in reps)
    assert all(a.delta_av >= b.delta_av for a, b in zip(reps, reps[1:]))
