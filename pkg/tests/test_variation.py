import numpy as np
import pytest

from cebcs.kernel import GaugeGrid, VariationalState
from cebcs.model import ModelParams, build_uniform_levels
from cebcs.oracle import FockSpace
from cebcs.solvers import fd_gradient, minimize_ce_bcs
from cebcs.variation import (Evaluation, IllConditioned, f_c, solve_qp_energies, update_v)

from conftest import random_state


def _fd(func, x, h=1e-6):
    out = np.empty_like(x)
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (func(xp) - func(xm)) / (2 * h)
    return out


@pytest.mark.parametrize("kind", ["full", "parity", "none"])
def test_grad_v_and_grad_f(rng, three_level, kind):
    levels, model = three_level
    grid = GaugeGrid.make(kind, 2, 3)
    st = random_state(rng, 3, T=0.7, symmetric=False)
    ev = Evaluation(st, grid, levels, model)
    gv = _fd(lambda v: Evaluation(VariationalState(v=v, f=st.f, T=st.T, fbar=st.fbar), grid,
                                  levels, model).F, st.v.copy())
    ff = np.concatenate([st.f, st.fbar])
    gf = _fd(lambda x: Evaluation(VariationalState(v=st.v, f=x[:3], T=st.T, fbar=x[3:]), grid,
                                  levels, model).F, ff)
    assert np.allclose(ev.grad_v(), gv, atol=1e-7)
    assert np.allclose(ev.grad_f(), gf, atol=1e-7)


def test_projected_qp_occupations_match_fock(rng, three_level):
    levels, model = three_level
    fs = FockSpace(3)
    st = random_state(rng, 3, symmetric=False)
    got = f_c(st, GaugeGrid.full(2, 3), levels, model)
    assert np.allclose(got, fs.qp_occupations(st, 2), atol=1e-12)


def test_entropy_and_number_match_fock(rng, three_level):
    levels, model = three_level
    fs = FockSpace(3)
    st = random_state(rng, 3)
    ev = Evaluation(st, GaugeGrid.full(2, 3), levels, model)
    assert ev.S == pytest.approx(fs.entropy_tilde(st, 2), abs=1e-11)
    assert ev.number == pytest.approx(2.0, abs=1e-12)
    assert ev.number_variance == pytest.approx(0.0, abs=1e-10)


def test_minimum_is_fixed_point_of_qp_energy_equation(three_level):
    levels, model = three_level
    rep = minimize_ce_bcs(model, levels, 0.8, GaugeGrid.full(2, 3))
    assert rep.converged
    ev = Evaluation(rep.state(), GaugeGrid.full(2, 3), levels, model)
    assert np.allclose(solve_qp_energies(ev), rep.eps, atol=1e-6)
    assert np.allclose(update_v(ev.h_tilde, ev.delta_tilde), rep.v ** 2, atol=1e-7)


def test_normal_state_zero_mode_is_truncated():
    # v in {0, 1} is a number eigenstate in the pair sector: a uniform shift of eps is free
    levels = build_uniform_levels(4, 3.0)
    model = ModelParams(0.5, 4)
    st = VariationalState.from_eps(np.array([1.0, 1.0, 0.0, 0.0]), np.array([2.0, 1.0, 1.0, 2.0]), 0.6)
    ev = Evaluation(st, GaugeGrid.full(4, 4), levels, model)
    s = np.linalg.svd(ev.jacobian_levels(), compute_uv=False)
    assert s[-1] < 1e-10 * s[0]
    eps = solve_qp_energies(ev)
    assert np.all(np.isfinite(eps))


def test_ill_conditioned_is_linalg_error():
    assert issubclass(IllConditioned, np.linalg.LinAlgError)


def test_update_v_limits():
    v = update_v(np.array([1.0, -1.0, 0.0, 2.0]), np.array([0.0, 0.0, 0.0, 2.0]))
    assert np.allclose(v, [0.0, 1.0, 0.5, 0.5 * (1 - 1 / np.sqrt(2))])


def test_fd_gradient_matches_analytic(rng, small_system):
    levels, model = small_system
    st = random_state(rng, 4, T=0.6)
    ev = Evaluation(st, GaugeGrid.full(4, 4), levels, model)
    analytic = np.concatenate([ev.grad_theta(), ev.grad_eps()])
    assert np.allclose(fd_gradient(ev), analytic, atol=1e-6 * max(1, np.max(np.abs(analytic))))
