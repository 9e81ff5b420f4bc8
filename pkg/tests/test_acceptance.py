"""Acceptance criteria 1-14.

Each test records one PASS/FAIL line (printed in the terminal summary) and
then asserts.  Expensive quantities (couplings, critical temperatures,
sweeps) are computed once per session.
"""

from functools import lru_cache

import numpy as np
import pytest

from cebcs.cli import fit_scaling
from cebcs.kernel import GaugeGrid, pair_kernel
from cebcs.model import ModelParams, build_uniform_levels, calibrate_g
from cebcs.oracle import canonical_spectrum, exact_canonical, pair_space_trace, pbcs_minimize
from cebcs.solvers import SolverConfig, minimize_ce_bcs, paired_seed, solve_gce_bcs
from cebcs.thermo import critical_temperature, heat_capacity, inflections, solve_scheme, sweep
from cebcs.variation import Evaluation

from conftest import nearest_even_number, random_state, record

LAMBDA = 10.0
N_LIST = (10, 16, 26, 40, 56)
RESOLUTION = 1e-3
# order parameter per scheme: Delta^av for GCE and CE; parity uses the pairing measure,
# since its normal state keeps a parity-correlation tail in Delta^av
ORDER = {"gce": "delta_av", "ce": "delta_av", "parity": "pairing"}
BRACKET = {"gce": (0.2, 1.5), "ce": (0.3, 3.0), "parity": (0.2, 3.0)}
TIGHT = SolverConfig(tol_state=1e-12, tol_grad=1e-9)

pytestmark = pytest.mark.acceptance


@lru_cache(maxsize=None)
def system(omega, n=None):
    n = n or omega
    levels = build_uniform_levels(omega, LAMBDA)
    return levels, ModelParams(calibrate_g(levels, n), n)


@lru_cache(maxsize=None)
def tcrit(scheme, n):
    levels, model = system(n)
    lo, hi = BRACKET[scheme]
    return critical_temperature(scheme, model, levels, lo, hi, resolution=RESOLUTION,
                                order=ORDER[scheme])


@lru_cache(maxsize=None)
def heat_sweep(scheme, n=26, dT=0.025):
    levels, model = system(n)
    T = np.round(np.arange(0.05, 1.6 + 1e-9, dT), 6)
    return T, sweep(scheme, model, levels, T)


@lru_cache(maxsize=None)
def peierls_sweep(omega):
    levels, model = system(omega)
    T = np.round(np.arange(0.05, 2.0 + 1e-9, 0.05), 6)
    reps = sweep("ce", model, levels, T, bidirectional=False)
    return T, reps, exact_canonical(levels, model, T)


def test_criterion_01_calibration_round_trip():
    levels, model = system(26)
    rep = solve_gce_bcs(model, levels, 1e-4)
    ok = abs(rep.delta_av - 1.0) <= 1e-3 and rep.converged
    record(1, ok, f"Delta_G(T=1e-4) = {rep.delta_av:.6f} (g = {model.g:.10f})")
    assert ok


def test_criterion_02_gce_critical_temperature():
    tc = tcrit("gce", 26)
    ok = abs(tc.T_cr - 0.6) <= 0.05 and tc.converged
    record(2, ok, f"T^cr_G(26) = {tc.T_cr:.4f} +- {tc.resolution / 2:.1e}")
    assert ok


def test_criterion_03_gce_bulk_convergence():
    a, b = tcrit("gce", 26), tcrit("gce", 56)
    diff = abs(b.T_cr - a.T_cr)
    ok = diff < 0.02
    record(3, ok, f"|T^cr_G(56) - T^cr_G(26)| = {diff:.4f} ({b.T_cr:.4f} vs {a.T_cr:.4f})")
    assert ok


def test_criterion_04_critical_temperature_ordering():
    rows, ok = [], True
    for n in (10, 26):
        c, p, g = tcrit("ce", n), tcrit("parity", n), tcrit("gce", n)
        ok &= c.T_cr > p.T_cr > g.T_cr and c.converged and p.converged and g.converged
        # diagnostic: the parity Delta^av tail at T^cr_C (nonzero, so the strict threshold
        # on Delta^av alone would place T^cr_pi above T^cr_C)
        levels, model = system(n)
        tail = solve_scheme("parity", model, levels, c.T_cr).delta_av
        rows.append(f"n={n}: C {c.T_cr:.4f} > pi {p.T_cr:.4f} > G {g.T_cr:.4f} "
                    f"[Delta^av_pi(T^cr_C) = {tail:.3f}]")
    shift = [tcrit("ce", n).T_cr - tcrit("gce", n).T_cr for n in (10, 26)]
    ok &= shift[1] < shift[0]
    record(4, ok, "; ".join(rows) + f"; C-G shift {shift[0]:.4f} -> {shift[1]:.4f}")
    assert ok


def test_criterion_05_scaling_fit():
    T_inf = tcrit("gce", max(N_LIST)).T_cr
    pts = [tcrit("ce", n) for n in N_LIST]
    fit = fit_scaling(N_LIST, [p.T_cr for p in pts], T_inf)
    ok = 0.6 <= fit.b <= 0.9 and 4 <= fit.a <= 10 and not fit.degenerate
    detail = ", ".join(f"{p.n}:{p.T_cr:.4f}" for p in pts)
    record(5, ok, f"a = {fit.a:.2f} +- {fit.a_err:.2f}, b = {fit.b:.3f} +- {fit.b_err:.3f} "
                  f"(T_inf = {T_inf:.4f}; T^cr_C {detail})")
    assert ok


def test_criterion_06_oracle_accuracy_hierarchy():
    levels, model = system(10)
    T_grid = (0.2, 0.4, 0.6)
    exact = exact_canonical(levels, model, T_grid)
    t_c = tcrit("ce", 10).T_cr
    ok, rows = True, []
    for i, T in enumerate(T_grid):
        err = {s: abs(solve_scheme(s, model, levels, T).bb - exact.bb[i])
               for s in ("ce", "gce", "vbp", "parity")}
        good = T < t_c and err["ce"] < min(err["gce"], err["vbp"], err["parity"])
        ok &= good
        rows.append(f"T={T}: " + " ".join(f"{s} {e:.3f}" for s, e in err.items()))
    record(6, ok, "|<B^dag B> - exact|: " + "; ".join(rows))
    assert ok


def test_criterion_07_peierls_inequality():
    worst, violations, points, unconverged = np.inf, 0, 0, 0
    for omega in (4, 8, 10, 12):
        T, reps, exact = peierls_sweep(omega)
        for r, F in zip(reps, exact.F):
            if not r.converged:
                unconverged += 1
                continue
            points += 1
            worst = min(worst, r.F - F)
            violations += r.F - F < -1e-8
    ok = violations == 0 and points > 0
    record(7, ok, f"{violations} violations over {points} converged points "
                  f"({unconverged} unconverged); min(F~_C - F) = {worst:.3e}")
    assert ok


def _fd(func, x, h=1e-5):
    out = np.empty_like(x)
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (func(xp) - func(xm)) / (2 * h)
    return out


def test_criterion_08_gradient_master_test():
    rng = np.random.default_rng(8)
    worst = 0.0
    for trial in range(200):
        omega = int(rng.choice([3, 4, 6]))
        state = random_state(rng, omega, symmetric=False)
        n = nearest_even_number(state)
        levels = build_uniform_levels(omega, rng.uniform(1.0, 10.0))
        model = ModelParams(rng.uniform(0.1, 2.0), n, mu=rng.uniform(-0.5, 0.5))
        grid = GaugeGrid.full(n, omega)
        ev = Evaluation(state, grid, levels, model)

        def F_v(v):
            return Evaluation(type(state)(v=v, f=state.f, T=state.T, fbar=state.fbar),
                              grid, levels, model).F

        def F_f(x):
            return Evaluation(type(state)(v=state.v, f=x[:omega], T=state.T, fbar=x[omega:]),
                              grid, levels, model).F

        for analytic, fd in ((ev.grad_v(), _fd(F_v, state.v.copy())),
                             (ev.grad_f(), _fd(F_f, np.concatenate([state.f, state.fbar])))):
            rel = np.max(np.abs(analytic - fd)) / max(np.max(np.abs(fd)), 1e-300)
            worst = max(worst, rel)
    ok = worst < 1e-5
    record(8, ok, f"200 random states, max relative |analytic - FD| = {worst:.2e} (h = 1e-5)")
    assert ok


def test_criterion_09_projection_identities():
    dev_n = dev_var = 0.0
    count = 0
    reports = [r for om in (4, 8, 10, 12) for r in peierls_sweep(om)[1]] + list(heat_sweep("ce")[1])
    for r in reports:
        if r.converged:
            count += 1
            dev_n = max(dev_n, abs(r.number - r.n))
            dev_var = max(dev_var, abs(r.number_variance))
    levels, model = system(10)
    dT = 0.01
    shift = 0.0
    for T in (0.3, 0.8, 1.5):
        obs = []
        for mu in (0.0, 0.5, -0.5):
            m = model.with_mu(mu)
            mid = minimize_ce_bcs(m, levels, T, config=TIGHT)
            up = minimize_ce_bcs(m, levels, T + dT, config=TIGHT, init=mid)
            dn = minimize_ce_bcs(m, levels, T - dT, config=TIGHT, init=mid)
            obs.append(np.array([mid.delta_av, mid.qp_number, (up.E - dn.E) / (2 * dT)]))
        shift = max(shift, np.max(np.abs(obs[1] - obs[0])), np.max(np.abs(obs[2] - obs[0])))
    ok = dev_n < 1e-8 and dev_var < 1e-8 and shift < 1e-6
    record(9, ok, f"{count} CE points: max|<N>-n| = {dev_n:.1e}, max Var(N) = {dev_var:.1e}; "
                  f"mu +-0.5 changes (Delta^av, <N>_qp, C) by {shift:.1e}")
    assert ok


def test_criterion_10_gce_reduction():
    levels, model = system(10)
    keys = ("F", "E", "S", "delta_av", "qp_number", "bb", "number", "number_variance")
    worst = 0.0
    for T in np.round(np.arange(0.1, 1.6 + 1e-9, 0.1), 6):
        g = solve_gce_bcs(model, levels, T)
        # start away from the GCE minimum so the reduction is not trivially inherited
        c = minimize_ce_bcs(model, levels, T, GaugeGrid.none(model.n),
                            init=paired_seed(levels, model, T, 1.0), config=TIGHT)
        worst = max(worst, *(abs(getattr(g, k) - getattr(c, k)) for k in keys),
                    np.max(np.abs(g.occupations - c.occupations)))
    ok = worst < 1e-9
    record(10, ok, f"single-node CE vs GCE over T in [0.1, 1.6]: max deviation {worst:.1e}")
    assert ok


def test_criterion_11_zero_temperature_limit():
    levels, model = system(4)
    ce = minimize_ce_bcs(model, levels, 1e-3)
    e_pbcs, _ = pbcs_minimize(levels, model, ce.v)
    e0 = min(np.min(sec.energies) for sec in canonical_spectrum(levels, model).sectors)
    rel = abs(ce.F - e0) / abs(e0)
    ok = abs(ce.E - e_pbcs) < 1e-5 and rel < 0.02 and ce.converged
    record(11, ok, f"E_C = {ce.E:.8f}, E_PBCS = {e_pbcs:.8f}; F~_C vs exact E_0 = {e0:.6f} "
                   f"rel {rel:.1e}")
    assert ok


def test_criterion_12_heat_capacity_structure():
    rows, ok = [], True
    for scheme in ("ce", "gce"):
        T, reps = heat_sweep(scheme)
        dT = T[1] - T[0]
        hc = heat_capacity(T, [r.E for r in reps], [r.converged for r in reps])
        t_c = tcrit(scheme, 26).T_cr
        near = [j for j in hc.jumps if abs(j[0] - t_c) <= 2 * dT]
        good = len(near) == 1 and near[0][1] < 0
        text = f"{scheme}: jumps {[(round(a, 4), round(b, 2)) for a, b in hc.jumps]} vs T^cr {t_c:.4f}"
        if scheme == "ce":
            low = inflections(T, hc.C, T_max=t_c - 2 * dT)
            good &= len(low) > 0
            text += f", inflections below T^cr {low}"
        ok &= good
        rows.append(text)
    record(12, ok, "; ".join(rows))
    assert ok


def test_criterion_13_quasiparticle_number_ordering():
    levels, model = system(26)
    ok, rows = True, []
    for T in (0.1, 0.2, 0.3):
        q = {s: solve_scheme(s, model, levels, T).qp_number for s in ("ce", "parity", "gce")}
        ok &= q["ce"] <= q["parity"] + 1e-6 and q["parity"] <= q["gce"] + 1e-6
        rows.append(f"T={T}: C {q['ce']:.2e} <= pi {q['parity']:.2e} <= G {q['gce']:.2e}")
    record(13, ok, "; ".join(rows))
    assert ok


def test_criterion_14_kernel_oracle():
    rng = np.random.default_rng(14)
    worst = 0.0
    for _ in range(1000):
        state = random_state(rng, 1, T=rng.uniform(0.05, 3.0), symmetric=False)
        phi = rng.uniform(0, 2 * np.pi)
        pk = pair_kernel(state, 0, phi)
        norm, rho, rho_bar, kappa, kappa_bar = pair_space_trace(
            state.u[0], state.v[0], state.f[0], state.fbar[0], state.T, phi, dps=40)
        ref = (norm * np.exp(1j * phi), rho, rho_bar, kappa, kappa_bar)
        got = (pk["zeta"], pk["rho"], pk["rho_bar"], pk["kappa"], pk["kappa_bar"])
        worst = max(worst, max(abs(a - b) for a, b in zip(got, ref)))
    doubling = 0.0
    for omega in (3, 6, 10, 26):
        levels = build_uniform_levels(omega, LAMBDA)
        for _ in range(5):
            state = random_state(rng, omega, symmetric=False)
            n = nearest_even_number(state)
            model = ModelParams(rng.uniform(0.2, 1.5), n)
            grid = GaugeGrid.full(n, omega)
            a = Evaluation(state, grid, levels, model)
            b = Evaluation(state, GaugeGrid.full(n, omega, 2 * len(grid)), levels, model)
            for key in ("E", "bb", "S", "occupations", "occupations_bar", "fC", "number"):
                doubling = max(doubling, np.max(np.abs(np.asarray(getattr(a, key))
                                                       - np.asarray(getattr(b, key)))))
    ok = worst < 1e-12 and doubling < 1e-12
    record(14, ok, f"1000 kernels: max |kernel - trace| = {worst:.1e}; grid doubling {doubling:.1e}")
    assert ok
