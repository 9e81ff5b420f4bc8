"""Finite-temperature pairing solvers: GCE-BCS, parity-projected, CE-BCS and VBP.

All schemes share one functional, ``F~ = E_C - T S~_C`` evaluated on a gauge
grid; they differ only in the grid (``none``, ``parity``, ``full``) and in
whether (v, f) are re-optimized after projection (VAP) or taken from the
grand-canonical minimum (VBP).

The minimizer works in the variables (theta_k, eps_k) with v_k = sin(theta_k)
and f_k = 1/(e^{eps_k/T} + 1).  Each iteration proposes the self-consistent
update (eps from the linear quasiparticle-energy equation, theta from the
effective gap and field) with under-relaxation; the step is accepted only if
F~ does not increase.  When the fixed-point residual stalls (at low T the
eps map cycles because single quasiparticles flip number parity) a Newton
step on the residual is tried, and slow but steady progress is extrapolated.
Steepest descent with backtracking is the last resort.  Convergence needs a
small analytic gradient and either a small residual or F~ flat to rounding
over a window of iterations; it is then confirmed with a central
finite-difference gradient.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import expit

from .kernel import GaugeGrid, ProjectionError, VariationalState
from .model import LevelScheme, ModelParams, gce_solution
from .variation import Evaluation, IllConditioned, solve_qp_energies

__all__ = [
    "SolverConfig",
    "ThermalReport",
    "observables",
    "solve_gce_bcs",
    "minimize_ce_bcs",
    "solve_parity_bcs",
    "vbp_evaluate",
    "paired_seed",
    "SCHEMES",
]

log = logging.getLogger(__name__)

SCHEMES = ("gce", "parity", "ce", "vbp")
_GRID_SCHEME = {"none": "gce", "parity": "parity", "full": "ce"}
RADICAND_ROUNDING = 64 * np.finfo(float).eps
# rounding slack for the monotone-descent test, relative to max(1, |F|)
DESCENT_SLACK = 1e-13
STALL_WINDOW = 25


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 5000
    tol_state: float = 1e-9
    tol_grad: float = 1e-6
    mixing: float = 0.5
    descent_step: float = 0.1
    fd_step: float = 1e-5
    dT: float = 0.01
    seed_gap: float = 1.0  # gap of the paired seed state, in the units of the level scheme
    verify_fd: bool = True

    def __post_init__(self):
        for name in ("max_iter", "tol_state", "tol_grad", "mixing", "descent_step",
                     "fd_step", "dT", "seed_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.mixing > 1:
            raise ValueError("mixing must not exceed 1")


@dataclass(frozen=True)
class ThermalReport:
    """Observables of one converged (or flagged) thermal solution."""

    scheme: str
    n: int
    T: float
    F: float
    E: float
    S: float
    delta_av: float
    delta_tilde_min: float
    delta_tilde_max: float
    qp_number: float
    bb: float
    occupations: np.ndarray
    eps: np.ndarray
    v: np.ndarray
    converged: bool
    iterations: int
    grad_residual: float
    number: float = float("nan")
    number_variance: float = float("nan")
    radicand_defect: float = 0.0
    lam: float = 0.0
    fd_residual: float = float("nan")
    history: tuple = field(default=(), repr=False)
    u: np.ndarray | None = field(default=None, repr=False)

    def state(self) -> VariationalState:
        return VariationalState.from_eps(self.v, self.eps, self.T, u=self.u)

    def row(self) -> dict:
        """Scalar columns for tabular output."""
        d = asdict(self)
        for key in ("occupations", "eps", "v", "u", "history"):
            d.pop(key)
        return d


def observables(ev: Evaluation, g: float) -> dict:
    """Delta^av, Delta~ range, <N>_qp, <B^dag B>, <N_k> from one evaluation.

    Delta^av = g sqrt(<B^dag B> - sum_k <N_k><N_kbar>) with brackets taken in
    the same ensemble.  A negative radicand is clamped to zero and its size is
    returned as ``radicand_defect``; the canonical normal state has a genuinely
    negative radicand (number conservation anticorrelates N_k and N_kbar).
    A radicand within rounding of zero counts as zero; the square root would
    otherwise turn 1e-16 cancellation noise into a 1e-8 gap.
    """
    nn = float(np.dot(ev.occupations, ev.occupations_bar))
    rad = ev.bb - nn
    if abs(rad) <= RADICAND_ROUNDING * (abs(ev.bb) + abs(nn)):
        rad = 0.0
    defect = max(0.0, -rad)
    dt = ev.delta_tilde
    return {
        "delta_av": g * np.sqrt(max(rad, 0.0)),
        "radicand_defect": defect,
        "delta_tilde_min": float(np.min(dt)),
        "delta_tilde_max": float(np.max(dt)),
        "qp_number": ev.qp_number,
        "bb": ev.bb,
        "occupations": ev.occupations.copy(),
        "number": ev.number,
        "number_variance": ev.number_variance,
    }


def _report(scheme, ev, model, info) -> ThermalReport:
    obs = observables(ev, model.g)
    s = ev.state
    return ThermalReport(
        scheme=scheme, n=model.n, T=s.T, F=ev.F, E=ev.E, S=ev.S,
        delta_av=obs["delta_av"], delta_tilde_min=obs["delta_tilde_min"],
        delta_tilde_max=obs["delta_tilde_max"], qp_number=obs["qp_number"], bb=obs["bb"],
        occupations=obs["occupations"], eps=s.eps.copy(), v=s.v.copy(), u=s.u.copy(),
        converged=info["converged"], iterations=info["iterations"],
        grad_residual=info["grad"], number=obs["number"],
        number_variance=obs["number_variance"], radicand_defect=obs["radicand_defect"],
        lam=info.get("lam", model.mu), fd_residual=info.get("fd", float("nan")),
        history=tuple(info.get("history", ())),
    )


def _gce_state(levels, model, T):
    sol = gce_solution(levels, model.g, T, mu=None, n=model.n, wick=model.wick)
    return sol, VariationalState.from_eps(sol.v, sol.qp_energy, T)


def paired_seed(levels: LevelScheme, model: ModelParams, T: float, gap: float = 1.0,
                lam: float | None = None) -> VariationalState:
    """Paired start: v^2 = 1/2 at the Fermi level, decaying outward, over width ``gap``."""
    t = np.asarray(levels.t, float)
    if lam is None:
        lam = float(np.median(t)) - (0.5 * model.g if model.wick == "full" else 0.0)
    rho = 0.5 * np.ones_like(t)
    h = t - lam - (model.g * rho if model.wick == "full" else 0.0)
    E = np.hypot(h, gap)
    return VariationalState.from_eps(np.sqrt(0.5 * (1 - h / E)), E, T)


# ---------------------------------------------------------------------------
# minimizer
# ---------------------------------------------------------------------------


def _wrap(dtheta):
    """Map angle differences into [-pi/2, pi/2): theta and theta + pi give the same state."""
    return (dtheta + 0.5 * np.pi) % np.pi - 0.5 * np.pi


def _try(theta, eps, T, grid, levels, model):
    try:
        return Evaluation(VariationalState.from_theta(theta, eps, T), grid, levels, model)
    except ProjectionError:
        return None


def _gradient(ev):
    return np.concatenate([ev.grad_theta(), ev.grad_eps()])


def fd_gradient(ev: Evaluation, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of F~ in (theta, eps); eps steps are relative."""
    s = ev.state
    theta = s.theta
    x = np.concatenate([theta, s.eps])
    om = s.omega
    out = np.empty_like(x)
    for i in range(len(x)):
        step = h if i < om else h * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        Fp = Evaluation(VariationalState.from_theta(xp[:om], xp[om:], s.T), ev.grid, ev.levels, ev.model).F
        Fm = Evaluation(VariationalState.from_theta(xm[:om], xm[om:], s.T), ev.grid, ev.levels, ev.model).F
        out[i] = (Fp - Fm) / (2 * step)
    return out


def _fixed_point(ev, theta, eps):
    """Residual (theta* - theta, eps* - eps) of the self-consistent update, or None."""
    try:
        eps_t = solve_qp_energies(ev)
    except IllConditioned as exc:
        log.debug("%s", exc)
        return None
    theta_t = 0.5 * np.arctan2(ev.delta_tilde, ev.h_tilde)
    return np.concatenate([_wrap(theta_t - theta), eps_t - eps])


def _change(R, eps, T):
    """Size of the fixed-point residual; energies are measured by the occupation they move."""
    om = len(eps)
    df = expit(-(eps + R[om:]) / T) - expit(-eps / T)
    return max(np.max(np.abs(R[:om])), np.max(np.abs(df)))


def _newton_step(x, R, T, grid, levels, model, h=1e-6):
    """Newton direction for R(x) = 0 with a forward-difference Jacobian."""
    om = len(x) // 2
    J = np.empty((len(x), len(x)))
    for i in range(len(x)):
        xp = x.copy()
        xp[i] += h
        ev = _try(xp[:om], xp[om:], T, grid, levels, model)
        Rp = None if ev is None else _fixed_point(ev, xp[:om], xp[om:])
        if Rp is None:
            return None
        J[:, i] = (Rp - R) / h
    # least squares: the Jacobian inherits the zero modes of F~
    dx, *_ = np.linalg.lstsq(J, -R, rcond=1e-10)
    return dx if np.all(np.isfinite(dx)) else None


def _descend(levels, model, grid, state, cfg: SolverConfig):
    """Monotone self-consistent descent on F~ from ``state``.

    Mixed fixed-point steps drive the search; when the fixed-point residual
    stops shrinking a Newton step on that residual is tried, and if neither
    lowers F~ a backtracking steepest-descent step is taken.  Every accepted
    step keeps F~ non-increasing up to rounding slack.
    """
    T = state.T
    om = state.omega
    theta = state.theta
    eps = np.where(np.isfinite(state.eps), state.eps, 50.0 * T)
    ev = Evaluation(VariationalState.from_theta(theta, eps, T), grid, levels, model)
    R = _fixed_point(ev, theta, eps)
    history = [ev.F]
    step = cfg.descent_step
    converged = False
    slow = 0
    wait = 3  # slow iterations before the next Newton attempt; doubled after a failure
    prev = np.inf
    it = 0
    gnorm = np.inf
    for it in range(1, cfg.max_iter + 1):
        grad = _gradient(ev)
        gnorm = float(np.max(np.abs(grad)))
        slack = DESCENT_SLACK * max(1.0, abs(ev.F))
        change = np.inf if R is None else _change(R, eps, T)
        if change < cfg.tol_state and gnorm < cfg.tol_grad:
            converged = True
            break
        # F~ flat to rounding over a window with a small gradient: the residual left is
        # below what F~ can resolve (ill-conditioned eps directions at low T)
        if (gnorm < cfg.tol_grad and len(history) > STALL_WINDOW
                and np.ptp(history[-STALL_WINDOW:]) <= STALL_WINDOW * slack):
            converged = True
            break
        slow = slow + 1 if change > 0.7 * prev else 0
        prev = change
        cand = None
        if R is not None and slow >= wait:
            x = np.concatenate([theta, eps])
            dx = _newton_step(x, R, T, grid, levels, model)
            a = 1.0
            while dx is not None and a > 1e-3:
                xt = x + a * dx
                trial = _try(xt[:om], xt[om:], T, grid, levels, model)
                if trial is not None and trial.F <= ev.F + slack:
                    Rt = _fixed_point(trial, xt[:om], xt[om:])
                    # near a normal state R is dominated by the almost-null gauge mode,
                    # so a smaller gradient also counts as progress
                    if Rt is not None and (np.linalg.norm(Rt) < np.linalg.norm(R)
                                           or np.max(np.abs(_gradient(trial))) < gnorm):
                        cand = (xt[:om], xt[om:], trial, Rt)
                        break
                a *= 0.5
            slow = 0
            wait = 3 if cand is not None else min(2 * wait, 96)
        if cand is None and R is not None:
            a = cfg.mixing
            for _ in range(10):
                th_t, e_t = theta + a * R[:om], eps + a * R[om:]
                trial = _try(th_t, e_t, T, grid, levels, model)
                if trial is not None and trial.F <= ev.F + slack:
                    cand = (th_t, e_t, trial, None)
                    break
                a *= 0.5
            # slow progress with the full step: extrapolate along R while F keeps falling
            # (a paired state decaying just above T^cr slides along a flat valley)
            if cand is not None and a == cfg.mixing and slow >= 2:
                for _ in range(6):
                    a *= 2
                    th_t, e_t = theta + a * R[:om], eps + a * R[om:]
                    trial = _try(th_t, e_t, T, grid, levels, model)
                    if trial is None or trial.F >= cand[2].F:
                        break
                    cand = (th_t, e_t, trial, None)
        if cand is None:
            gt, ge = grad[:om], grad[om:]
            s = step
            while s > 1e-14:
                trial = _try(theta - s * gt, eps - s * ge, T, grid, levels, model)
                if trial is not None and trial.F <= ev.F + slack:
                    cand = (theta - s * gt, eps - s * ge, trial, None)
                    step = min(2.0 * s, 1.0)
                    break
                s *= 0.5
        if cand is None:
            # no admissible descent step left above rounding
            converged = gnorm < cfg.tol_grad and change < cfg.tol_state
            break
        theta, eps, ev, R = cand
        if R is None:
            R = _fixed_point(ev, theta, eps)
        history.append(ev.F)
    info = {"converged": converged, "iterations": it, "grad": gnorm, "history": history,
            "change": change}
    return ev, info


def _finish(ev, info, cfg):
    if cfg.verify_fd:
        fd = float(np.max(np.abs(fd_gradient(ev, cfg.fd_step))))
        info["fd"] = fd
        if fd >= cfg.tol_grad:
            info["converged"] = False
    return info


def _effective_model(levels, model, grid, T):
    """Chemical potential entering the minimization.

    The full projection makes F~ shift only by -mu n, so ``model.mu`` is kept.
    Without full projection the number condition of the GCE solution fixes it.
    """
    if grid.kind == "full":
        return model, model.mu
    lam = gce_solution(levels, model.g, T, mu=None, n=model.n, wick=model.wick).lam
    return model.with_mu(lam), lam


def minimize_ce_bcs(model: ModelParams, levels: LevelScheme, T: float, grid: GaugeGrid | None = None,
                    config: SolverConfig | None = None, init=None) -> ThermalReport:
    """Variation after projection: minimize F~ on ``grid`` (default: exact projection).

    ``init`` may be a state, a report, or a list of them; by default the GCE
    solution at the same T and a paired seed are tried and the lower F~ wins.
    """
    cfg = config or SolverConfig()
    if grid is None:
        grid = GaugeGrid.full(model.n, levels.omega)
    scheme = _GRID_SCHEME[grid.kind]
    opt_model, lam = _effective_model(levels, model, grid, T)
    if init is None:
        _, gstate = _gce_state(levels, model, T)
        starts = [gstate, paired_seed(levels, model, T, cfg.seed_gap)]
    else:
        starts = init if isinstance(init, (list, tuple)) else [init]
        starts = [s.state() if isinstance(s, ThermalReport) else s for s in starts]
        starts = [s if s.T == T else s.with_T(T) for s in starts]
    best = None
    for st in starts:
        try:
            ev, info = _descend(levels, opt_model, grid, st, cfg)
        except ProjectionError as exc:
            log.debug("start rejected: %s", exc)
            continue
        if best is None or ev.F < best[0].F - DESCENT_SLACK * max(1.0, abs(ev.F)):
            best = (ev, info)
    if best is None:
        raise ProjectionError(f"no admissible start for scheme {scheme} at T={T}")
    ev, info = best
    info = _finish(ev, info, cfg)
    info["lam"] = lam
    if opt_model is not model:
        ev = Evaluation(ev.state, ev.grid, levels, model)
    return _report(scheme, ev, model, info)


def solve_parity_bcs(model, levels, T, config=None, init=None) -> ThermalReport:
    """Number-parity projected BCS (variation after parity projection)."""
    return minimize_ce_bcs(model, levels, T, GaugeGrid.parity(model.n), config, init)


def solve_gce_bcs(model: ModelParams, levels: LevelScheme, T: float,
                  config: SolverConfig | None = None) -> ThermalReport:
    """Standard finite-T BCS with the number condition fixing the chemical potential."""
    cfg = config or SolverConfig()
    sol, state = _gce_state(levels, model, T)
    grid = GaugeGrid.none(model.n)
    ev_opt = Evaluation(state, grid, levels, model.with_mu(sol.lam))
    grad = float(np.max(np.abs(_gradient(ev_opt))))
    info = {"converged": True, "iterations": 0, "grad": grad, "lam": sol.lam}
    if cfg.verify_fd:
        info["fd"] = float(np.max(np.abs(fd_gradient(ev_opt, cfg.fd_step))))
        info["converged"] = info["fd"] < cfg.tol_grad
    ev = Evaluation(state, grid, levels, model)
    rep = _report("gce", ev, model, info)
    return replace(rep, history=())


def vbp_evaluate(model: ModelParams, levels: LevelScheme, T: float, grid: GaugeGrid | None = None,
                 gce_report: ThermalReport | None = None) -> ThermalReport:
    """Projected observables at the grand-canonical minimum (no re-minimization)."""
    if grid is None:
        grid = GaugeGrid.full(model.n, levels.omega)
    if gce_report is None:
        gce_report = solve_gce_bcs(model, levels, T, SolverConfig(verify_fd=False))
    ev = Evaluation(gce_report.state(), grid, levels, model)
    info = {"converged": gce_report.converged, "iterations": 0,
            "grad": float(np.max(np.abs(_gradient(ev)))), "lam": gce_report.lam}
    return _report("vbp", ev, model, info)
