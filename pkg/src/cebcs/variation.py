"""Projected free energy and its variational equations.

An :class:`Evaluation` bundles everything computed from one state on one gauge
grid: the projected energy E_C, the approximate entropy S~_C, the free energy
F~_C = E_C - T S~_C, the projected quasiparticle occupations, and the pieces
of the stationarity conditions (occupation Jacobian, right side of the
quasiparticle-energy equation, effective gap Delta~_k and field h~_k).

Index convention for "state" arrays of length 2*omega: entries ``0..omega-1``
are the states k, entries ``omega..2*omega-1`` their partners kbar.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .functional import gauge_fields
from .kernel import (
    GaugeGrid,
    Measure,
    ProjectionError,
    VariationalState,
    measure,
    near_singular,
    pair_kernels,
)
from .model import LevelScheme, ModelParams

__all__ = [
    "Evaluation",
    "evaluate",
    "f_c",
    "entropy_tilde",
    "energy_projected",
    "free_energy_tilde",
    "occupation_jacobian",
    "qp_energy_rhs",
    "solve_qp_energies",
    "gap_tilde",
    "h_tilde",
    "update_v",
    "IllConditioned",
]

MAX_REOFFSETS = 4


class IllConditioned(np.linalg.LinAlgError):
    def __init__(self, cond):
        super().__init__(f"occupation Jacobian ill-conditioned (cond ~ {cond:.3g})")
        self.cond = cond


def _eps_over_tanh(eps, T):
    """eps / tanh(eps / 2T), continuous through eps = 0 (value 2T)."""
    x = eps / (2.0 * T)
    small = np.abs(x) < 1e-6
    with np.errstate(over="ignore", invalid="ignore"):
        val = np.where(small, 2.0 * T * (1.0 + x * x / 3.0), eps / np.tanh(np.where(small, 1.0, x)))
    return val


class Evaluation:
    """Projected functional and its derivatives at one state."""

    def __init__(self, state: VariationalState, grid: GaugeGrid, levels: LevelScheme,
                 model: ModelParams):
        if grid.n != model.n:
            raise ValueError("grid and model disagree on n")
        self.state = state
        self.levels = levels
        self.model = model
        self.reoffsets = 0
        kernels = pair_kernels(state, grid.nodes)
        while near_singular(kernels):
            if self.reoffsets >= MAX_REOFFSETS or grid.kind != "full":
                raise ProjectionError("pair kernel vanishes on the gauge grid")
            grid = grid.shifted()
            kernels = pair_kernels(state, grid.nodes)
            self.reoffsets += 1
        self.grid = grid
        self.kernels = kernels
        self.measure: Measure = measure(state, grid, kernels)
        self.fields = gauge_fields(levels, model, kernels)

    # -- scalar functionals -------------------------------------------------

    def avg(self, x):
        return self.measure.average(x)

    @cached_property
    def E(self) -> float:
        return float(self.avg(self.fields.E))

    @cached_property
    def bb(self) -> float:
        return float(self.avg(self.fields.bb))

    @cached_property
    def mX(self) -> np.ndarray:
        """[d ln zeta_k / d f_k]_phi and [d ln zeta_k / d f_kbar]_phi stacked (2*omega,)."""
        return np.concatenate([self.avg(self.kernels.dlnzeta_df),
                               self.avg(self.kernels.dlnzeta_dfbar)])

    @cached_property
    def f_all(self) -> np.ndarray:
        return np.concatenate([self.state.f, self.state.fbar])

    @cached_property
    def eps_all(self) -> np.ndarray:
        return np.concatenate([self.state.eps, self.state.eps_bar])

    @cached_property
    def fC(self) -> np.ndarray:
        """Projected quasiparticle occupations f_k + f_k(1-f_k)[d ln zeta/d f_k]."""
        f = self.f_all
        return f + f * (1 - f) * self.mX

    @cached_property
    def eps_p(self) -> np.ndarray:
        """eps f (1 - f), zero where f is 0 or 1."""
        f = self.f_all
        p = f * (1 - f)
        with np.errstate(invalid="ignore"):
            return np.where(p > 0, self.eps_all * p, 0.0)

    @cached_property
    def S(self) -> float:
        T = self.state.T
        x = self.eps_all / T
        with np.errstate(invalid="ignore"):
            mix = np.where(self.f_all > 0, x * self.fC, 0.0)
        return float(np.sum(mix + np.logaddexp(0.0, -x)) + self.measure.log_norm)

    @cached_property
    def F(self) -> float:
        return self.E - self.state.T * self.S

    @cached_property
    def occupations(self) -> np.ndarray:
        """Projected <N_k> per level (state k; kbar is identical for symmetric states)."""
        return self.avg(self.kernels.rho)

    @cached_property
    def occupations_bar(self) -> np.ndarray:
        return self.avg(self.kernels.rho_bar)

    @cached_property
    def number(self) -> float:
        return float(np.sum(self.occupations) + np.sum(self.occupations_bar))

    @cached_property
    def number_variance(self) -> float:
        k = self.kernels
        npair = k.rho + k.rho_bar
        nn = k.rho * k.rho_bar + k.kappa_bar * k.kappa  # <N_k N_kbar>^phi within one pair
        mean = npair.sum(axis=0)
        second = mean * mean - np.sum(npair * npair, axis=0) + np.sum(npair + 2 * nn, axis=0)
        return float(self.avg(second) - self.avg(mean) ** 2)

    @cached_property
    def qp_number(self) -> float:
        return float(np.sum(self.fC))

    # -- variational equations ---------------------------------------------

    @cached_property
    def _Y(self):
        return np.vstack([self.kernels.dlnzeta_df, self.kernels.dlnzeta_dfbar])

    @cached_property
    def _K(self):
        """J = diag(1 + (1-2f)[Y]) + p[:,None] * K (row k', column k)."""
        om = self.state.omega
        Y = self._Y
        w = self.measure.weights
        mY = self.mX
        K = np.real((Y * w) @ Y.T) - np.outer(mY, mY)
        idx = np.arange(om)
        cos_term = self.avg((1 - np.cos(self.grid.nodes))[None, :] / self.kernels.zeta)
        K[np.arange(2 * om), np.arange(2 * om)] = -mY * mY
        K[idx + om, idx] = -2 * cos_term - mY[idx + om] * mY[idx]
        K[idx, idx + om] = -2 * cos_term - mY[idx] * mY[idx + om]
        return K

    def jacobian(self) -> np.ndarray:
        """Full (2 omega x 2 omega) matrix J[k', k] = d f^C_{k'} / d f_k."""
        f = self.f_all
        p = f * (1 - f)
        J = p[:, None] * self._K
        J[np.diag_indices_from(J)] += 1 + (1 - 2 * f) * self.mX
        return J

    def jacobian_levels(self) -> np.ndarray:
        """Reduced matrix A[k, l] = J[l, k] + J[lbar, k] for symmetric eps."""
        om = self.state.omega
        J = self.jacobian()
        Jt = J.T
        return Jt[:om, :om] + Jt[:om, om:]

    @cached_property
    def rhs(self) -> np.ndarray:
        """Right side of the quasiparticle-energy equation for all 2*omega states."""
        s, k, fl = self.state, self.kernels, self.fields
        v2 = (s.v * s.v)[:, None]
        uv = (s.u * s.v)[:, None]
        f = s.f[:, None]
        fb = s.fbar[:, None]
        e = np.exp(1j * self.grid.nodes)[None, :]
        ec = np.conj(e)
        hsum = fl.h + fl.h_bar
        pairing = uv * (fl.delta[None, :] * e + fl.delta_bar[None, :] * ec)
        shift = fl.D - fl.E[None, :] + self.E
        rk = (fl.h - hsum * (fb - (fb - v2) * ec) + pairing) / k.zeta - shift * k.dlnzeta_df
        rkb = (fl.h_bar - hsum * (f - (f - v2) * ec) + pairing) / k.zeta - shift * k.dlnzeta_dfbar
        return np.concatenate([self.avg(rk), self.avg(rkb)])

    @cached_property
    def delta_tilde(self) -> np.ndarray:
        fl, k = self.fields, self.kernels
        e = np.exp(1j * self.grid.nodes)
        num = fl.delta * e + fl.delta_bar * np.conj(e)
        return 0.5 * self.avg(num[None, :] / k.zeta)

    @cached_property
    def h_tilde(self) -> np.ndarray:
        s, k, fl = self.state, self.kernels, self.fields
        T = s.T
        om = s.omega
        ec = np.exp(-1j * self.grid.nodes)[None, :]
        isin = 1j * np.sin(self.grid.nodes)[None, :] / k.zeta
        shift = fl.D - fl.E[None, :] + self.E + T
        term1 = self.avg(0.5 * (fl.h + fl.h_bar) * ec / k.zeta + shift * isin)
        ms = self.avg(isin)
        q = self.eps_p
        total = np.dot(q, self.mX)
        if s.symmetric:
            f = s.f
            pair_ratio = 2.0 * f * (1 - f) * _eps_over_tanh(s.eps, T)
            pair_ratio = np.where(f > 0, pair_ratio, 0.0)
        else:
            pair_ratio = (q[:om] + q[om:]) / (1 - s.f - s.fbar)
        M = np.real((self._Y * self.measure.weights) @ isin.T)  # (2 omega, omega)
        idx = np.arange(om)
        cross = q @ M - q[idx] * M[idx, idx] - q[idx + om] * M[idx + om, idx]
        return term1 - (ms * total + ms * pair_ratio - cross)

    # -- gradients ------------------------------------------------------------

    def grad_v(self) -> np.ndarray:
        """dF~/dv_k from the effective gap and field."""
        s = self.state
        u, v = s.u, s.v
        return 2 * (1 - s.f - s.fbar) / u * (2 * u * v * self.h_tilde - (u * u - v * v) * self.delta_tilde)

    def grad_theta(self) -> np.ndarray:
        """dF~/dtheta_k for v_k = sin(theta_k), u_k = cos(theta_k)."""
        s = self.state
        u, v = s.u, s.v
        return 2 * (1 - s.f - s.fbar) * (2 * u * v * self.h_tilde - (u * u - v * v) * self.delta_tilde)

    def grad_f(self) -> np.ndarray:
        """dF~/df for all 2*omega states: rhs_k - sum_k' eps_k' dF^C_k'/df_k."""
        f = self.f_all
        lin = self.eps_all * (1 + (1 - 2 * f) * self.mX)
        return self.rhs - lin - self._K.T @ self.eps_p

    def grad_eps(self) -> np.ndarray:
        """dF~/deps per level (both states of a level share eps), finite as f -> 0."""
        om = self.state.omega
        T = self.state.T
        f = self.f_all
        p = f * (1 - f)
        g = -(p / T) * (self.rhs - self._K.T @ self.eps_p) + (self.eps_p / T) * (1 + (1 - 2 * f) * self.mX)
        return g[:om] + g[om:]


def evaluate(state, grid, levels, model) -> Evaluation:
    return Evaluation(state, grid, levels, model)


# -- thin functional wrappers -----------------------------------------------


def f_c(state, grid, levels, model) -> np.ndarray:
    return Evaluation(state, grid, levels, model).fC


def entropy_tilde(state, grid, levels, model) -> float:
    return Evaluation(state, grid, levels, model).S


def energy_projected(state, grid, levels, model) -> float:
    return Evaluation(state, grid, levels, model).E


def free_energy_tilde(state, grid, levels, model) -> float:
    return Evaluation(state, grid, levels, model).F


def occupation_jacobian(state, grid, levels, model) -> np.ndarray:
    return Evaluation(state, grid, levels, model).jacobian()


def qp_energy_rhs(state, grid, levels, model) -> np.ndarray:
    return Evaluation(state, grid, levels, model).rhs


def solve_qp_energies(ev: Evaluation, eps_ref=None, rcond: float = 1e-7) -> np.ndarray:
    """Quasiparticle energies from sum_k' eps_k' dF^C_k'/df_k = rhs_k (symmetric eps).

    Near-null directions of the level matrix (relative singular value below
    ``rcond``) are zero modes of F~: for a normal state under exact projection a
    uniform chemical-potential shift of the trial operator changes nothing.
    Along them eps keeps its ``eps_ref`` component (default: the current eps).
    A right side that is inconsistent with a singular matrix raises
    :class:`IllConditioned`.
    """
    A = ev.jacobian_levels()
    b = ev.rhs[: ev.state.omega]
    U, sv, Vt = np.linalg.svd(A)
    if not np.all(np.isfinite(sv)) or sv[0] == 0:
        raise IllConditioned(np.inf)
    keep = sv > rcond * sv[0]
    coef = (U[:, keep].T @ b) / sv[keep]
    eps = Vt[keep].T @ coef
    if not np.all(keep):
        resid = b - A @ eps
        if np.linalg.norm(resid) > 1e-8 * max(1.0, np.linalg.norm(b)):
            raise IllConditioned(sv[0] / sv[-1])
        ref = ev.state.eps if eps_ref is None else np.asarray(eps_ref, float)
        null = Vt[~keep]
        eps = eps + null.T @ (null @ ref)
    return eps
def gap_tilde(state, grid, levels, model) -> np.ndarray:
    return Evaluation(state, grid, levels, model).delta_tilde


def h_tilde(state, grid, levels, model) -> np.ndarray:
    return Evaluation(state, grid, levels, model).h_tilde


def update_v(h_t, delta_t) -> np.ndarray:
    """v_k^2 = (1 - h~/sqrt(h~^2 + Delta~^2)) / 2, with v^2 = 1/2 where both vanish."""
    h_t = np.asarray(h_t, float)
    delta_t = np.asarray(delta_t, float)
    E = np.hypot(h_t, delta_t)
    with np.errstate(invalid="ignore", divide="ignore"):
        v2 = np.where(E > 0, 0.5 * (1 - h_t / np.where(E > 0, E, 1.0)), 0.5)
    return np.clip(v2, 0.0, 1.0)
