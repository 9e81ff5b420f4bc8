"""Pairing model: level scheme, Hamiltonian parameters and coupling calibration.

The Hamiltonian is the constant-pairing (reduced BCS) model

    H = sum_k (t_k - mu) N_k - g B^dag B,    B = sum_{k>0} c_kbar c_k

on ``omega`` doubly degenerate, equally spaced levels.  Energies are measured in
units of the zero-temperature grand-canonical gap once ``g`` is calibrated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

__all__ = [
    "LevelScheme",
    "ModelParams",
    "GCESolution",
    "build_uniform_levels",
    "levels_from_array",
    "gce_solution",
    "zero_T_gce_gap",
    "calibrate_g",
    "CalibrationError",
]

WICK_MODES = ("full", "pair")


class CalibrationError(RuntimeError):
    """Raised when the gap equation or the coupling calibration fails."""


@dataclass(frozen=True)
class LevelScheme:
    """Doubly degenerate single-particle levels ``t`` (one entry per pair)."""

    t: np.ndarray
    lambda_cut: float
    d: float

    @property
    def omega(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class ModelParams:
    """Coupling ``g``, chemical-potential shift ``mu`` and particle number ``n``.

    ``wick`` selects the energy functional: ``"full"`` keeps the diagonal
    ``rho_k rho_kbar`` contraction of ``B^dag B`` (and hence the ``-g rho``
    self-energy), ``"pair"`` drops it.
    """

    g: float
    n: int
    mu: float = 0.0
    wick: str = field(default="full")

    def __post_init__(self):
        if self.g < 0:
            raise ValueError(f"g must be non-negative, got {self.g}")
        if self.n <= 0 or self.n % 2:
            raise ValueError(f"n must be a positive even integer, got {self.n}")
        if self.wick not in WICK_MODES:
            raise ValueError(f"wick must be one of {WICK_MODES}, got {self.wick!r}")

    def with_mu(self, mu: float) -> "ModelParams":
        return ModelParams(self.g, self.n, mu, self.wick)

    def with_g(self, g: float) -> "ModelParams":
        return ModelParams(g, self.n, self.mu, self.wick)


def build_uniform_levels(omega: int, lambda_cut: float) -> LevelScheme:
    """Equally spaced levels t_k = -lambda_cut + (k-1) d, d = 2 lambda_cut / (omega-1)."""
    if omega < 2:
        raise ValueError("need at least two levels to define a spacing")
    if lambda_cut <= 0:
        raise ValueError("lambda_cut must be positive")
    d = 2.0 * lambda_cut / (omega - 1)
    t = -lambda_cut + d * np.arange(omega)
    t[-1] = lambda_cut  # exact endpoint
    return LevelScheme(t=t, lambda_cut=float(lambda_cut), d=d)


def levels_from_array(t) -> LevelScheme:
    """Escape hatch for explicit (not necessarily uniform) level energies."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or len(t) < 1:
        raise ValueError("t must be a non-empty 1-D array")
    d = float(np.mean(np.diff(t))) if len(t) > 1 else 0.0
    return LevelScheme(t=t.copy(), lambda_cut=float(np.max(np.abs(t))), d=d)


# ---------------------------------------------------------------------------
# Grand-canonical BCS self-consistency
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GCESolution:
    """Converged grand-canonical BCS state at one temperature."""

    v2: np.ndarray
    f: np.ndarray
    rho: np.ndarray
    h: np.ndarray  # single-particle field t_k - lam - g rho_k
    delta: float
    lam: float  # effective chemical potential entering h_k
    T: float

    @property
    def v(self) -> np.ndarray:
        return np.sqrt(self.v2)

    @property
    def qp_energy(self) -> np.ndarray:
        return np.sqrt(self.h**2 + self.delta**2)


def _fermi(E, T):
    if T <= 0:
        return np.zeros_like(E)
    return expit(-E / T)


def _occupations(h, delta, T):
    E = np.sqrt(h * h + delta * delta)
    with np.errstate(invalid="ignore", divide="ignore"):
        v2 = np.where(E > 0, 0.5 * (1.0 - h / np.where(E > 0, E, 1.0)), 0.5)
    f = _fermi(E, T)
    rho = v2 * (1.0 - 2.0 * f) + f
    return E, v2, f, rho


def _self_consistent_rho(t, lam, g, delta, T, selfenergy, iters=64):
    """Solve rho_k = rho(h_k), h_k = t_k - lam - g rho_k, level by level (bisection).

    rho - rho(h(rho)) is strictly increasing in rho, so the root in [0, 1] is unique.
    """
    if not selfenergy or g == 0:
        return _occupations(t - lam, delta, T)[3]
    lo = np.zeros_like(t)
    hi = np.ones_like(t)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        resid = mid - _occupations(t - lam - g * mid, delta, T)[3]
        up = resid > 0
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    return 0.5 * (lo + hi)


def _gap_at(t, lam, g, T, selfenergy, delta):
    rho = _self_consistent_rho(t, lam, g, delta, T, selfenergy)
    h = t - lam - (g * rho if selfenergy else 0.0)
    return rho, h


def _solve_gap(t, lam, g, T, selfenergy):
    """Largest non-trivial root of 1 = g sum_k tanh(E_k/2T)/(2E_k); 0 if none."""
    if g <= 0:
        return 0.0

    def G(delta):
        _, h = _gap_at(t, lam, g, T, selfenergy, delta)
        E = np.sqrt(h * h + delta * delta)
        if T > 0:
            th = np.tanh(E / (2.0 * T))
        else:
            th = np.ones_like(E)
        with np.errstate(divide="ignore", invalid="ignore"):
            # E -> 0 limit of tanh(E/2T)/(2E) is 1/(4T)
            ratio = np.where(E > 1e-300, th / (2.0 * np.where(E > 1e-300, E, 1.0)),
                             np.inf if T <= 0 else 1.0 / (4.0 * T))
        return g * np.sum(ratio) - 1.0

    tiny = 1e-12
    if G(tiny) <= 0:
        return 0.0
    hi = 1.0
    while G(hi) > 0:
        hi *= 2.0
        if hi > 1e8:
            raise CalibrationError("gap equation has no bracketed root")
    return brentq(G, tiny, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def gce_solution(levels: LevelScheme, g: float, T: float, mu: float | None = 0.0,
                 n: int | None = None, wick: str = "full") -> GCESolution:
    """Self-consistent finite-temperature BCS state.

    If ``mu`` is None the effective chemical potential is solved from the
    number condition ``sum_k 2 rho_k = n``; otherwise ``mu`` is used as is.
    ``T = 0`` is allowed (all quasiparticle occupations vanish).
    """
    t = np.asarray(levels.t, dtype=float)
    selfenergy = wick == "full"

    def solve_at(lam):
        delta = _solve_gap(t, lam, g, T, selfenergy)
        rho, h = _gap_at(t, lam, g, T, selfenergy, delta)
        return delta, rho, h

    if mu is None:
        if n is None:
            raise ValueError("number condition needs n")
        if not 0 < n < 2 * len(t):
            raise ValueError("number condition needs 0 < n < 2*omega")

        def count(lam):
            return 2.0 * np.sum(solve_at(lam)[1]) - n

        span = float(np.ptp(t)) + 2.0 * g + 10.0
        lo, hi = float(t.min()) - span, float(t.max()) + span
        lam = brentq(count, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    else:
        lam = float(mu)
    delta, rho, h = solve_at(lam)
    E, v2, f, _ = _occupations(h, delta, T)
    v2 = np.clip(v2, 0.0, 1.0)
    return GCESolution(v2=v2, f=f, rho=rho, h=h, delta=float(delta), lam=float(lam), T=float(T))


def zero_T_gce_gap(levels: LevelScheme, g: float, mu: float | None = None,
                   n: int | None = None, wick: str = "full") -> float:
    """Zero-temperature grand-canonical gap Delta = g sum_k u_k v_k.

    ``mu=None`` (default) fixes the chemical potential by the number
    condition for ``n`` particles (half filling if ``n`` is omitted).
    """
    if g <= 0:
        return 0.0
    if mu is None and n is None:
        n = levels.omega
    return gce_solution(levels, g, 0.0, mu=mu, n=n, wick=wick).delta


def calibrate_g(levels: LevelScheme, n: int | None = None, target_gap: float = 1.0,
                mu: float | None = None, wick: str = "full") -> float:
    """Coupling g for which the zero-temperature GCE gap equals ``target_gap``."""
    if target_gap <= 0:
        raise ValueError("target_gap must be positive")
    if n is None:
        n = levels.omega

    def resid(g):
        return zero_T_gce_gap(levels, g, mu=mu, n=n, wick=wick) - target_gap

    lo, hi = 0.0, 0.05
    while resid(hi) <= 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:
            raise CalibrationError(f"target gap {target_gap} not reachable")
    return brentq(resid, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
