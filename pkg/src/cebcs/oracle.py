"""Exact reference calculations for small systems.

Three independent routes to ground truth:

* :func:`pair_space_trace` -- explicit 4x4 matrices of one (k, kbar) pair, in
  the particle basis (Jordan-Wigner) or the quasiparticle basis;
* :class:`FockSpace` -- dense Fock space of up to four pairs (dimension 256),
  used for traces with the quasiparticle trial operator and for P_n;
* :func:`exact_canonical` -- canonical thermodynamics of the pairing
  Hamiltonian from its blocked-level (seniority) decomposition, reaching
  omega ~ 12-14.

Plus two small closed routes: the free-fermion canonical ensemble by
elementary-symmetric recursion and zero-temperature projected BCS by direct
enumeration of pair configurations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import minimize

from .model import LevelScheme, ModelParams

__all__ = [
    "pair_space_trace",
    "FockSpace",
    "CanonicalSpectrum",
    "CanonicalThermo",
    "canonical_spectrum",
    "exact_canonical",
    "exact_delta_av",
    "bb_hellmann_feynman",
    "free_fermion_canonical",
    "pbcs_energy",
    "pbcs_minimize",
    "OracleSizeError",
]

MAX_FOCK_PAIRS = 4
MAX_SECTOR_DIM = 5000


class OracleSizeError(ValueError):
    """Requested system is beyond what the oracle diagonalizes densely."""


# ---------------------------------------------------------------------------
# fermion matrices
# ---------------------------------------------------------------------------


def _annihilators(nmodes):
    """Dense Jordan-Wigner annihilation operators for ``nmodes`` fermionic modes."""
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    ops = []
    for j in range(nmodes):
        m = np.ones((1, 1))
        for i in range(nmodes):
            m = np.kron(m, z if i < j else (a if i == j else eye))
        ops.append(m)
    return ops


def _expm_herm(X, T):
    """exp(-X/T) for Hermitian X, returned together with the subtracted shift."""
    w, U = np.linalg.eigh(X)
    shift = w.min()
    return (U * np.exp(-(w - shift) / T)) @ U.conj().T, shift


def _number_phase(N_diag, phi):
    return np.diag(np.exp(-1j * phi * N_diag))


# ---------------------------------------------------------------------------
# one pair
# ---------------------------------------------------------------------------


def pair_space_trace(u, v, f, fbar, T, phi, basis="particle", dps=None):
    """Gauge-rotated traces of one (k, kbar) pair from explicit 4x4 matrices.

    Returns ``(norm, rho, rho_bar, kappa, kappa_bar)`` with
    ``norm = Tr(e^{-i phi N} e^{-H0/T}) / Tr(e^{-H0/T})`` and the densities
    normalized by ``Tr(e^{-i phi N} e^{-H0/T})``.  ``norm = e^{-i phi} zeta``.
    The ``particle`` construction builds H0 from Bogoliubov-transformed
    operators and exponentiates it; the ``quasiparticle`` construction rotates
    the number operators into the quasiparticle basis instead.

    With ``dps`` set, the quasiparticle construction is evaluated in mpmath at
    that many decimal digits, taking the double inputs as exact and rescaling
    (u, v) to unit norm at that precision.  This is the
    reference near zeros of zeta, where the double traces lose digits.
    """
    if dps is not None:
        return _pair_space_trace_mp(u, v, f, fbar, phi, dps)
    eps = _fermi_inverse_scalar(f, T)
    epsb = _fermi_inverse_scalar(fbar, T)
    if basis == "particle":
        ck, ckb = _annihilators(2)
        cdk, cdkb = ck.T, ckb.T
        ak = u * ck - v * cdkb
        akb = u * ckb + v * cdk
        H0 = eps * ak.T @ ak + epsb * akb.T @ akb
        w, _ = _expm_herm(H0, T)
        Nk, Nkb = cdk @ ck, cdkb @ ckb
        N = Nk + Nkb
        U = _number_phase(np.diag(N), phi)
        ops = (Nk, Nkb, ckb @ ck, cdk @ cdkb)
        z0 = np.trace(w)
        zphi = np.trace(U @ w)
        vals = [np.trace(U @ w @ op) / zphi for op in ops]
        return (zphi / z0, *vals)
    if basis == "quasiparticle":
        # particle basis |0>, |k>, |kbar>, |k kbar>=c_k^+ c_kbar^+|0>
        vac = np.array([u, 0, 0, v])
        one_k = np.array([0, 1.0, 0, 0])
        one_kb = np.array([0, 0, 1.0, 0])
        two = np.array([-v, 0, 0, u])
        Ub = np.column_stack([vac, one_k, one_kb, two])
        prob = np.array([(1 - f) * (1 - fbar), f * (1 - fbar), (1 - f) * fbar, f * fbar])
        N = np.diag([0.0, 1, 1, 2])
        Nk = np.diag([0.0, 1, 0, 1])
        Nkb = np.diag([0.0, 0, 1, 1])
        pair_ann = np.zeros((4, 4))
        pair_ann[0, 3] = 1.0  # c_kbar c_k |k kbar> = |0>
        pair_cre = pair_ann.T
        phase = np.diag(np.exp(-1j * phi * np.diag(N)))

        def tr(op):
            # Tr(e^{-H0/T} op e^{-i phi N}) with e^{-H0/T} diagonal in the qp basis
            m = Ub.T @ op @ phase @ Ub
            return np.sum(prob * np.diag(m))

        zphi = tr(np.eye(4))
        vals = [tr(op) / zphi for op in (Nk, Nkb, pair_ann, pair_cre)]
        return (zphi, *vals)
    raise ValueError(f"unknown basis {basis!r}")


def _pair_space_trace_mp(u, v, f, fbar, phi, dps):
    import mpmath

    with mpmath.workdps(dps):
        u, v, f, fbar, phi = (mpmath.mpf(float(x)) for x in (u, v, f, fbar, phi))
        norm = mpmath.sqrt(u * u + v * v)
        u, v = u / norm, v / norm
        Ub = mpmath.matrix([[u, 0, 0, -v], [0, 1, 0, 0], [0, 0, 1, 0], [v, 0, 0, u]])
        prob = [(1 - f) * (1 - fbar), f * (1 - fbar), (1 - f) * fbar, f * fbar]
        e = mpmath.expj(-phi)
        phase = mpmath.diag([1, e, e, e * e])

        def tr(op):
            m = Ub.T * op * phase * Ub
            return sum(prob[i] * m[i, i] for i in range(4))

        pair_ann = mpmath.zeros(4, 4)
        pair_ann[0, 3] = 1
        ops = (mpmath.diag([0, 1, 0, 1]), mpmath.diag([0, 0, 1, 1]), pair_ann, pair_ann.T)
        zphi = tr(mpmath.eye(4))
        vals = [complex(tr(op) / zphi) for op in ops]
        return (complex(zphi), *vals)


def _fermi_inverse_scalar(f, T):
    return T * (np.log1p(-f) - np.log(f))


# ---------------------------------------------------------------------------
# small Fock space
# ---------------------------------------------------------------------------


class FockSpace:
    """Dense Fock space of ``omega`` pairs, modes ordered (1, 1bar, 2, 2bar, ...)."""

    def __init__(self, omega: int):
        if omega > MAX_FOCK_PAIRS:
            raise OracleSizeError(f"Fock oracle limited to {MAX_FOCK_PAIRS} pairs, got {omega}")
        self.omega = omega
        c = _annihilators(2 * omega)
        self.c = c[0::2]
        self.cb = c[1::2]
        self.dim = 4**omega
        self.Nk = [x.T @ x for x in self.c]
        self.Nkb = [x.T @ x for x in self.cb]
        self.N_diag = np.diag(sum(self.Nk) + sum(self.Nkb)).copy()
        self.B = sum(cb @ ck for ck, cb in zip(self.c, self.cb))

    def hamiltonian(self, levels: LevelScheme, model: ModelParams) -> np.ndarray:
        H = -model.g * self.B.T @ self.B
        for k, tk in enumerate(levels.t):
            H = H + (tk - model.mu) * (self.Nk[k] + self.Nkb[k])
        return H

    def quasiparticles(self, state):
        """(alpha_k, alpha_kbar) lists for the Bogoliubov transform of ``state``."""
        u, v = state.u, state.v
        a = [u[k] * self.c[k] - v[k] * self.cb[k].T for k in range(self.omega)]
        ab = [u[k] * self.cb[k] + v[k] * self.c[k].T for k in range(self.omega)]
        return a, ab

    def h0(self, state) -> np.ndarray:
        a, ab = self.quasiparticles(state)
        H0 = np.zeros((self.dim, self.dim))
        for k in range(self.omega):
            H0 += state.eps[k] * a[k].T @ a[k] + state.eps_bar[k] * ab[k].T @ ab[k]
        return H0

    def projector(self, n: int, method: str = "exact", L: int | None = None) -> np.ndarray:
        if method == "exact":
            return np.diag((self.N_diag == n).astype(float))
        if method == "angle":
            L = L or 2 * (2 * self.omega + 1)
            phis = 2 * np.pi * np.arange(L) / L
            diag = np.mean(np.exp(-1j * np.outer(phis, self.N_diag - n)), axis=0)
            return np.diag(diag)
        raise ValueError(method)

    # -- traces with the quasiparticle trial operator -------------------------

    def projected_fraction(self, state, n: int) -> float:
        w, _ = _expm_herm(self.h0(state), state.T)
        P = self.projector(n)
        return float(np.trace(w @ P).real / np.trace(w).real)

    def rotated_expectation(self, state, phi: float, op) -> complex:
        """Tr(e^{-i phi N} e^{-H0/T} op) / Tr(e^{-i phi N} e^{-H0/T})."""
        w, _ = _expm_herm(self.h0(state), state.T)
        U = _number_phase(self.N_diag, phi)
        return complex(np.trace(U @ w @ op) / np.trace(U @ w))

    def projected_expectation(self, state, n: int, op, sandwich: bool = False) -> float:
        """Tr(e^{-H0/T} op P)/Tr(e^{-H0/T} P), or Tr(P e^{-H0/T} P op)/... if ``sandwich``."""
        w, _ = _expm_herm(self.h0(state), state.T)
        P = self.projector(n)
        den = np.trace(w @ P)
        num = np.trace(P @ w @ P @ op) if sandwich else np.trace(w @ op @ P)
        return float((num / den).real)

    def qp_occupations(self, state, n: int, sandwich: bool = False) -> np.ndarray:
        a, ab = self.quasiparticles(state)
        ops = [x.T @ x for x in a] + [x.T @ x for x in ab]
        return np.array([self.projected_expectation(state, n, op, sandwich) for op in ops])

    def entropy_tilde(self, state, n: int) -> float:
        """(1/T) Tr(e^{-H0/T} H0 P)/Tr(e^{-H0/T} P) + ln Tr(e^{-H0/T} P)."""
        H0 = self.h0(state)
        w, shift = _expm_herm(H0, state.T)
        P = self.projector(n)
        den = np.trace(w @ P).real
        return float(np.trace(w @ H0 @ P).real / den / state.T + np.log(den) - shift / state.T)

    def energy_projected(self, state, levels, model) -> float:
        H = self.hamiltonian(levels, model)
        return self.projected_expectation(state, model.n, H)

    def free_energy_exact(self, levels, model, T) -> float:
        H = self.hamiltonian(levels, model)
        P = self.projector(model.n)
        w, shift = _expm_herm(H, T)
        return float(shift - T * np.log(np.trace(w @ P).real))


# ---------------------------------------------------------------------------
# blocked-level canonical diagonalization
# ---------------------------------------------------------------------------


@dataclass
class _Sector:
    blocked: tuple
    pairs: int
    energies: np.ndarray  # eigenvalues including blocked single-particle energy
    bb: np.ndarray  # <i|B^dag B|i>
    pair_occ: np.ndarray  # (dim, omega) probability that level k holds a pair
    multiplicity: int  # 2**len(blocked)


@dataclass
class CanonicalSpectrum:
    """All eigenvalues of H in the n-particle space grouped by blocked levels."""

    omega: int
    n: int
    sectors: list

    @property
    def dimension(self) -> int:
        return sum(s.multiplicity * len(s.energies) for s in self.sectors)


def _popcount(x):
    x = x.copy()
    c = np.zeros_like(x)
    while np.any(x):
        c += x & 1
        x >>= 1
    return c


def _pair_block(free, npairs, e2, g):
    """Pair Hamiltonian on the unblocked levels ``free`` with ``npairs`` pairs."""
    confs = list(itertools.combinations(free, npairs))
    masks = np.array([sum(1 << k for k in c) for c in confs], dtype=np.int64)
    diag = np.array([sum(e2[k] for k in c) for c in confs]) - g * npairs
    hop = (_popcount(masks[:, None] ^ masks[None, :]) == 2).astype(float)
    return confs, masks, diag, hop


def canonical_spectrum(levels: LevelScheme, model: ModelParams) -> CanonicalSpectrum:
    """Diagonalize H sector by sector (seniority / blocked-level decomposition)."""
    omega, n = levels.omega, model.n
    if not 0 <= n <= 2 * omega:
        raise ValueError("particle number out of range")
    e1 = np.asarray(levels.t) - model.mu
    e2 = 2.0 * e1
    largest = max(comb(omega - b, (n - b) // 2) for b in range(0, min(n, omega) + 1)
                  if (n - b) % 2 == 0 and (n - b) // 2 <= omega - b)
    if largest > MAX_SECTOR_DIM:
        raise OracleSizeError(f"largest sector dimension {largest} exceeds {MAX_SECTOR_DIM}")
    sectors = []
    for b in range(0, min(n, omega) + 1):
        if (n - b) % 2:
            continue
        p = (n - b) // 2
        if p > omega - b:
            continue
        for blocked in itertools.combinations(range(omega), b):
            free = [k for k in range(omega) if k not in blocked]
            eb = sum(e1[k] for k in blocked)
            confs, masks, diag, hop = _pair_block(free, p, e2, model.g)
            H = np.diag(diag) - model.g * hop
            w, U = eigh(H)
            occ_basis = np.array([[(m >> k) & 1 for k in range(omega)] for m in masks], float)
            prob = U * U
            pair_occ = prob.T @ occ_basis
            bb = p + np.einsum("ij,ik,kj->j", U, hop, U)
            sectors.append(_Sector(blocked, p, w + eb, bb, pair_occ, 2**b))
    return CanonicalSpectrum(omega, n, sectors)


@dataclass
class CanonicalThermo:
    """Exact canonical observables on a temperature grid (arrays over T)."""

    T: np.ndarray
    F: np.ndarray
    E: np.ndarray
    S: np.ndarray
    C: np.ndarray
    bb: np.ndarray
    occupations: np.ndarray  # <N_k> per level (each of k, kbar), shape (nT, omega)
    pair_corr: np.ndarray  # <N_k N_kbar>, shape (nT, omega)


def exact_canonical(levels: LevelScheme, model: ModelParams, T_grid,
                    spectrum: CanonicalSpectrum | None = None) -> CanonicalThermo:
    """Exact canonical F, E, S, C, <B^dag B>, <N_k> at every temperature in ``T_grid``."""
    if spectrum is None:
        spectrum = canonical_spectrum(levels, model)
    T_grid = np.atleast_1d(np.asarray(T_grid, dtype=float))
    E_all = np.concatenate([s.energies for s in spectrum.sectors])
    mult = np.concatenate([np.full(len(s.energies), s.multiplicity, float)
                           for s in spectrum.sectors])
    bb_all = np.concatenate([s.bb for s in spectrum.sectors])
    omega = spectrum.omega
    # <N_k> (single state k) = pair_occ + 1/2 * blocked indicator; <N_k N_kbar> = pair_occ
    occ_all = []
    corr_all = []
    for s in spectrum.sectors:
        blk = np.zeros(omega)
        blk[list(s.blocked)] = 0.5
        occ_all.append(s.pair_occ + blk)
        corr_all.append(s.pair_occ)
    occ_all = np.concatenate(occ_all)
    corr_all = np.concatenate(corr_all)
    E0 = E_all.min()
    out = {k: [] for k in ("F", "E", "S", "C", "bb", "occ", "corr")}
    for T in T_grid:
        w = mult * np.exp(-(E_all - E0) / T)
        Z = w.sum()
        p = w / Z
        E = p @ E_all
        E2 = p @ (E_all * E_all)
        F = E0 - T * np.log(Z)
        out["F"].append(F)
        out["E"].append(E)
        out["S"].append((E - F) / T)
        out["C"].append((E2 - E * E) / T**2)
        out["bb"].append(p @ bb_all)
        out["occ"].append(p @ occ_all)
        out["corr"].append(p @ corr_all)
    return CanonicalThermo(
        T=T_grid,
        F=np.array(out["F"]),
        E=np.array(out["E"]),
        S=np.array(out["S"]),
        C=np.array(out["C"]),
        bb=np.array(out["bb"]),
        occupations=np.array(out["occ"]),
        pair_corr=np.array(out["corr"]),
    )


def exact_delta_av(thermo: CanonicalThermo, g: float) -> np.ndarray:
    """g sqrt(<B^dag B> - sum_k <N_k><N_kbar>) from exact canonical brackets."""
    nn = np.sum(thermo.occupations**2, axis=1)
    rad = thermo.bb - nn
    # cancellation noise in the difference is not a gap
    rad[np.abs(rad) <= 64 * np.finfo(float).eps * (np.abs(thermo.bb) + nn)] = 0.0
    return g * np.sqrt(np.clip(rad, 0.0, None))


def bb_hellmann_feynman(levels, model, T_grid, h=1e-6):
    """<B^dag B> = -dF/dg by a central difference in the coupling."""
    Fp = exact_canonical(levels, model.with_g(model.g + h), T_grid).F
    Fm = exact_canonical(levels, model.with_g(model.g - h), T_grid).F
    return -(Fp - Fm) / (2 * h)


# ---------------------------------------------------------------------------
# closed-form references
# ---------------------------------------------------------------------------


def free_energy_levels(levels, mu):
    e = np.asarray(levels.t, float) - mu
    return np.concatenate([e, e])


def free_fermion_canonical(levels: LevelScheme, n: int, T_grid, mu: float = 0.0) -> dict:
    """Canonical free fermions (g = 0) by recursion on elementary symmetric sums.

    Moments sum_conf E^m e^{-E/T} over n-particle configurations are built one
    single-particle state at a time; all terms are positive, so no cancellation.
    """
    e = free_energy_levels(levels, mu)
    out = {k: [] for k in ("F", "E", "S", "C")}
    for T in np.atleast_1d(T_grid):
        shift = np.sort(e)[:n].sum()
        z0 = np.zeros(n + 1)
        z1 = np.zeros(n + 1)
        z2 = np.zeros(n + 1)
        z0[0] = 1.0
        # energies measured from the lowest n-particle configuration spread evenly
        ref = shift / n if n else 0.0
        for ea in e:
            x = ea - ref
            w = np.exp(-x / T)
            z2[1:] = z2[1:] + w * (z2[:-1] + 2 * x * z1[:-1] + x * x * z0[:-1])
            z1[1:] = z1[1:] + w * (z1[:-1] + x * z0[:-1])
            z0[1:] = z0[1:] + w * z0[:-1]
        Z = z0[n]
        Em = z1[n] / Z
        E2 = z2[n] / Z
        F = -T * np.log(Z) + n * ref
        E = Em + n * ref
        out["F"].append(F)
        out["E"].append(E)
        out["S"].append((E - F) / T)
        out["C"].append((E2 - Em * Em) / T**2)
    return {k: np.array(v) for k, v in out.items()}


def pbcs_energy(v, levels: LevelScheme, model: ModelParams) -> float:
    """<PBCS|H|PBCS>/<PBCS|PBCS> by explicit expansion in pair configurations."""
    v = np.asarray(v, float)
    u = np.sqrt(np.clip(1 - v * v, 0, 1))
    omega = levels.omega
    p = model.n // 2
    e2 = 2.0 * (np.asarray(levels.t) - model.mu)
    confs, masks, diag, hop = _pair_block(list(range(omega)), p, e2, model.g)
    occ = np.array([[(m >> k) & 1 for k in range(omega)] for m in masks], bool)
    amp = np.prod(np.where(occ, v, u), axis=1)
    H = np.diag(diag) - model.g * hop
    return float(amp @ H @ amp / (amp @ amp))


def pbcs_minimize(levels: LevelScheme, model: ModelParams, v0=None) -> tuple[float, np.ndarray]:
    """Variation-after-projection BCS ground state by direct minimization over v."""
    omega = levels.omega
    if v0 is None:
        sol = np.sqrt(np.clip(0.5 * (1 - np.tanh(np.asarray(levels.t) - model.mu)), 0.05, 0.95))
        theta0 = np.arcsin(sol)
    else:
        theta0 = np.arcsin(np.clip(v0, -1, 1))

    def obj(theta):
        return pbcs_energy(np.sin(theta), levels, model)

    res = minimize(obj, theta0, method="BFGS", options={"gtol": 1e-11, "maxiter": 10000})
    res = minimize(obj, res.x, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 40000})
    return float(res.fun), np.sin(res.x)
