"""Gauge-angle kernels of the number projection.

For every doubly degenerate level the trial operator factorizes into a 4-state
pair space, so all gauge-rotated traces reduce to closed forms per pair and per
quadrature node.  A :class:`GaugeGrid` chooses the projection:

* ``none``   -- single node at phi = 0 (grand-canonical, unprojected),
* ``parity`` -- nodes {0, pi} (number-parity projection),
* ``full``   -- L offset trapezoidal nodes (exact particle-number projection).

Everything is vectorized with arrays of shape ``(omega, L)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = [
    "VariationalState",
    "GaugeGrid",
    "PairKernel",
    "Measure",
    "ProjectionError",
    "pair_kernel",
    "pair_kernels",
    "measure",
    "gauge_average",
    "default_nodes",
    "near_singular",
    "ZETA_FLOOR",
]

ZETA_FLOOR = 1e-14
IMAG_TOL = 1e-8


class ProjectionError(ArithmeticError):
    """The projected norm vanished or lost its reality: state incompatible with n."""


@dataclass(frozen=True)
class VariationalState:
    """Variational parameters (v_k, f_k) of the quasiparticle trial operator.

    ``v`` holds one real amplitude per level.  ``f`` and ``fbar`` are the
    quasiparticle occupations of the states k and kbar; ``fbar`` defaults to
    ``f`` (time-reversal symmetric states, the only ones the solvers produce).
    ``eps`` (quasiparticle energies) is derived from ``f`` by Fermi inversion
    unless supplied, which keeps it finite when ``f`` underflows at low T.
    """

    v: np.ndarray
    f: np.ndarray
    T: float
    fbar: np.ndarray | None = None
    eps: np.ndarray | None = None
    eps_bar: np.ndarray | None = None
    u_amp: np.ndarray | None = None  # u_k >= 0; derived from v unless given (exact near |v| = 1)

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if v.shape != f.shape or v.ndim != 1:
            raise ValueError("v and f must be 1-D arrays of equal length")
        if self.T <= 0:
            raise ValueError("temperature must be positive")
        if np.any(v * v > 1 + 1e-12):
            raise ValueError("|v_k| must not exceed 1")
        if np.any((f < 0) | (f > 1)):
            raise ValueError("occupations must lie in [0, 1]")
        fbar = f if self.fbar is None else np.asarray(self.fbar, dtype=float)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "fbar", fbar)
        if self.eps is None:
            object.__setattr__(self, "eps", _fermi_inverse(f, self.T))
        else:
            object.__setattr__(self, "eps", np.asarray(self.eps, dtype=float))
        if self.u_amp is None:
            object.__setattr__(self, "u_amp", np.sqrt(np.clip(1.0 - v * v, 0.0, 1.0)))
        else:
            u = np.asarray(self.u_amp, dtype=float)
            if u.shape != v.shape or np.any(u < 0) or np.any(np.abs(u * u + v * v - 1) > 1e-12):
                raise ValueError("u_amp must be non-negative with u^2 + v^2 = 1")
            object.__setattr__(self, "u_amp", u)
        if self.eps_bar is None:
            eb = self.eps if self.fbar is f else _fermi_inverse(fbar, self.T)
            object.__setattr__(self, "eps_bar", eb)
        else:
            object.__setattr__(self, "eps_bar", np.asarray(self.eps_bar, dtype=float))

    @classmethod
    def from_eps(cls, v, eps, T, eps_bar=None, u=None) -> "VariationalState":
        eps = np.asarray(eps, dtype=float)
        f = expit(-eps / T)
        if eps_bar is None:
            return cls(v=v, f=f, T=T, eps=eps, u_amp=u)
        eps_bar = np.asarray(eps_bar, dtype=float)
        return cls(v=v, f=f, T=T, fbar=expit(-eps_bar / T), eps=eps, eps_bar=eps_bar, u_amp=u)

    @classmethod
    def from_theta(cls, theta, eps, T) -> "VariationalState":
        """u_k v_k = sin(theta_k) cos(theta_k), v_k^2 = sin^2(theta_k), smooth in theta.

        u is kept non-negative, so past |theta| = pi/2 the sign moves to v.
        """
        theta = np.asarray(theta, dtype=float)
        c = np.cos(theta)
        return cls.from_eps(np.where(c < 0, -1.0, 1.0) * np.sin(theta), eps, T, u=np.abs(c))

    @property
    def omega(self) -> int:
        return len(self.v)

    @property
    def u(self) -> np.ndarray:
        return self.u_amp

    @property
    def theta(self) -> np.ndarray:
        """Angle in [-pi/2, pi/2] with v = sin(theta), u = cos(theta)."""
        return np.arctan2(self.v, self.u)

    @property
    def symmetric(self) -> bool:
        return self.fbar is self.f or np.array_equal(self.fbar, self.f)

    def with_T(self, T: float) -> "VariationalState":
        return VariationalState.from_eps(self.v, self.eps, T, u=self.u)


def _fermi_inverse(f, T):
    with np.errstate(divide="ignore"):
        return T * (np.log1p(-f) - np.log(f))


def default_nodes(omega: int) -> int:
    # multiple of 4 keeps phi = pi/2, 3pi/2 (zeros of xi at v^2 = 1/2) off the offset grid
    L = max(2 * omega + 8, 32)
    return L + (-L) % 4


@dataclass(frozen=True)
class GaugeGrid:
    """Quadrature of the gauge angle; weights sum to one."""

    nodes: np.ndarray
    base_weights: np.ndarray
    kind: str
    n: int

    @classmethod
    def none(cls, n: int) -> "GaugeGrid":
        return cls(np.zeros(1), np.ones(1), "none", n)

    @classmethod
    def parity(cls, n: int) -> "GaugeGrid":
        return cls(np.array([0.0, np.pi]), np.full(2, 0.5), "parity", n)

    @classmethod
    def full(cls, n: int, omega: int, L: int | None = None, offset: float = 0.5) -> "GaugeGrid":
        if L is None:
            L = default_nodes(omega)
        if L < 2 * omega + 5:
            raise ValueError(f"L={L} is below the exactness bound 2*omega+5={2 * omega + 5}")
        nodes = (np.arange(L) + offset) * (2.0 * np.pi / L)
        return cls(nodes, np.full(L, 1.0 / L), "full", n)

    @classmethod
    def make(cls, kind: str, n: int, omega: int, L: int | None = None) -> "GaugeGrid":
        if kind == "none":
            return cls.none(n)
        if kind == "parity":
            return cls.parity(n)
        if kind == "full":
            return cls.full(n, omega, L)
        raise ValueError(f"unknown grid kind {kind!r}")

    def shifted(self) -> "GaugeGrid":
        """Same rule re-offset by half a step (used when a node hits a zero of zeta)."""
        if self.kind != "full":
            raise ProjectionError(f"{self.kind} grid cannot be re-offset")
        L = len(self.nodes)
        return GaugeGrid(self.nodes + np.pi / L, self.base_weights, self.kind, self.n)

    def __len__(self):
        return len(self.nodes)


@dataclass(frozen=True)
class PairKernel:
    """Gauge-rotated pair quantities, each of shape (omega, L) (complex)."""

    phi: np.ndarray
    zeta: np.ndarray
    xi: np.ndarray
    rho: np.ndarray
    rho_bar: np.ndarray
    kappa: np.ndarray
    kappa_bar: np.ndarray
    dlnzeta_df: np.ndarray
    dlnzeta_dfbar: np.ndarray
    dlnzeta_dv: np.ndarray


def pair_kernels(state: VariationalState, phi) -> PairKernel:
    """All pair kernels for every level and every angle in ``phi``."""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    v = state.v[:, None]
    v2 = v * v
    u2 = 1.0 - v2
    uv = (state.u * state.v)[:, None]
    f = state.f[:, None]
    fb = state.fbar[:, None]
    e = np.exp(1j * phi)[None, :]
    ec = np.conj(e)
    sin = np.sin(phi)[None, :]

    xi = u2 * e + v2 * ec
    xic = u2 * ec + v2 * e
    # zeta = c + a e + b e^*, assembled from differences that are exact in
    # floating point so zeros of zeta do not amplify rounding of O(1) terms
    g, gb = 1 - f, 1 - fb
    blocked = 1 - f - fb
    cos_half2 = 2 * np.cos(0.5 * phi)[None, :] ** 2
    a_plus_b = g * gb + f * fb
    b = g * gb * v2 + f * fb * u2
    zeta = (a_plus_b * cos_half2 - (1 - 2 * f) * (1 - 2 * fb)
            + 1j * (u2 - v2) * blocked * sin)
    paired = b * ec
    coherent = uv * blocked
    # b cos(phi) + f (1 - fb) and b cos(phi) + (1 - f) fb, same rearrangement
    re_rho = b * cos_half2 + f * (1 - 2 * fb) - v2 * blocked
    re_rho_bar = b * cos_half2 + fb * (1 - 2 * f) - v2 * blocked
    rho = (re_rho - 1j * b * sin) / zeta
    rho_bar = (re_rho_bar - 1j * b * sin) / zeta
    kappa = coherent * ec / zeta
    kappa_bar = coherent * e / zeta
    dz_df = 1 - 2 * fb + fb * xic - (1 - fb) * xi
    dz_dfb = 1 - 2 * f + f * xic - (1 - f) * xi
    dz_dv = -4j * v * sin * (1 - f - fb)
    return PairKernel(
        phi=phi,
        zeta=zeta,
        xi=xi,
        rho=rho,
        rho_bar=rho_bar,
        kappa=kappa,
        kappa_bar=kappa_bar,
        dlnzeta_df=dz_df / zeta,
        dlnzeta_dfbar=dz_dfb / zeta,
        dlnzeta_dv=dz_dv / zeta,
    )


def near_singular(kernels: PairKernel, floor: float = ZETA_FLOOR) -> int:
    """Number of (level, node) entries with |zeta| below ``floor``."""
    return int(np.count_nonzero(np.abs(kernels.zeta) < floor))


def pair_kernel(state: VariationalState, k: int, phi: float) -> dict:
    """Scalar pair kernel of level ``k`` at angle ``phi``."""
    pk = pair_kernels(state, [phi])
    return {name: complex(getattr(pk, name)[k, 0])
            for name in ("zeta", "xi", "rho", "rho_bar", "kappa", "kappa_bar",
                         "dlnzeta_df", "dlnzeta_dfbar", "dlnzeta_dv")}


@dataclass(frozen=True)
class Measure:
    """Normalized node weights dPhi_j / Z_Phi and log Z_Phi.

    ``Z_Phi = Tr(e^{-H0/T} P) / Tr(e^{-H0/T})``; for ``kind="none"`` it is 1.
    """

    weights: np.ndarray  # complex, sum to 1
    log_norm: float
    imag_residual: float
    grid: GaugeGrid

    @property
    def norm(self) -> float:
        return float(np.exp(self.log_norm))

    def average(self, values) -> np.ndarray:
        """[X]_phi along the last axis (real part; imaginary parts cancel)."""
        return np.real(np.asarray(values) @ self.weights)


def measure(state: VariationalState, grid: GaugeGrid, kernels: PairKernel | None = None,
            tol: float = IMAG_TOL) -> Measure:
    """Projection measure dPhi_j = w_j e^{i phi_j (n - omega)} prod_k zeta_k(phi_j).

    The product is accumulated as a sum of complex logarithms, so it neither
    under- nor overflows at large omega.  Only exp of the summed logarithm is
    used, so the branch of the individual logarithms is irrelevant.
    """
    if kernels is None:
        kernels = pair_kernels(state, grid.nodes)
    with np.errstate(divide="ignore"):
        log_zeta = np.log(kernels.zeta)
    logw = (np.log(grid.base_weights) + 1j * grid.nodes * (grid.n - state.omega)
            + log_zeta.sum(axis=0))
    top = np.max(logw.real)
    if not np.isfinite(top):
        raise ProjectionError("projected norm vanishes at every node")
    terms = np.exp(logw - top)
    total = terms.sum()
    scale = abs(total)
    imag_res = abs(total.imag) / scale if scale > 0 else np.inf
    if total.real <= 0 or imag_res > tol:
        raise ProjectionError(
            f"projected norm not real-positive: Z = {total!r} x e^{top:.3g} (grid {grid.kind})")
    return Measure(weights=terms / total.real, log_norm=float(top + np.log(total.real)),
                   imag_residual=float(imag_res), grid=grid)


def gauge_average(values, weights: Measure, tol: float = IMAG_TOL) -> float:
    """[X]_phi = sum_j dPhi_j X_j / Z_Phi for a single per-node array ``values``."""
    z = complex(np.asarray(values) @ weights.weights)
    if abs(z.imag) > tol * max(1.0, abs(z)):
        raise ProjectionError(f"bracket has imaginary residual {z.imag:.3g}")
    return z.real
