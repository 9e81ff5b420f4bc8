"""Temperature sweeps, heat capacity and critical temperatures."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .kernel import GaugeGrid
from .model import LevelScheme, ModelParams
from .solvers import (
    SolverConfig,
    ThermalReport,
    minimize_ce_bcs,
    solve_gce_bcs,
    solve_parity_bcs,
    vbp_evaluate,
)

__all__ = [
    "solve_scheme",
    "sweep",
    "HeatCapacity",
    "heat_capacity",
    "inflections",
    "order_parameter",
    "critical_temperature",
    "CriticalTemperature",
    "NoTransition",
    "TCRIT_THRESHOLD",
]

log = logging.getLogger(__name__)

TCRIT_THRESHOLD = 1e-3


class NoTransition(ValueError):
    """The order parameter does not cross the threshold inside the bracket."""

    def __init__(self, msg, lo=None, hi=None):
        super().__init__(msg)
        self.lo = lo
        self.hi = hi


def solve_scheme(scheme: str, model: ModelParams, levels: LevelScheme, T: float,
                 config: SolverConfig | None = None, init=None, L: int | None = None) -> ThermalReport:
    """Dispatch one temperature point to the solver of ``scheme``."""
    if scheme == "gce":
        return solve_gce_bcs(model, levels, T, config)
    if scheme == "vbp":
        grid = GaugeGrid.full(model.n, levels.omega, L)
        gce = solve_gce_bcs(model, levels, T, replace(config or SolverConfig(), verify_fd=False))
        return vbp_evaluate(model, levels, T, grid, gce)
    if scheme == "parity":
        return solve_parity_bcs(model, levels, T, config, init)
    if scheme == "ce":
        return minimize_ce_bcs(model, levels, T, GaugeGrid.full(model.n, levels.omega, L), config, init)
    raise ValueError(f"unknown scheme {scheme!r}")


def _better(a: ThermalReport, b: ThermalReport) -> ThermalReport:
    if a.converged != b.converged:
        return a if a.converged else b
    return a if a.F <= b.F else b


def sweep(scheme: str, model: ModelParams, levels: LevelScheme, T_grid,
          config: SolverConfig | None = None, bidirectional: bool = True,
          L: int | None = None) -> list[ThermalReport]:
    """Reports over ``T_grid`` (ascending order in the output).

    Variational schemes are continued from the neighbouring temperature; with
    ``bidirectional`` an up- and a down-sweep are run and the lower F~ is kept
    at every point, which resolves hysteresis near a first-order-like collapse.
    """
    T_grid = np.sort(np.asarray(T_grid, dtype=float))
    if scheme in ("gce", "vbp"):
        return [solve_scheme(scheme, model, levels, T, config, L=L) for T in T_grid]

    def run(order):
        out = {}
        prev = None
        for i in order:
            T = T_grid[i]
            init = None if prev is None else [prev]
            rep = solve_scheme(scheme, model, levels, T, config, init=init, L=L)
            if prev is not None and not rep.converged:
                rep = _better(rep, solve_scheme(scheme, model, levels, T, config, L=L))
            out[i] = rep
            prev = rep
        return out

    idx = range(len(T_grid))
    up = run(idx)
    if not bidirectional:
        return [up[i] for i in idx]
    down = run(reversed(idx))
    return [_better(up[i], down[i]) for i in idx]


@dataclass
class HeatCapacity:
    """C(T) = dE/dT by finite differences, with excluded points and detected jumps."""

    T: np.ndarray
    C: np.ndarray  # nan where excluded
    excluded: list = field(default_factory=list)
    jumps: list = field(default_factory=list)  # (T location, size of the jump in C)


def heat_capacity(T, E, converged=None, jump_factor: float = 8.0, jump_rel: float = 0.05,
                  window: int = 5) -> HeatCapacity:
    """Central differences in the interior, one-sided at the ends.

    Unconverged points are dropped before differencing and reported as
    excluded.  An interval is flagged as a jump when its change of C exceeds
    ``jump_factor`` times the median change over the ``window`` intervals on
    either side (the two adjacent ones left out, since differencing smears a
    step over them) and ``jump_rel`` times the larger of the spread and the magnitude of C.  Adjacent flagged
    intervals form one jump whose size is their summed change.
    """
    T = np.asarray(T, float)
    E = np.asarray(E, float)
    ok = np.ones(len(T), bool) if converged is None else np.asarray(converged, bool)
    ok &= np.isfinite(E)
    C = np.full(len(T), np.nan)
    excluded = [float(t) for t in T[~ok]]
    Tk, Ek = T[ok], E[ok]
    if len(Tk) >= 2:
        C[ok] = np.gradient(Ek, Tk, edge_order=1)
    jumps = []
    if len(Tk) >= 4:
        Ck = C[ok]
        dC = np.abs(np.diff(Ck))
        floor = jump_rel * max(np.ptp(Ck), np.max(np.abs(Ck)))
        flagged = []
        for i in range(len(dC)):
            idx = [j for j in range(i - window, i + window + 1) if 0 <= j < len(dC) and abs(j - i) > 1]
            local = np.median(dC[idx]) if idx else 0.0
            if dC[i] > max(jump_factor * local, floor):
                flagged.append(i)
        flagged = np.asarray(flagged, int)
        # a jump smeared over neighbouring intervals is one discontinuity
        signed = np.diff(Ck)
        for run in np.split(flagged, np.flatnonzero(np.diff(flagged) > 1) + 1):
            if len(run):
                i = run[np.argmax(dC[run])]
                jumps.append((float(0.5 * (Tk[i] + Tk[i + 1])), float(np.sum(signed[run]))))
    return HeatCapacity(T=T, C=C, excluded=excluded, jumps=jumps)


def inflections(T, C, T_max: float | None = None, rel_tol: float = 1e-3) -> list[float]:
    """Temperatures where the curvature of C changes sign (below ``T_max``).

    Sign changes of the second difference smaller than ``rel_tol`` times the
    largest curvature are ignored as noise.
    """
    T = np.asarray(T, float)
    C = np.asarray(C, float)
    m = np.isfinite(C)
    if T_max is not None:
        m &= T < T_max
    T, C = T[m], C[m]
    if len(T) < 5:
        return []
    d2 = np.gradient(np.gradient(C, T), T)
    tol = rel_tol * np.max(np.abs(d2))
    sig = np.where(np.abs(d2) > tol, np.sign(d2), 0)
    out = []
    last = 0
    last_i = None
    for i, s in enumerate(sig):
        if s == 0:
            continue
        if last != 0 and s != last:
            out.append(float(0.5 * (T[last_i] + T[i])))
        last, last_i = s, i
    return out


def order_parameter(report: ThermalReport, kind: str = "delta_av") -> float:
    """Pairing order parameter used for T^cr detection.

    ``delta_av`` (default) is the fluctuation-based Delta^av.  ``delta_tilde``
    is the largest effective gap max_k Delta~_k, i.e. whether the variational
    state itself is paired.  ``pairing`` is the smaller of the two: a scheme is
    normal once either measure has vanished.  For GCE and CE both vanish
    together; under parity projection the normal state keeps a small positive
    Delta^av from number-parity correlations, which ``pairing`` ignores.
    """
    if kind == "delta_av":
        return report.delta_av
    if kind == "delta_tilde":
        return max(abs(report.delta_tilde_min), abs(report.delta_tilde_max))
    if kind == "pairing":
        return min(report.delta_av, order_parameter(report, "delta_tilde"))
    raise ValueError(f"unknown order parameter {kind!r}")


@dataclass(frozen=True)
class CriticalTemperature:
    scheme: str
    n: int
    T_cr: float
    bracket: tuple
    resolution: float
    order: str
    evaluations: int
    converged: bool


def critical_temperature(scheme: str, model: ModelParams, levels: LevelScheme, T_lo: float,
                         T_hi: float, config: SolverConfig | None = None,
                         threshold: float = TCRIT_THRESHOLD, resolution: float = 1e-3,
                         order: str = "delta_av", L: int | None = None) -> CriticalTemperature:
    """Bisection on the threshold crossing of the order parameter.

    Each midpoint is solved from both bracketing states (paired and normal)
    and the lower F~ is kept.  The reported T^cr is the bracket midpoint.
    """
    cfg = config or SolverConfig()

    def solve(T, inits=None):
        if scheme in ("gce", "vbp"):
            return solve_scheme(scheme, model, levels, T, cfg, L=L)
        # the bracketing states carry the paired and the normal branch
        return solve_scheme(scheme, model, levels, T, cfg, init=inits, L=L)

    lo_rep = solve(T_lo)
    hi_rep = solve(T_hi)
    a, b = order_parameter(lo_rep, order), order_parameter(hi_rep, order)
    if not (a >= threshold and b < threshold):
        raise NoTransition(
            f"{scheme}: order parameter {a:.3g} at T={T_lo} and {b:.3g} at T={T_hi} "
            f"do not bracket the threshold {threshold}", (T_lo, a), (T_hi, b))
    lo, hi = T_lo, T_hi
    count = 2
    ok = lo_rep.converged and hi_rep.converged
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        rep = solve(mid, [lo_rep, hi_rep])
        count += 1
        log.debug("%s T=%.6f order=%.3g converged=%s grad=%.2g fd=%.2g", scheme, mid,
                  order_parameter(rep, order), rep.converged, rep.grad_residual, rep.fd_residual)
        ok &= rep.converged
        if order_parameter(rep, order) >= threshold:
            lo, lo_rep = mid, rep
        else:
            hi, hi_rep = mid, rep
    return CriticalTemperature(scheme=scheme, n=model.n, T_cr=0.5 * (lo + hi), bracket=(lo, hi),
                               resolution=hi - lo, order=order, evaluations=count, converged=ok)
