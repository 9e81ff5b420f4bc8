"""Heat capacity C = dE/dT of the canonical and grand-canonical solutions (Omega = n = 26).

Both curves drop discontinuously where the pairing collapses; the canonical
one does so at a higher temperature and rises from zero in an S-shape, since
exciting single quasiparticles costs extra once number parity is fixed.

Run: python demos/04_heat_capacity.py
"""

import numpy as np

from cebcs import ModelParams, build_uniform_levels, calibrate_g, heat_capacity, sweep
from cebcs.thermo import inflections

OMEGA = 26


def main():
    levels = build_uniform_levels(OMEGA, 10.0)
    model = ModelParams(calibrate_g(levels, OMEGA), OMEGA)
    T = np.round(np.arange(0.05, 1.6001, 0.025), 6)
    result = {}
    for scheme in ("gce", "ce"):
        reps = sweep(scheme, model, levels, T)
        result[scheme] = heat_capacity(T, [r.E for r in reps], [r.converged for r in reps])
    print("    T      C_G      C_C")
    for i in range(0, len(T), 2):
        print(f"{T[i]:6.3f} {result['gce'].C[i]:8.3f} {result['ce'].C[i]:8.3f}")
    for scheme, hc in result.items():
        jumps = ", ".join(f"T = {t:.3f} (dC = {d:+.2f})" for t, d in hc.jumps)
        print(f"{scheme}: jumps at {jumps}")
    print("C_C inflection points:", [round(x, 3) for x in inflections(T, result["ce"].C)])


if __name__ == "__main__":
    main()
