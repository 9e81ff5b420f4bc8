"""Critical temperatures versus particle number and the finite-size power law.

For each n (half filling, Omega = n, same cutoff) the coupling is
recalibrated to a unit zero-T gap and T^cr is bracketed by bisection.  The
grand-canonical T^cr saturates quickly, while the canonical one approaches it
slowly; the excess is fitted to a n^-b with the bulk value taken from the
largest grand-canonical system.  The full n list takes several minutes.

Run: python demos/03_critical_temperatures.py [n1 n2 ...]
"""

import sys

from cebcs import ModelParams, build_uniform_levels, calibrate_g, critical_temperature
from cebcs.cli import fit_scaling

BRACKET = {"gce": (0.2, 1.5), "parity": (0.2, 3.0), "ce": (0.3, 3.0)}
ORDER = {"gce": "delta_av", "parity": "pairing", "ce": "delta_av"}


def tcrit(scheme, n):
    levels = build_uniform_levels(n, 10.0)
    model = ModelParams(calibrate_g(levels, n), n)
    lo, hi = BRACKET[scheme]
    return critical_temperature(scheme, model, levels, lo, hi, order=ORDER[scheme]).T_cr


def main(n_list):
    table = {}
    for n in n_list:
        table[n] = {s: tcrit(s, n) for s in ("gce", "parity", "ce")}
        print(f"n = {n:3d}  T^cr_G = {table[n]['gce']:.4f}  T^cr_pi = {table[n]['parity']:.4f}  "
              f"T^cr_C = {table[n]['ce']:.4f}", flush=True)
    if len(n_list) >= 4:
        t_inf = table[max(n_list)]["gce"]
        fit = fit_scaling(n_list, [table[n]["ce"] for n in n_list], t_inf)
        print(f"T^cr_C = {t_inf:.4f} + {fit.a:.2f} n^-{fit.b:.3f}"
              f"  (+- {fit.a_err:.2f}, {fit.b_err:.3f})")


if __name__ == "__main__":
    args = [int(x) for x in sys.argv[1:]] or [10, 16, 26, 40, 56]
    main(args)
