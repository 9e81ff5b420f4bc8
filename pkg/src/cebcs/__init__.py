"""Canonical-ensemble BCS pairing at finite temperature.

Number-projected (CE), number-parity projected and grand-canonical BCS
free-energy minimization for the constant-pairing Hamiltonian, with an
exact canonical oracle for small systems.
"""

__version__ = "0.1.0"

from .kernel import GaugeGrid, ProjectionError, VariationalState, measure, pair_kernel, pair_kernels
from .model import (CalibrationError, LevelScheme, ModelParams, build_uniform_levels, calibrate_g,
                    gce_solution, levels_from_array)
from .solvers import (SCHEMES, SolverConfig, ThermalReport, minimize_ce_bcs, solve_gce_bcs,
                      solve_parity_bcs, vbp_evaluate)
from .thermo import critical_temperature, heat_capacity, solve_scheme, sweep
from .variation import Evaluation

__all__ = [
    "GaugeGrid", "ProjectionError", "VariationalState", "measure", "pair_kernel", "pair_kernels",
    "CalibrationError", "LevelScheme", "ModelParams", "build_uniform_levels", "calibrate_g",
    "gce_solution", "levels_from_array", "SCHEMES", "SolverConfig", "ThermalReport",
    "minimize_ce_bcs", "solve_gce_bcs", "solve_parity_bcs", "vbp_evaluate",
    "critical_temperature", "heat_capacity", "solve_scheme", "sweep", "Evaluation",
]
