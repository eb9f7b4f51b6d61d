"""netepi: discrete-time networked SIR/SEIR simulation, spectral convergence
diagnostics, and least-squares recovery of spread parameters."""

from .graph import Network, load_network, save_network, neighbors, is_irreducible
from .dynamics import (SirParams, SeirParams, EpidemicState, Trajectory,
                       check_assumption_sir, check_assumption_seir,
                       sir_step, sir_step_matrix, seir_step,
                       seir_step_multilayer, seir_step_matrix, simulate,
                       trajectory_to_csv, trajectory_from_csv)
from .spectral import (SpreadingMatrix, ConvergenceReport,
                       build_spreading_matrix, dominant_eigenvalue,
                       convergence_diagnostics)
from .estimation import (RegressionSystem, IdentifiabilityVerdict,
                         EstimateReport, NoiseModel, g_value,
                         check_identifiability_sir_homog,
                         check_identifiability_sir_hetero,
                         check_identifiability_seir,
                         build_regression_sir_homog,
                         build_regression_sir_hetero,
                         build_regression_seir,
                         solve_least_squares, apply_noise, estimate_pipeline)

__version__ = "0.1.0"
