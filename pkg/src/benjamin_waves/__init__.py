"""Travelling waves of the generalized Benjamin equation and their spectral stability."""
__version__ = "0.1.0"

from .evolution import (EigenDirection, EvolveConfig, GrowthReport, SeededNoise, Trajectory,
                        evolve, perturbation_experiment)
from .functionals import (NoWaveRegime, PhysicalParams, PohozaevResiduals, WaveParams,
                          gn_quotient, hamiltonian, instability_margin, invariants,
                          omega_from_alpha, physical_to_normalized, pohozaev_residuals,
                          sobolev_quotient)
from .linearized import (GroundStateReport, IllPosed, OperatorMatrix, assemble_lplus, dprime,
                         eta_test, kernel_residual, morse_index, projected_min_eigenvalue)
from .solver import (MaximizerReport, NonConvergence, Problem, Route, Seed, SolverConfig,
                     SolverError, WaveProfile, alpha_for_omega, decay_constant,
                     maximize_quotient, solve_profile, sweep_alpha)
from .spectral import (Field, Grid, SymbolKind, apply_symbol, greens_function, make_grid,
                       spectral_bump)
from .spectrum import (IndexReport, SpectrumReport, Verdict, index_count, kdv_spectrum,
                       verdict)

__all__ = [name for name in dir() if not name.startswith("_")]
