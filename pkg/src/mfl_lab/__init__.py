"""Numerical laboratory for diffusive mean-field dynamics on flat tori.

Discretizes single-species gradient flows, two-species descent-ascent
dynamics and general multi-species flows; computes the spectral quantities
(Poincare constants, weighted negative-Sobolev norms, interaction-operator
spectra) that govern their local convergence; and certifies empirical
exponential decay rates against the predicted ones at desk scale.
"""

from .grid import (PeriodicGrid, build_grid, face_average, face_difference,
                   gradient, inner, integrate, weighted_divergence)
from .measures import (Density, FourierMode, chi_squared, entropy, fourier_field,
                       kl, normalize, perturb, perturb_along, uniform_density,
                       w2_circle)
from .spectral import (Generator, Kernel, KernelMode, SpectralData, apply_K,
                       apply_generator_inverse, assemble_generator,
                       dual_operator_spectrum, gradK_bound_check,
                       h_minus1_norm_sq, hessian_identity_residual,
                       interaction_potential, m11, most_negative_direction,
                       poincare_constant, project_mean_zero, spectral_abscissa,
                       spectrum, tau0_estimate)
from .equilibrium import (EquilibriumResult, SystemSpec, equilibrium_chi_squared_gap,
                          mfld_stationary, mfld_system, mflda_equilibrium,
                          mflda_system, nspecies_equilibrium, nspecies_system,
                          pairwise_zero_sum_table, proximal_gibbs, solve_equilibrium,
                          stationarity_certificate)
from .dynamics import (StepperConfig, Trajectory, bernoulli, drift_field_mfld,
                       evaluate_energy, simulate, simulate_mfld, simulate_mflda,
                       simulate_nspecies, step)
from .analysis import (REGIME_MFLD_GENERAL, REGIME_MFLD_QUADRATIC, REGIME_MFLDA,
                       REGIME_NSPECIES_GENERAL, REGIME_NSPECIES_LINEAR,
                       REGIME_TWO_TIMESCALE, MonotonicityReport, RateReport,
                       TheoremConstants, fit_rate, ftau_gap_bound_check,
                       interaction_lipschitz_bound, lyapunov_series,
                       monotonicity_residual, report, theorem_constants)

__version__ = "0.1.0"
