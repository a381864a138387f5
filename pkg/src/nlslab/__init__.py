"""Numerical laboratory for the damped focusing nonlinear Schrodinger
equation i u_t + Lap(u) + i a(t) u = mu |u|^(p-1) u on a periodic box.

The package splits into damping-coefficient bookkeeping (damping), the
spectral grid and field container (grid), functionals and the radial cutoff
calculus (quantities), the gauged split-step integrator (solver), analytic
blow-up and global-existence criteria (criteria), multi-run studies
(experiments), and the command-line harness (cli).
"""

from .damping import (AverageEstimate, CumulativeDamping, DampingSpec,
                      WeightParams, appendix_spike, as_cumulative,
                      classify_monotonicity,
                      constant, cumulative, evaluate, from_csv,
                      inf_average, integrate_adaptive, piecewise_linear,
                      polynomial_decay, saturating, spike_function,
                      spike_moment, sup_average, weighted_inf_average, zero)
from .errors import (BracketError, ConfigurationError, DomainError,
                     HypothesisError, NlslabError, NumericalError,
                     RegimeError, UsageError)
from .grid import (Field, Grid, boundary_mass_fraction, field_from_function,
                   field_slice_csv, free_evolve, gradient, integrate,
                   load_field, radial_asymmetry, save_field, zero_field)
from .quantities import (CutoffProfile, DiagnosticsRecord, diagnostics,
                         energy, gauge_hamiltonian, gn_ratio, gn_sigma,
                         grad_norm_sq, h1_norm_sq, localized_virial,
                         localized_virial_first, localized_virial_second,
                         lp1_integral, mass, mass_critical_epsilon0, nehari,
                         pohozaev, read_diagnostics_csv, variance, virial,
                         write_diagnostics_csv)
from .solver import (ProblemSpec, TrajectoryRecord, detect_blowup,
                     gauge_backward, gauge_forward, simulate,
                     spectral_tail_fraction, strang_step,
                     trajectory_summary)
from .criteria import (CriterionVerdict, Hypothesis, check_blow0,
                       check_blow1, check_blow2, check_global_existence,
                       check_subcritical, classify_regime,
                       criticality_ratio, cumulative_trapezoid,
                       damping_threshold, energy_critical_p,
                       gronwall_envelope, integrability_power,
                       lifespan_bound, mass_critical_p,
                       quadratic_negativity, required_damping_level,
                       variance_inequality_terms)
from .experiments import (Blow0Report, FreeNormReport, IdentityReport,
                          MonitorReport, RadialBlow2Report, SweepResult,
                          bisect_threshold, blow0_scenario, free_lp1_profile,
                          free_norm_ge, gaussian_data, identity_residuals,
                          localized_estimate_margins, radial_blow2_scenario,
                          ring_data, subcritical_monitor, sweep_grid,
                          verify_identities, write_sweep_csv)

__version__ = "0.1.0"
