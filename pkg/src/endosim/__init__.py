"""Finite-volume simulator for size/content-structured endosome populations."""

from .analysis import (MomentVector, NormReport, StationaryConfig,
                       check_theorem_condition, convergence_study,
                       decay_rate_probe, moment_ode_oracle, moments,
                       moments_1d, norms, norms_1d, stationary_fixed_point)
from .coagulation import (CoagWorkspace, apply_coag_1d_flux, apply_coag_2d,
                          coag_flux_edges_1d, coag_q_1d)
from .errors import (ConfigError, EndosimError, EvaluationError,
                     InsufficientSignalError, InvalidArgumentError,
                     KernelError, NonConvergenceError, NumericsError)
from .grid import (Field1D, Field2D, Grid1D, Grid2D, MembraneState,
                   cell_average, cell_average_1d, cell_integrals,
                   cell_integrals_1d, make_grid1d, make_grid2d)
from .rates import (AffineKernel, ConstantKernel, GaussianDensity, Kernel,
                    PowerProfile, RateSet, bind_rates, build_kernel_table,
                    eval_gaussian, eval_power_profile, scenario_rates)
from .scenarios import (Scenario, builtin_ids, load_scenario, parse_config,
                        resolve, serialize_scenario, signaling_observables,
                        trafficking_observables)
from .stepper import (SimConfig, SimState, Trajectory, run, step, step_1d,
                      transport_increment, upwind_flux)

__version__ = "0.1.0"
