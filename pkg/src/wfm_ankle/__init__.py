"""Ankle torque prediction with a lumped winding-filament muscle model.

Two antagonist virtual muscles (anterior dorsiflexor, posterior
plantarflexor) are driven by periodic activation curves over the gait cycle;
a particle swarm fits the one free amplitude per muscle against reference
inverse-dynamics torque and reports train/test RMSE.
"""

from .activation import (ActivationCurve, default_anterior_template,
                         default_posterior_template, evaluate_activation,
                         single_node_curve)
from .gait_data import (GaitTrial, SubjectSplit, TrialParseError, load_trial,
                        resample_trial, rmse, save_trial)
from .geometry import (AttachmentGeometry, GeometryRangeError, JointSample,
                       ankle_torque, default_geometry, moment_arm, muscle_length)
from .muscle import (IntegrationError, MuscleOutputs, MuscleState,
                     NoEquilibriumError, WfmParams, ce_velocity, chain_force,
                     default_params, equilibrium_ce_length, f_max_from_mass,
                     force_length_scale, rest_lengths, solve_internal_balance,
                     step_muscle, titin_stiffness)
from .pipeline import (DEFAULT_ROSTER, EvaluationReport, ReportRow,
                       SimulationConfig, batch_fit_objective, default_theta_profile,
                       evaluate_split, generate_synthetic_trial,
                       make_batch_objective, simulate_gait, subject_params,
                       synthetic_split)
from .pso import (NonFiniteObjectiveError, OptimizationResult, Particle,
                  PsoConfig, fit_objective, optimize, update_particle)

__version__ = "0.1.0"
