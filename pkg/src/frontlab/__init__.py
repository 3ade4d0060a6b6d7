"""Numerical laboratory for fronts and invasion shapes of periodic reaction-diffusion-advection equations."""

from frontlab.errors import (ConfigError, CoverageError, DomainError, DomainTooSmallError, FrontlabError,
                             InsufficientDataError, NoFrontError, NumericError, StructuralError)
from frontlab.medium import (PeriodicMedium, ReactionSpec, check_homogeneous_invasion, check_weak_stability,
                             homogeneous_medium, transform_medium, validate_medium)
from frontlab.solver import (Boundary, Grid, GridField, Trajectory, apply_operator, ball_datum, invasion_test,
                             load_snapshot, save_snapshot, simulate, stable_dt, step)
from frontlab.eigen import EigenPair, eigenfunction_residual, principal_eigenvalue, slope_check
from frontlab.fronts import (FrontProfile, PlanarFront, extract_front_profile, fit_tail, front_residual,
                             planar_front_shooting, planar_profile_for, profile_monotone, pulsating_front_speed,
                             speed_table)
from frontlab.wulff import (SpeedFunction, WulffShape, ball_condition_probe, cone_conditions_check,
                            regular_fg_check, shifted_shape, wulff_shape)
from frontlab.levelsets import PlanarSet, hausdorff, rescaled_convergence, upper_level_set
from frontlab.omega import Window, front_fit, omega_report, ray_tracker
from frontlab.harness import Scenario, run_scenario

__version__ = "0.1.0"
