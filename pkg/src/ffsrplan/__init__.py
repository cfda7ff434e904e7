"""Trajectory planning and batch simulation for a dual-arm free-floating robot.

Subpackage map: ``geom`` (poses, robust inverses), ``model`` (floating-base
kinematics and momentum), ``planner`` (reference trajectories and feedback
laws), ``avoidance`` (danger field and escape blending), ``sim`` (rollouts,
logs, metrics), ``ga`` (parameter optimization), ``cli`` (batch front-end).

The rollout inner loop runs on a compiled extension when available and falls
back to numpy otherwise; see :mod:`ffsrplan.backend`.
"""

from .backend import available_backends, default_backend
from .geom import Pose, PoseError, Twist, damped_pinv, nullspace_projector, pose_error
from .model import (
    KinematicSnapshot,
    LinkParam,
    RobotModel,
    SystemState,
    base_twist_from_momentum,
    body_points,
    forward_kinematics,
    reference_model,
    snapshot,
)
from .planner import (
    DesiredTrajectory,
    PlannerParams,
    phi,
    predicted_settling_time,
    trapezoid_profile,
)
from .avoidance import CdfParams, Obstacle, danger_value, min_distance
from .sim import Metrics, Scenario, TrajectoryLog, run, settling_time, step
from .ga import Chromosome, GaConfig, GaReport, objective_B, run_ga

__version__ = "0.1.0"

__all__ = [
    "available_backends",
    "default_backend",
    "Pose",
    "PoseError",
    "Twist",
    "damped_pinv",
    "nullspace_projector",
    "pose_error",
    "KinematicSnapshot",
    "LinkParam",
    "RobotModel",
    "SystemState",
    "base_twist_from_momentum",
    "body_points",
    "forward_kinematics",
    "reference_model",
    "snapshot",
    "DesiredTrajectory",
    "PlannerParams",
    "phi",
    "predicted_settling_time",
    "trapezoid_profile",
    "CdfParams",
    "Obstacle",
    "danger_value",
    "min_distance",
    "Metrics",
    "Scenario",
    "TrajectoryLog",
    "run",
    "settling_time",
    "step",
    "Chromosome",
    "GaConfig",
    "GaReport",
    "objective_B",
    "run_ga",
    "__version__",
]
