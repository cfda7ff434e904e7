"""Danger-field obstacle avoidance with null-space escape blending.

A point obstacle carries a scalar danger field that is exactly zero outside
its danger radius and ramps like ``xi * (1/d - 1/R)^2`` inside, saturating at
``delta``.  Whichever link point of an arm is closest to the obstacle gets an
escape joint velocity pushing that point radially outward.  The planning laws
add the escape through ``E - mu * J^T (J J^T)^-1 J``: with ``mu = 1`` the
escape is confined to the Jacobian's null space (a no-op for a well
conditioned square task), smaller ``mu`` deliberately leaks escape authority
into the task so a fully constrained arm can still give way; the pose
feedback then repairs the task error once the arm is clear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import PoseError, Twist, damped_pinv, nullspace_projector
from .model import KinematicSnapshot, RobotModel, SystemState, arm_frames
from .planner import PlannerParams, balance_solver, feedback_term


@dataclass(frozen=True)
class Obstacle:
    """Point obstacle with the radius inside which danger accumulates."""

    center: np.ndarray
    danger_radius: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float)
        if center.shape != (3,):
            raise ValueError("obstacle center must be a 3-vector")
        if self.danger_radius <= 0.0:
            raise ValueError("danger_radius must be positive")
        object.__setattr__(self, "center", center)


@dataclass(frozen=True)
class CdfParams:
    """Danger-field shape and escape blending parameters."""

    xi: float = 0.1
    delta: float = 17.25
    mu: float = 0.5
    escape_gain: float = 60.0

    def __post_init__(self):
        if self.xi <= 0.0 or self.delta <= 0.0:
            raise ValueError("xi and delta must be positive")
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")
        if self.escape_gain <= 0.0:
            raise ValueError("escape_gain must be positive")


def _segment_closest(a: np.ndarray, b: np.ndarray, p: np.ndarray):
    """Closest point to p on segment ab, as (distance, arc parameter)."""
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom == 0.0:
        return float(np.linalg.norm(p - a)), 0.0
    s = float(np.clip(np.dot(p - a, ab) / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + s * ab))), s


def min_distance(points: np.ndarray, obstacle: Obstacle) -> tuple[float, int]:
    """Minimum distance from the obstacle to the polyline through ``points``.

    Returns the exact segment-geometry distance and the index of the sample
    nearest to the closest point.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < 1:
        raise ValueError("points must be a non-empty (n, 3) array")
    if points.shape[0] == 1:
        return float(np.linalg.norm(obstacle.center - points[0])), 0
    best = np.inf
    best_index = 0
    for i in range(points.shape[0] - 1):
        d, s = _segment_closest(points[i], points[i + 1], obstacle.center)
        if d < best:
            best = d
            best_index = i if s <= 0.5 else i + 1
    return best, best_index


def danger_value(d: float, params: CdfParams, obstacle: Obstacle) -> float:
    """Scalar danger at distance d: zero outside the radius, capped inside."""
    if d < 0.0:
        raise ValueError("distance must be non-negative")
    radius = obstacle.danger_radius
    if d >= radius:
        return 0.0
    if d == 0.0:
        return params.delta
    return min(params.delta, params.xi * (1.0 / d - 1.0 / radius) ** 2)


def _closest_body_point(
    model: RobotModel, state: SystemState, arm: int, obstacle: Obstacle
):
    """Closest material point of the arm: (distance, link index, point)."""
    frames = arm_frames(model, state, arm)
    best = np.inf
    best_link = 0
    best_point = frames.joints[0]
    for k in range(6):
        d, s = _segment_closest(
            frames.joints[k], frames.joints[k + 1], obstacle.center
        )
        if d < best:
            best = d
            best_link = k
            best_point = frames.joints[k] + s * (
                frames.joints[k + 1] - frames.joints[k]
            )
    return best, best_link, best_point, frames


def escape_joint_velocity(
    model: RobotModel,
    state: SystemState,
    arm: int,
    obstacle: Obstacle,
    params: CdfParams,
) -> np.ndarray:
    """Joint rates pushing the arm's closest point away from the obstacle.

    The danger value scales the transpose-Jacobian direction of the closest
    body point, so only joints proximal to that point participate and the
    command vanishes smoothly at the danger radius.
    """
    d, link, point, frames = _closest_body_point(model, state, arm, obstacle)
    danger = danger_value(d, params, obstacle)
    if danger == 0.0:
        return np.zeros(6)
    if d == 0.0:
        return np.zeros(6)  # direction undefined exactly at the center
    normal = (point - obstacle.center) / d
    jac_point = np.zeros((3, 6))
    for k in range(link + 1):
        jac_point[:, k] = np.cross(frames.axes[k], point - frames.joints[k])
    return params.escape_gain * danger * (jac_point.T @ normal)


def avoidance_mission_velocity(
    snap: KinematicSnapshot,
    e1: PoseError,
    desired_twist: Twist,
    v_b: Twist,
    escape: np.ndarray,
    params: CdfParams,
    planner_params: PlannerParams,
) -> np.ndarray:
    """Mission-arm law with the escape velocity blended in."""
    v_cmd = desired_twist.as_vector() + feedback_term(e1, planner_params)
    operand = np.linalg.solve(snap.j_e, v_cmd) - snap.j_0 @ v_b.as_vector()
    task = damped_pinv(snap.j_m1, planner_params.eps, planner_params.lambda_max)
    proj = nullspace_projector(
        snap.j_m1, params.mu, planner_params.eps, planner_params.lambda_max
    )
    return task @ operand + proj @ escape


def avoidance_balance_velocity(
    snap: KinematicSnapshot,
    e0: PoseError,
    theta_dot1: np.ndarray,
    escape: np.ndarray,
    params: CdfParams,
    planner_params: PlannerParams,
) -> np.ndarray:
    """Balance-arm law with the escape velocity blended in."""
    v_des = feedback_term(e0, planner_params)
    free_twist = np.linalg.solve(
        snap.j_b, snap.momentum - snap.j_c1 @ theta_dot1
    )
    rhs = snap.h_0 @ (free_twist - v_des)
    matrix, bias, task = balance_solver(snap, planner_params)
    # escape projected so its base-twist effect vanishes at mu = 1
    proj = np.eye(6) - params.mu * matrix @ task
    return matrix @ rhs + bias + proj @ escape
