"""Desired-trajectory generation and pose-feedback planning laws.

Two feedback flavors drive the pose error ``e = desired - actual`` to zero:

* ``proportional``: a plain linear law ``k_p * e``.
* ``predefined_time``: the bounded-settling-time law

      phi(e) = 1/(m T_c) * exp(||e||^m) * ||e||^(1-m) * e/||e||

  whose closed loop ``e_dot = -phi(e)`` settles from any initial error in at
  most ``T_c`` seconds; the exact settling time is
  ``T_c * (1 - exp(-||e0||^m))``.  A ``paper_literal`` variant without the
  ``||e||^(1-m)`` factor is available for comparison runs; it converges in
  finite time but carries no ``T_c`` bound.

The mission arm tracks the end-effector reference; the balance arm spends its
six degrees of freedom holding the base still by canceling the momentum the
mission arm injects.  Both laws go through the damped pseudo-inverse so
commands stay bounded near singular configurations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quat
from .geom import Pose, PoseError, Twist, damped_pinv
from .model import KinematicSnapshot

FEEDBACK_MODES = ("none", "proportional", "predefined_time")
PHI_FORMS = ("canonical", "paper_literal")


@dataclass(frozen=True)
class PlannerParams:
    """Feedback-law parameters shared by both arms.

    ``m`` and ``t_c`` shape the predefined-time law; ``eps``/``lambda_max``
    set the singular-value threshold and damping ceiling of the robust
    inverse; ``deadband`` freezes the law once the error norm is negligible
    so the ``e/||e||`` direction never chatters at the origin.
    """

    m: float = 0.1
    t_c: float = 3.0
    feedback_mode: str = "predefined_time"
    k_p: float = 0.15
    phi_form: str = "canonical"
    deadband: float = 1e-9
    eps: float = 0.02
    lambda_max: float = 0.08
    balance_roll_weight: float = 0.4
    balance_wrist_weight: float = 0.05
    posture_gain: float = 0.5
    posture_reference: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 < self.m < 1.0:
            raise ValueError("m must lie in (0, 1)")
        if self.t_c <= 0.0:
            raise ValueError("t_c must be positive")
        if self.feedback_mode not in FEEDBACK_MODES:
            raise ValueError(f"feedback_mode must be one of {FEEDBACK_MODES}")
        if self.phi_form not in PHI_FORMS:
            raise ValueError(f"phi_form must be one of {PHI_FORMS}")
        if self.deadband < 0.0:
            raise ValueError("deadband must be non-negative")
        if not 0.0 < self.balance_wrist_weight <= 1.0:
            raise ValueError("balance_wrist_weight must lie in (0, 1]")
        if not 0.0 < self.balance_roll_weight <= 1.0:
            raise ValueError("balance_roll_weight must lie in (0, 1]")
        if self.posture_gain < 0.0:
            raise ValueError("posture_gain must be non-negative")
        if self.posture_reference is not None:
            ref = np.asarray(self.posture_reference, dtype=float)
            if ref.shape != (6,):
                raise ValueError("posture_reference must have 6 entries")
            object.__setattr__(self, "posture_reference", ref)


def phi(
    x: np.ndarray,
    m: float,
    t_c: float,
    form: str = "canonical",
    deadband: float = 1e-9,
) -> np.ndarray:
    """Predefined-time feedback term; zero inside the deadband."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r <= deadband:
        return np.zeros_like(x)
    if form == "canonical":
        scale = np.exp(r**m) * r ** (1.0 - m) / (m * t_c)
    elif form == "paper_literal":
        scale = np.exp(r**m) / (m * t_c)
    else:
        raise ValueError(f"unknown phi form {form!r}")
    return (scale / r) * x


def predicted_settling_time(e0_norm: float, m: float, t_c: float) -> float:
    """Exact settling time of ``e_dot = -phi(e)`` (canonical form)."""
    return t_c * (1.0 - np.exp(-(e0_norm**m)))


def trapezoid_fraction(total_time: float, ramp_time: float, t: float):
    """Normalized trapezoid: returns (completed fraction, fraction rate).

    The rate ramps linearly over ``[0, ramp]``, holds, and ramps down over
    the final ``ramp`` seconds; the fraction integrates it exactly and
    reaches 1 at ``total_time``.  ``t`` outside the span clamps to the ends.
    """
    if not 0.0 < 2.0 * ramp_time < total_time:
        raise ValueError("need 0 < 2*ramp_time < total_time")
    peak = 1.0 / (total_time - ramp_time)
    if t <= 0.0:
        return 0.0, 0.0
    if t >= total_time:
        return 1.0, 0.0
    if t < ramp_time:
        rate = peak * t / ramp_time
        frac = 0.5 * peak * t**2 / ramp_time
    elif t <= total_time - ramp_time:
        rate = peak
        frac = 0.5 * peak * ramp_time + peak * (t - ramp_time)
    else:
        tau = total_time - t
        rate = peak * tau / ramp_time
        frac = 1.0 - 0.5 * peak * tau**2 / ramp_time
    return frac, rate


def trapezoid_profile(
    path_length: float, total_time: float, ramp_time: float, t: float
) -> float:
    """Speed (m/s) of the trapezoidal profile covering ``path_length``."""
    if path_length <= 0.0:
        raise ValueError("path_length must be positive")
    _, rate = trapezoid_fraction(total_time, ramp_time, t)
    return path_length * rate


@dataclass
class DesiredTrajectory:
    """Straight-line position sweep with a constant-axis attitude sweep.

    Both share one normalized trapezoid timing, so the twist is the exact
    analytic derivative of the pose and the goal is hit exactly at
    ``total_time``.
    """

    start: Pose
    goal: Pose
    total_time: float
    ramp_time: float = 4.0

    def __post_init__(self):
        trapezoid_fraction(self.total_time, self.ramp_time, 0.0)  # validates
        self._offset = self.goal.position - self.start.position
        q_rel = quat.multiply(self.goal.attitude, quat.conjugate(self.start.attitude))
        self._rotvec = quat.to_axis_angle(q_rel)

    def pose_twist(self, t: float) -> tuple[Pose, Twist]:
        frac, rate = trapezoid_fraction(self.total_time, self.ramp_time, t)
        if t >= self.total_time:
            pose = Pose(self.goal.position, self.goal.attitude)
        else:
            pose = Pose(
                self.start.position + frac * self._offset,
                quat.multiply(
                    quat.from_axis_angle(frac * self._rotvec), self.start.attitude
                ),
            )
        return pose, Twist(rate * self._offset, rate * self._rotvec)


def desired_pose_twist(traj: DesiredTrajectory, t: float) -> tuple[Pose, Twist]:
    return traj.pose_twist(t)


def feedback_term(error: PoseError, params: PlannerParams) -> np.ndarray:
    """Corrective twist for a pose error: the closed loop is e_dot = -term."""
    e = error.as_vector()
    if params.feedback_mode == "none":
        return np.zeros(6)
    if params.feedback_mode == "proportional":
        return params.k_p * e
    return phi(e, params.m, params.t_c, params.phi_form, params.deadband)


def mission_arm_velocity(
    snap: KinematicSnapshot,
    e1: PoseError,
    desired_twist: Twist,
    v_b: Twist,
    params: PlannerParams,
) -> np.ndarray:
    """Joint rates that track the end-effector reference.

    The commanded tool twist is feed-forward plus feedback, minus the part
    the moving base already provides; the robust inverse maps it to joint
    space.  Closing the loop gives ``e1_dot = -feedback(e1)`` whenever the
    Jacobian is well conditioned.
    """
    v_cmd = desired_twist.as_vector() + feedback_term(e1, params)
    operand = np.linalg.solve(snap.j_e, v_cmd) - snap.j_0 @ v_b.as_vector()
    return damped_pinv(snap.j_m1, params.eps, params.lambda_max) @ operand


def balance_joint_weights(params: PlannerParams) -> np.ndarray:
    """Joint-space weights of the balance solve (wrist de-emphasized).

    The balance arm's wrist joints move next to no mass, so their momentum
    columns sit just above the damping threshold where least-squares gains
    peak; weighting them down pushes those columns into the damped regime
    and routes the balance work through the shoulder and elbow.  The
    forearm roll keeps a moderate weight: it swings the distal links out of
    the arm plane, which restores the third position direction when the
    main chain passes through a near-planar configuration.
    """
    w = params.balance_wrist_weight
    return np.array([1.0, 1.0, 1.0, params.balance_roll_weight, w, w])


def balance_task(snap: KinematicSnapshot) -> np.ndarray:
    """Task matrix mapping balance-arm rates to scaled base twist."""
    return snap.h_0 @ np.linalg.solve(snap.j_b, snap.j_c2)


def balance_solver(
    snap: KinematicSnapshot, params: PlannerParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Staged solver of the balance task: ``rates = matrix @ demand + bias``.

    The task's first three rows (base position hold, scaled by total mass)
    are solved exactly through the strong columns.  The attitude rows are
    served in the position task's null space with constant damping: they
    are best-effort by design, because a thin arm's angular authority is
    weak and chasing it at full least-squares gain saturates the wrist;
    variable damping would also leave a high-gain band just above ``eps``.
    A posture-restoring pull (toward ``params.posture_reference``) acts as
    the prior of the damped secondary stage, so the internal degrees of
    freedom do not wander into ill-conditioned configurations over a long
    counter-stroke.  Returns ``(matrix, bias, task)``.
    """
    task = balance_task(snap)
    weights = balance_joint_weights(params)
    t_w = task * weights
    t_lin, t_ang = t_w[:3], t_w[3:]
    a_lin = damped_pinv(t_lin, params.eps, params.lambda_max)
    nullspace = np.eye(6) - a_lin @ t_lin
    u, s, vt = np.linalg.svd(t_ang @ nullspace, full_matrices=False)
    gains = s / (s**2 + params.lambda_max**2)
    a_ang = nullspace @ ((vt.T * gains) @ u.T)
    b = np.empty((6, 6))
    b[:, :3] = a_lin - a_ang @ (t_ang @ a_lin)
    b[:, 3:] = a_ang
    bias = np.zeros(6)
    if params.posture_reference is not None and params.posture_gain > 0.0:
        pull = params.posture_gain * (params.posture_reference - snap.theta2)
        y_c = nullspace @ (pull / weights)
        bias = weights * (y_c - a_ang @ (t_ang @ y_c))
    return weights[:, None] * b, bias, task


def balance_arm_velocity(
    snap: KinematicSnapshot,
    e0: PoseError,
    theta_dot1: np.ndarray,
    params: PlannerParams,
) -> np.ndarray:
    """Joint rates that pin the base pose via the momentum balance.

    Solves the momentum balance for the joint rates that realize the
    demanded base twist (pose feedback on ``e0``), in the metric set by
    ``h_0``: base position at full mass weighting and priority, attitude
    soft.  Algebraically this is the same equation as demanding the
    momentum ``C - j_c1 theta_dot1 - j_b v_desired``, but the residual is
    measured in base-twist units, so unserved angular momentum cannot bleed
    into a base position drift.
    """
    v_des = feedback_term(e0, params)
    free_twist = np.linalg.solve(
        snap.j_b, snap.momentum - snap.j_c1 @ theta_dot1
    )
    rhs = snap.h_0 @ (free_twist - v_des)
    matrix, bias, _ = balance_solver(snap, params)
    return matrix @ rhs + bias
