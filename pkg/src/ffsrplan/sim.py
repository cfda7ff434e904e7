"""Deterministic scenario rollout, logging, and metrics.

A :class:`Scenario` bundles the robot, the initial state, the tracking
target, the optional obstacle, and every planning parameter.  ``run``
integrates the closed loop with fixed-step RK4 (base attitude advanced by the
quaternion exponential) through the selected rollout backend and returns a
:class:`TrajectoryLog` plus summary :class:`Metrics`.

Four planning methods cover the comparison matrix:

* ``predefined_time``: obstacle avoidance plus predefined-time feedback.
* ``proportional``: obstacle avoidance plus proportional feedback.
* ``no_feedback``: obstacle avoidance, feed-forward only.
* ``no_avoidance``: feedback per the planner params, escape terms disabled.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _packing, quat
from .avoidance import (
    CdfParams,
    Obstacle,
    avoidance_balance_velocity,
    avoidance_mission_velocity,
    escape_joint_velocity,
)
from .backend import get_backend
from .geom import Pose, Twist, pose_error
from .model import (
    RobotModel,
    SystemState,
    base_twist_from_momentum,
    forward_kinematics,
    snapshot,
)
from .geom import damped_pinv
from .planner import (
    DesiredTrajectory,
    PlannerParams,
    balance_arm_velocity,
    balance_solver,
    feedback_term,
    mission_arm_velocity,
)

METHODS = ("no_avoidance", "no_feedback", "proportional", "predefined_time")

CSV_HEADER = (
    ["t"]
    + [f"th1_{i}" for i in range(1, 7)]
    + [f"th2_{i}" for i in range(1, 7)]
    + [f"dth1_{i}" for i in range(1, 7)]
    + [f"dth2_{i}" for i in range(1, 7)]
    + ["bx", "by", "bz", "bqw", "bqx", "bqy", "bqz"]
    + ["ex", "ey", "ez", "eqw", "eqx", "eqy", "eqz"]
    + ["e1_norm", "e0p_norm", "dmin", "mom_res"]
)


class SimulationError(RuntimeError):
    """Raised when a rollout produces a non-finite command."""


@dataclass(frozen=True)
class Scenario:
    """Complete description of one rollout."""

    robot: RobotModel
    initial: SystemState
    target: Pose
    planner: PlannerParams = field(default_factory=PlannerParams)
    cdf: CdfParams = field(default_factory=CdfParams)
    obstacle: Obstacle | None = None
    total_time: float = 20.0
    dt: float = 1e-3
    method: str = "predefined_time"
    start: Pose | None = None
    ramp_time: float = 4.0
    momentum: np.ndarray = field(default_factory=lambda: np.zeros(6))
    base_reference: Pose | None = None
    settle_tol: float = 1e-6

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.dt <= 0.0 or self.total_time <= 0.0:
            raise ValueError("dt and total_time must be positive")
        momentum = np.asarray(self.momentum, dtype=float)
        if momentum.shape != (6,):
            raise ValueError("momentum must be a 6-vector")
        object.__setattr__(self, "momentum", momentum)
        if self.total_time < self.planner.t_c:
            warnings.warn(
                "total_time is shorter than the settling budget t_c",
                stacklevel=2,
            )

    @property
    def resolved_start(self) -> Pose:
        """Trajectory start: explicit, or the initial tool pose."""
        if self.start is not None:
            return self.start
        return forward_kinematics(self.robot, self.initial, 1)

    @property
    def resolved_base_reference(self) -> Pose:
        return self.base_reference if self.base_reference is not None else self.initial.base

    @property
    def effective_feedback_mode(self) -> str:
        if self.method == "no_feedback":
            return "none"
        if self.method == "proportional":
            return "proportional"
        if self.method == "predefined_time":
            return "predefined_time"
        return self.planner.feedback_mode

    @property
    def avoidance_enabled(self) -> bool:
        return self.method != "no_avoidance" and self.obstacle is not None

    def effective_planner(self) -> PlannerParams:
        reference = self.planner.posture_reference
        if reference is None:
            reference = self.initial.theta2
        return dataclasses.replace(
            self.planner,
            feedback_mode=self.effective_feedback_mode,
            posture_reference=reference,
        )

    def trajectory(self) -> DesiredTrajectory:
        return DesiredTrajectory(
            self.resolved_start, self.target, self.total_time, self.ramp_time
        )

    def with_method(self, method: str) -> "Scenario":
        return dataclasses.replace(self, method=method)

    def with_planner(self, **kwargs) -> "Scenario":
        return dataclasses.replace(
            self, planner=dataclasses.replace(self.planner, **kwargs)
        )


@dataclass
class TrajectoryLog:
    """Uniform-grid record of one rollout."""

    t: np.ndarray
    th1: np.ndarray
    th2: np.ndarray
    dth1: np.ndarray
    dth2: np.ndarray
    base: np.ndarray  # (n, 7) position + quaternion
    ee: np.ndarray  # (n, 7)
    e1: np.ndarray  # (n, 6)
    e0: np.ndarray  # (n, 6)
    dmin: np.ndarray
    mom_res: np.ndarray
    sigma_min: np.ndarray | None = None
    v_b: np.ndarray | None = None

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    @property
    def e1_norm(self) -> np.ndarray:
        return np.linalg.norm(self.e1, axis=1)

    @property
    def e1p_norm(self) -> np.ndarray:
        return np.linalg.norm(self.e1[:, :3], axis=1)

    @property
    def e0p_norm(self) -> np.ndarray:
        return np.linalg.norm(self.e0[:, :3], axis=1)

    @property
    def e0o_norm(self) -> np.ndarray:
        return np.linalg.norm(self.e0[:, 3:], axis=1)

    def to_csv(self, path) -> None:
        """Write the canonical CSV (17 significant digits, round-trip exact)."""
        cols = np.column_stack(
            [
                self.t,
                self.th1,
                self.th2,
                self.dth1,
                self.dth2,
                self.base,
                self.ee,
                self.e1_norm,
                self.e0p_norm,
                self.dmin,
                self.mom_res,
            ]
        )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(CSV_HEADER) + "\n")
            for row in cols:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    @staticmethod
    def read_csv(path) -> dict[str, np.ndarray]:
        """Parse a canonical CSV back into named columns."""
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if header != CSV_HEADER:
            raise ValueError("unexpected trajectory CSV header")
        return {name: data[:, i] for i, name in enumerate(header)}


@dataclass
class Metrics:
    """Headline numbers of one rollout."""

    final_position_error: float
    final_error_norm: float
    settling_time: float | None
    settling_time_base: float | None
    settling_time_full: float | None
    max_joint_speed1: np.ndarray
    max_joint_speed2: np.ndarray
    min_obstacle_distance: float
    base_error_peak: tuple[float, float]

    @property
    def max_joint_speed(self) -> float:
        return float(max(self.max_joint_speed1.max(), self.max_joint_speed2.max()))

    def to_dict(self) -> dict:
        return {
            "final_position_error_m": self.final_position_error,
            "final_error_norm": self.final_error_norm,
            "settling_time_s": self.settling_time,
            "settling_time_base_s": self.settling_time_base,
            "settling_time_full_s": self.settling_time_full,
            "max_joint_speed1_rad_s": [float(v) for v in self.max_joint_speed1],
            "max_joint_speed2_rad_s": [float(v) for v in self.max_joint_speed2],
            "max_joint_speed_deg_s": float(np.degrees(self.max_joint_speed)),
            "min_obstacle_distance_m": self.min_obstacle_distance,
            "base_error_peak": list(self.base_error_peak),
        }


def settling_time(times: np.ndarray, errors: np.ndarray, tol: float) -> float | None:
    """Earliest time after which the error stays below tol; None if never."""
    errors = np.asarray(errors, dtype=float)
    above = np.nonzero(errors >= tol)[0]
    if above.size == 0:
        return float(times[0])
    last = above[-1]
    if last == len(errors) - 1:
        return None
    return float(times[last + 1])


def _rates(scenario: Scenario, state: SystemState, t: float):
    """One stage evaluation through the public operations.

    The arm laws are written for a given base twist, but the base twist is
    itself set by the arms through the momentum balance; this resolves the
    algebraic loop exactly (linear 6x6 solve) so the mission arm compensates
    the base twist its own motion induces.
    """
    params = scenario.effective_planner()
    snap = snapshot(scenario.robot, state, scenario.momentum)
    desired_pose, desired_twist = scenario.trajectory().pose_twist(t)
    e1 = pose_error(desired_pose, snap.ee_pose)
    e0 = pose_error(scenario.resolved_base_reference, state.base)

    def laws(v_b: Twist):
        if scenario.avoidance_enabled:
            esc1 = escape_joint_velocity(
                scenario.robot, state, 1, scenario.obstacle, scenario.cdf
            )
            esc2 = escape_joint_velocity(
                scenario.robot, state, 2, scenario.obstacle, scenario.cdf
            )
            th1 = avoidance_mission_velocity(
                snap, e1, desired_twist, v_b, esc1, scenario.cdf, params
            )
            th2 = avoidance_balance_velocity(snap, e0, th1, esc2, scenario.cdf, params)
        else:
            th1 = mission_arm_velocity(snap, e1, desired_twist, v_b, params)
            th2 = balance_arm_velocity(snap, e0, th1, params)
        return th1, th2

    # evaluate the laws at v_b = 0, then use their affine structure in v_b
    # and th1 to close the momentum loop exactly
    th1_0, th2_0 = laws(Twist.zero())
    a_inv = damped_pinv(snap.j_m1, params.eps, params.lambda_max)
    b_matrix, _, _ = balance_solver(snap, params)
    b_eff = b_matrix @ (snap.h_0 @ np.linalg.solve(snap.j_b, snap.j_c1))
    v0 = base_twist_from_momentum(snap, th1_0, th2_0).as_vector()
    g_mat = np.linalg.solve(snap.j_b, snap.j_c1 - snap.j_c2 @ b_eff)
    m_sys = np.eye(6) - (a_inv @ snap.j_0) @ g_mat
    delta = np.linalg.solve(m_sys, -a_inv @ (snap.j_0 @ v0))
    th1d = th1_0 + delta
    th2d = th2_0 - b_eff @ delta
    v_b = base_twist_from_momentum(snap, th1d, th2d)
    return v_b, th1d, th2d


def step(scenario: Scenario, state: SystemState, t: float, dt: float) -> SystemState:
    """Advance one RK4 step through the public operations."""

    def stage(s: SystemState, at: float):
        v_b, th1d, th2d = _rates(scenario, s, at)
        return np.concatenate([v_b.as_vector(), th1d, th2d])

    def advance(s: SystemState, k: np.ndarray, h: float) -> SystemState:
        return SystemState(
            base=Pose(
                s.base.position + h * k[0:3],
                quat.integrate(s.base.attitude, k[3:6], h),
            ),
            theta1=s.theta1 + h * k[6:12],
            theta2=s.theta2 + h * k[12:18],
            time=s.time + h,
        )

    k1 = stage(state, t)
    k2 = stage(advance(state, k1, 0.5 * dt), t + 0.5 * dt)
    k3 = stage(advance(state, k2, 0.5 * dt), t + 0.5 * dt)
    k4 = stage(advance(state, k3, dt), t + dt)
    combo = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    if not np.all(np.isfinite(combo)):
        raise SimulationError(f"non-finite command at t={t:.6f}")
    return SystemState(
        base=Pose(
            state.base.position + dt * combo[0:3],
            quat.integrate(state.base.attitude, combo[3:6], dt),
        ),
        theta1=state.theta1 + dt * combo[6:12],
        theta2=state.theta2 + dt * combo[12:18],
        time=t + dt,
    )


def run(scenario: Scenario, backend: str | None = None) -> tuple[TrajectoryLog, Metrics]:
    """Roll out the scenario and summarize it."""
    mp = _packing.pack_model(scenario.robot)
    sp = _packing.pack_scenario(scenario)
    x0 = np.concatenate(
        [
            scenario.initial.base.position,
            scenario.initial.base.attitude,
            scenario.initial.theta1,
            scenario.initial.theta2,
        ]
    )
    n = int(round(scenario.total_time / scenario.dt))
    out = get_backend(backend).rollout(mp, sp, x0, n, scenario.dt)
    log = TrajectoryLog(
        t=out["t"],
        th1=out["th1"],
        th2=out["th2"],
        dth1=out["dth1"],
        dth2=out["dth2"],
        base=out["base"],
        ee=out["ee"],
        e1=out["e1"],
        e0=out["e0"],
        dmin=out["dmin"],
        mom_res=out["mom_res"],
        sigma_min=out["sigma_min"],
        v_b=out["v_b"],
    )
    for name in ("dth1", "dth2", "base", "ee"):
        values = getattr(log, name)
        bad = ~np.isfinite(values)
        if bad.any():
            first = int(np.argwhere(bad.any(axis=tuple(range(1, values.ndim))))[0])
            raise SimulationError(
                f"non-finite {name} at t={log.t[first]:.6f}"
            )
    return log, compute_metrics(log, scenario)


def compute_metrics(log: TrajectoryLog, scenario: Scenario) -> Metrics:
    return Metrics(
        final_position_error=float(log.e1p_norm[-1]),
        final_error_norm=float(log.e1_norm[-1]),
        settling_time=settling_time(log.t, log.e1p_norm, scenario.settle_tol),
        settling_time_base=settling_time(log.t, log.e0p_norm, scenario.settle_tol),
        settling_time_full=settling_time(log.t, log.e1_norm, scenario.settle_tol),
        max_joint_speed1=np.abs(log.dth1).max(axis=0),
        max_joint_speed2=np.abs(log.dth2).max(axis=0),
        min_obstacle_distance=float(log.dmin.min()),
        base_error_peak=(float(log.e0p_norm.max()), float(log.e0o_norm.max())),
    )
