"""Flat float64 layouts handing model and scenario data to the rollout kernels.

Both the numpy fallback and the compiled kernel parse exactly these layouts;
keep the index constants here as the single source of truth.
"""

from __future__ import annotations

import numpy as np

# model pack: base scalars, two arm blocks, two tool quaternions
M_BASE_MASS = 0
M_BASE_INERTIA = 1  # 9 entries row-major
M_ARM0 = 10
ARM_BLOCK = 7 + 6 * 16  # mount pos+quat, then per link: axis,rod,mass,inertia
LINK_BLOCK = 16
M_TOOL0 = M_ARM0 + 2 * ARM_BLOCK  # 2 * 4 entries
MODEL_PACK_LEN = M_TOOL0 + 8

# scenario pack
S_MOMENTUM = 0  # 6
S_M = 6
S_TC = 7
S_FEEDBACK_MODE = 8  # 0 none, 1 proportional, 2 predefined-time
S_KP = 9
S_PHI_FORM = 10  # 0 canonical, 1 literal
S_DEADBAND = 11
S_EPS = 12
S_LAMBDA_MAX = 13
S_AVOIDANCE = 14
S_HAS_OBSTACLE = 15
S_OBSTACLE = 16  # 3
S_RADIUS = 19
S_XI = 20
S_DELTA = 21
S_MU = 22
S_ESCAPE_GAIN = 23
S_START_POS = 24  # 3
S_START_QUAT = 27  # 4
S_GOAL_POS = 31  # 3
S_GOAL_QUAT = 34  # 4
S_TOTAL_TIME = 38
S_RAMP_TIME = 39
S_BASE_REF_POS = 40  # 3
S_BASE_REF_QUAT = 43  # 4
S_ROTVEC = 47  # 3, axis-angle of the attitude sweep
S_WRIST_WEIGHT = 50
S_POSTURE_GAIN = 51
S_THETA2_REF = 52  # 6
S_ROLL_WEIGHT = 58
SCENARIO_PACK_LEN = 59

FEEDBACK_CODES = {"none": 0.0, "proportional": 1.0, "predefined_time": 2.0}
PHI_CODES = {"canonical": 0.0, "paper_literal": 1.0}


def pack_model(model) -> np.ndarray:
    mp = np.zeros(MODEL_PACK_LEN)
    mp[M_BASE_MASS] = model.base_mass
    mp[M_BASE_INERTIA : M_BASE_INERTIA + 9] = np.asarray(
        model.base_inertia, dtype=float
    ).ravel()
    for a in range(2):
        base = M_ARM0 + a * ARM_BLOCK
        mount = model.mounts[a]
        mp[base : base + 3] = mount.position
        mp[base + 3 : base + 7] = mount.attitude
        links = model.arm(a + 1)
        for k, link in enumerate(links):
            off = base + 7 + k * LINK_BLOCK
            mp[off : off + 3] = link.axis
            mp[off + 3 : off + 6] = link.offset
            mp[off + 6] = link.mass
            mp[off + 7 : off + 16] = np.asarray(link.inertia, dtype=float).ravel()
        mp[M_TOOL0 + 4 * a : M_TOOL0 + 4 * a + 4] = model.tool_attitudes[a]
    return mp


def pack_scenario(scenario) -> np.ndarray:
    """Flatten a Scenario (duck-typed; see sim.Scenario) for the kernels."""
    from . import quat

    sp = np.zeros(SCENARIO_PACK_LEN)
    sp[S_MOMENTUM : S_MOMENTUM + 6] = scenario.momentum
    planner = scenario.planner
    sp[S_M] = planner.m
    sp[S_TC] = planner.t_c
    sp[S_FEEDBACK_MODE] = FEEDBACK_CODES[scenario.effective_feedback_mode]
    sp[S_KP] = planner.k_p
    sp[S_PHI_FORM] = PHI_CODES[planner.phi_form]
    sp[S_DEADBAND] = planner.deadband
    sp[S_EPS] = planner.eps
    sp[S_LAMBDA_MAX] = planner.lambda_max
    sp[S_WRIST_WEIGHT] = planner.balance_wrist_weight
    sp[S_ROLL_WEIGHT] = planner.balance_roll_weight
    sp[S_POSTURE_GAIN] = planner.posture_gain
    reference = planner.posture_reference
    if reference is None:
        reference = scenario.initial.theta2
    sp[S_THETA2_REF : S_THETA2_REF + 6] = reference
    sp[S_AVOIDANCE] = 1.0 if scenario.avoidance_enabled else 0.0
    if scenario.obstacle is not None:
        sp[S_HAS_OBSTACLE] = 1.0
        sp[S_OBSTACLE : S_OBSTACLE + 3] = scenario.obstacle.center
        sp[S_RADIUS] = scenario.obstacle.danger_radius
    cdf = scenario.cdf
    sp[S_XI] = cdf.xi
    sp[S_DELTA] = cdf.delta
    sp[S_MU] = cdf.mu
    sp[S_ESCAPE_GAIN] = cdf.escape_gain
    start = scenario.resolved_start
    sp[S_START_POS : S_START_POS + 3] = start.position
    sp[S_START_QUAT : S_START_QUAT + 4] = start.attitude
    sp[S_GOAL_POS : S_GOAL_POS + 3] = scenario.target.position
    sp[S_GOAL_QUAT : S_GOAL_QUAT + 4] = scenario.target.attitude
    sp[S_TOTAL_TIME] = scenario.total_time
    sp[S_RAMP_TIME] = scenario.ramp_time
    base_ref = scenario.resolved_base_reference
    sp[S_BASE_REF_POS : S_BASE_REF_POS + 3] = base_ref.position
    sp[S_BASE_REF_QUAT : S_BASE_REF_QUAT + 4] = base_ref.attitude
    q_rel = quat.multiply(scenario.target.attitude, quat.conjugate(start.attitude))
    sp[S_ROTVEC : S_ROTVEC + 3] = quat.to_axis_angle(q_rel)
    return sp
