"""Numpy rollout kernel: the pure-Python fallback for the compiled core.

Operates on the flat layouts from ``_packing`` and mirrors the public-API
math exactly; the compiled kernel in ``_rollout_cy`` is a line-for-line port.
State vector layout: base position (3), base quaternion (4, wxyz), arm-1
angles (6), arm-2 angles (6).
"""

from __future__ import annotations

import numpy as np

from . import _packing as P
from .model import BASE_ATTITUDE_WEIGHT

BACKEND_NAME = "python"


def _quat_matrix(q):
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def _quat_exp(rotvec):
    angle = np.linalg.norm(rotvec)
    if angle < 1e-12:
        q = np.array([1.0, 0.5 * rotvec[0], 0.5 * rotvec[1], 0.5 * rotvec[2]])
        return q / np.linalg.norm(q)
    axis = rotvec / angle
    half = 0.5 * angle
    s = np.sin(half)
    return np.array([np.cos(half), s * axis[0], s * axis[1], s * axis[2]])


def _axis_rotation(axis, angle):
    c, s = np.cos(angle), np.sin(angle)
    k = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return c * np.eye(3) + s * k + (1.0 - c) * np.outer(axis, axis)


def unpack_model(mp):
    """Reshape the flat model pack into per-arm arrays (rollout-local)."""
    md = {
        "base_mass": mp[P.M_BASE_MASS],
        "base_inertia": mp[P.M_BASE_INERTIA : P.M_BASE_INERTIA + 9].reshape(3, 3),
        "mount_pos": np.empty((2, 3)),
        "mount_rot": np.empty((2, 3, 3)),
        "axes": np.empty((2, 6, 3)),
        "rods": np.empty((2, 6, 3)),
        "masses": np.empty((2, 6)),
        "inertias": np.empty((2, 6, 3, 3)),
        "tools": np.empty((2, 4)),
    }
    for a in range(2):
        base = P.M_ARM0 + a * P.ARM_BLOCK
        md["mount_pos"][a] = mp[base : base + 3]
        md["mount_rot"][a] = _quat_matrix(mp[base + 3 : base + 7])
        for k in range(6):
            off = base + 7 + k * P.LINK_BLOCK
            md["axes"][a, k] = mp[off : off + 3]
            md["rods"][a, k] = mp[off + 3 : off + 6]
            md["masses"][a, k] = mp[off + 6]
            md["inertias"][a, k] = mp[off + 7 : off + 16].reshape(3, 3)
        md["tools"][a] = mp[P.M_TOOL0 + 4 * a : P.M_TOOL0 + 4 * a + 4]
    return md


def _arm_frames(md, a, p_b, r_b, theta):
    r = r_b @ md["mount_rot"][a]
    p = p_b + r_b @ md["mount_pos"][a]
    joints = np.empty((7, 3))
    axes = np.empty((6, 3))
    coms = np.empty((6, 3))
    inertias = np.empty((6, 3, 3))
    for k in range(6):
        joints[k] = p
        r = r @ _axis_rotation(md["axes"][a, k], theta[k])
        axes[k] = r @ md["axes"][a, k]
        rod = r @ md["rods"][a, k]
        coms[k] = p + 0.5 * rod
        inertias[k] = r @ md["inertias"][a, k] @ r.T
        p = p + rod
    joints[6] = p
    return joints, axes, coms, inertias, r


def _coupling(joints, axes, coms, inertias, masses, p_b):
    """Arm momentum coupling via suffix sums over the distal bodies."""
    d = coms - p_b
    md_ = masses[:, None] * d
    sm = masses[::-1].cumsum()[::-1]
    sd = md_[::-1].cumsum(axis=0)[::-1]
    sq = (masses * (d * d).sum(axis=1))[::-1].cumsum()[::-1]
    sdd = (md_[:, :, None] * d[:, None, :])[::-1].cumsum(axis=0)[::-1]
    s_inertia = inertias[::-1].cumsum(axis=0)[::-1]
    h = np.empty((6, 6))
    for k in range(6):
        z = axes[k]
        g = p_b - joints[k]
        h[:3, k] = np.cross(z, sd[k] + sm[k] * g)
        h[3:, k] = (
            s_inertia[k] @ z
            + sq[k] * z
            + np.dot(g, sd[k]) * z
            - sdd[k] @ z
            - np.dot(sd[k], z) * g
        )
    return h


def _trapezoid(total, ramp, t):
    peak = 1.0 / (total - ramp)
    if t <= 0.0:
        return 0.0, 0.0
    if t >= total:
        return 1.0, 0.0
    if t < ramp:
        return 0.5 * peak * t * t / ramp, peak * t / ramp
    if t <= total - ramp:
        return 0.5 * peak * ramp + peak * (t - ramp), peak
    tau = total - t
    return 1.0 - 0.5 * peak * tau * tau / ramp, peak * tau / ramp


def _pose_error(p_d, q_d, p_a, q_a):
    qe = _quat_mul(q_d, np.array([q_a[0], -q_a[1], -q_a[2], -q_a[3]]))
    qe = qe / np.linalg.norm(qe)
    if qe[0] < 0.0:
        qe = -qe
    return np.concatenate([p_d - p_a, 2.0 * qe[1:]])


def _feedback(e, mode, m, t_c, k_p, phi_form, deadband):
    if mode == 0:
        return np.zeros(6)
    if mode == 1:
        return k_p * e
    r = np.linalg.norm(e)
    if r <= deadband:
        return np.zeros(6)
    if phi_form == 0:
        scale = np.exp(r**m) * r ** (1.0 - m) / (m * t_c)
    else:
        scale = np.exp(r**m) / (m * t_c)
    return (scale / r) * e


def _closest_on_arm(joints, center):
    best = np.inf
    best_link = 0
    best_point = joints[0]
    for k in range(6):
        a = joints[k]
        ab = joints[k + 1] - a
        denom = float(ab @ ab)
        s = 0.0 if denom == 0.0 else float(np.clip((center - a) @ ab / denom, 0.0, 1.0))
        point = a + s * ab
        dist = float(np.linalg.norm(center - point))
        if dist < best:
            best = dist
            best_link = k
            best_point = point
    return best, best_link, best_point


def _escape(joints, axes, d, link, point, center, radius, xi, delta, gain):
    if d >= radius or d == 0.0:
        return np.zeros(6)
    danger = min(delta, xi * (1.0 / d - 1.0 / radius) ** 2)
    normal = (point - center) / d
    out = np.zeros(6)
    for k in range(link + 1):
        out[k] = np.cross(axes[k], point - joints[k]) @ normal
    return gain * danger * out


def _damped_gains(s, eps, lam_max):
    lam_sq = np.where(s < eps, lam_max * lam_max * (1.0 - (s / eps) ** 2), 0.0)
    g = np.where(s == 0.0, 0.0, s / (s * s + lam_sq))
    return g


def eval_rates(md, sp, t, x):
    """Stage evaluation: rates (18,) plus a diagnostics tuple."""
    p_b = x[0:3]
    q_b = x[3:7]
    th1 = x[7:13]
    th2 = x[13:19]
    r_b = _quat_matrix(q_b)

    j1, z1, c1, i1, r_e1 = _arm_frames(md, 0, p_b, r_b, th1)
    j2, z2, c2, i2, _ = _arm_frames(md, 1, p_b, r_b, th2)
    m1 = md["masses"][0]
    m2 = md["masses"][1]

    # locked inertia about the base origin
    total_mass = md["base_mass"] + m1.sum() + m2.sum()
    weighted = md["base_mass"] * p_b + m1 @ c1 + m2 @ c2
    d_com = weighted / total_mass - p_b
    i_sys = r_b @ md["base_inertia"] @ r_b.T
    for coms, inertias, masses in ((c1, i1, m1), (c2, i2, m2)):
        d = coms - p_b
        i_sys += inertias.sum(axis=0)
        i_sys += (
            (masses * (d * d).sum(axis=1)).sum() * np.eye(3)
            - (masses[:, None] * d).T @ d
        )
    skew = np.array(
        [
            [0.0, -d_com[2], d_com[1]],
            [d_com[2], 0.0, -d_com[0]],
            [-d_com[1], d_com[0], 0.0],
        ]
    )
    h_b = np.zeros((6, 6))
    h_b[:3, :3] = total_mass * np.eye(3)
    h_b[:3, 3:] = -total_mass * skew
    h_b[3:, :3] = total_mass * skew
    h_b[3:, 3:] = i_sys

    j_c1 = _coupling(j1, z1, c1, i1, m1, p_b)
    j_c2 = _coupling(j2, z2, c2, i2, m2, p_b)

    ee = j1[6]
    j_m1 = np.empty((6, 6))
    for k in range(6):
        j_m1[:3, k] = np.cross(z1[k], ee - j1[k])
        j_m1[3:, k] = z1[k]

    # desired pose and twist
    frac, rate = _trapezoid(sp[P.S_TOTAL_TIME], sp[P.S_RAMP_TIME], t)
    start_p = sp[P.S_START_POS : P.S_START_POS + 3]
    goal_p = sp[P.S_GOAL_POS : P.S_GOAL_POS + 3]
    rotvec = sp[P.S_ROTVEC : P.S_ROTVEC + 3]
    if t >= sp[P.S_TOTAL_TIME]:
        p_d = goal_p.copy()
        q_d = sp[P.S_GOAL_QUAT : P.S_GOAL_QUAT + 4]
    else:
        p_d = start_p + frac * (goal_p - start_p)
        q_d = _quat_mul(
            _quat_exp(frac * rotvec), sp[P.S_START_QUAT : P.S_START_QUAT + 4]
        )
    v_d = np.concatenate([rate * (goal_p - start_p), rate * rotvec])

    q_ee = _quat_mul(_matrix_to_quat(r_e1), md["tools"][0])
    q_ee = q_ee / np.linalg.norm(q_ee)

    e1 = _pose_error(p_d, q_d, ee, q_ee)
    e0 = _pose_error(
        sp[P.S_BASE_REF_POS : P.S_BASE_REF_POS + 3],
        sp[P.S_BASE_REF_QUAT : P.S_BASE_REF_QUAT + 4],
        p_b,
        q_b,
    )

    mode = int(sp[P.S_FEEDBACK_MODE])
    phi_form = int(sp[P.S_PHI_FORM])
    m = sp[P.S_M]
    t_c = sp[P.S_TC]
    k_p = sp[P.S_KP]
    deadband = sp[P.S_DEADBAND]
    fb1 = _feedback(e1, mode, m, t_c, k_p, phi_form, deadband)
    fb0 = _feedback(e0, mode, m, t_c, k_p, phi_form, deadband)

    # obstacle terms
    avoid = sp[P.S_AVOIDANCE] > 0.0 and sp[P.S_HAS_OBSTACLE] > 0.0
    dmin = np.inf
    esc1 = np.zeros(6)
    esc2 = np.zeros(6)
    if sp[P.S_HAS_OBSTACLE] > 0.0:
        center = sp[P.S_OBSTACLE : P.S_OBSTACLE + 3]
        radius = sp[P.S_RADIUS]
        d1, link1, pt1 = _closest_on_arm(j1, center)
        d2, link2, pt2 = _closest_on_arm(j2, center)
        dmin = min(d1, d2)
        if avoid:
            xi, delta, gain = sp[P.S_XI], sp[P.S_DELTA], sp[P.S_ESCAPE_GAIN]
            esc1 = _escape(j1, z1, d1, link1, pt1, center, radius, xi, delta, gain)
            esc2 = _escape(j2, z2, d2, link2, pt2, center, radius, xi, delta, gain)

    eps = sp[P.S_EPS]
    lam_max = sp[P.S_LAMBDA_MAX]
    mu = sp[P.S_MU]
    wrist_w = sp[P.S_WRIST_WEIGHT]
    roll_w = sp[P.S_ROLL_WEIGHT]
    c_mom = sp[P.S_MOMENTUM : P.S_MOMENTUM + 6]

    j_0 = _transport_j0(ee, p_b)
    u, s, vt = np.linalg.svd(j_m1)
    g = _damped_gains(s, eps, lam_max)
    a_inv = (vt.T * g) @ u.T  # damped inverse of the mission Jacobian
    sig1 = s[-1]

    # balance task in the base-twist metric: position rows at full mass
    # weighting (primary, exact), attitude rows soft (secondary, damped in
    # the primary's null space); wrist columns weighted down
    k_inv = np.linalg.inv(h_b)
    s_vec = np.empty(6)
    s_vec[:3] = total_mass
    s_vec[3:] = BASE_ATTITUDE_WEIGHT
    hk = s_vec[:, None] * k_inv
    task = hk @ j_c2
    weights = np.array([1.0, 1.0, 1.0, roll_w, wrist_w, wrist_w])
    t_w = task * weights
    ul, sl, vlt = np.linalg.svd(t_w[:3], full_matrices=False)
    gl = _damped_gains(sl, eps, lam_max)
    a_lin = (vlt.T * gl) @ ul.T
    nullspace = np.eye(6) - a_lin @ t_w[:3]
    ua, sa, vat = np.linalg.svd(t_w[3:] @ nullspace, full_matrices=False)
    ga = sa / (sa * sa + lam_max * lam_max)  # constant damping: best-effort
    a_ang = nullspace @ ((vat.T * ga) @ ua.T)
    b_g = np.empty((6, 6))
    b_g[:, :3] = a_lin - a_ang @ (t_w[3:] @ a_lin)
    b_g[:, 3:] = a_ang
    b_g = weights[:, None] * b_g
    sig2 = sl[-1]

    # escape terms, projected so their task-space effect vanishes at mu=1
    esc1_term = np.zeros(6)
    if avoid and esc1.any():
        esc1_term = esc1 - mu * (vt.T * (s * g)) @ (vt @ esc1)
    t2_const = b_g @ (hk @ c_mom - s_vec * fb0)
    # posture-restoring prior of the damped secondary stage
    k_post = sp[P.S_POSTURE_GAIN]
    if k_post > 0.0:
        pull = k_post * (sp[P.S_THETA2_REF : P.S_THETA2_REF + 6] - th2)
        y_c = nullspace @ (pull / weights)
        t2_const = t2_const + weights * (y_c - a_ang @ (t_w[3:] @ y_c))
    if avoid and esc2.any():
        t2_const = t2_const + esc2 - mu * (b_g @ (task @ esc2))

    # exact coupled solve: the mission arm compensates the base twist that
    # its own motion (through the balance response) induces
    #   th2 = t2_const - b_eff th1
    #   v_b = v0 - g_mat th1
    #   th1 = a_inv (op - j_0 v_b) + esc1_term
    b_eff = b_g @ (hk @ j_c1)
    v0 = k_inv @ (c_mom - j_c2 @ t2_const)
    g_mat = k_inv @ (j_c1 - j_c2 @ b_eff)
    m_sys = np.eye(6) - a_inv @ (j_0 @ g_mat)
    rhs1 = a_inv @ (v_d + fb1 - j_0 @ v0) + esc1_term
    dth1 = np.linalg.solve(m_sys, rhs1)
    dth2 = t2_const - b_eff @ dth1
    v_b = k_inv @ (c_mom - j_c1 @ dth1 - j_c2 @ dth2)
    mom_res = np.linalg.norm(h_b @ v_b + j_c1 @ dth1 + j_c2 @ dth2 - c_mom)

    rates = np.concatenate([v_b, dth1, dth2])
    diag = (e1, e0, dmin, mom_res, ee, q_ee, sig1, sig2)
    return rates, diag


def _transport_j0(ee, p_b):
    """Base-twist to end-effector-twist transport map."""
    r = ee - p_b
    j0 = np.eye(6)
    j0[0, 4] = r[2]
    j0[0, 5] = -r[1]
    j0[1, 3] = -r[2]
    j0[1, 5] = r[0]
    j0[2, 3] = r[1]
    j0[2, 4] = -r[0]
    return j0


def _matrix_to_quat(r):
    t = np.trace(r)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s,
             (r[1, 0] - r[0, 1]) / s]
        )
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = np.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        q = np.array(
            [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s,
             (r[0, 2] + r[2, 0]) / s]
        )
    elif r[1, 1] > r[2, 2]:
        s = np.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        q = np.array(
            [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s,
             (r[1, 2] + r[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        q = np.array(
            [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s,
             (r[1, 2] + r[2, 1]) / s, 0.25 * s]
        )
    return q / np.linalg.norm(q)


def _advance(x, rates, h):
    out = np.empty(19)
    out[0:3] = x[0:3] + h * rates[0:3]
    q = _quat_mul(_quat_exp(h * rates[3:6]), x[3:7])
    out[3:7] = q / np.linalg.norm(q)
    out[7:19] = x[7:19] + h * rates[6:18]
    return out


def rk4_step(md, sp, t, x, dt):
    """One RK4 step; returns (next state, stage-1 rates, stage-1 diag)."""
    k1, diag = eval_rates(md, sp, t, x)
    k2, _ = eval_rates(md, sp, t + 0.5 * dt, _advance(x, k1, 0.5 * dt))
    k3, _ = eval_rates(md, sp, t + 0.5 * dt, _advance(x, k2, 0.5 * dt))
    k4, _ = eval_rates(md, sp, t + dt, _advance(x, k3, dt))
    combo = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    out = np.empty(19)
    out[0:3] = x[0:3] + dt * combo[0:3]
    q = _quat_mul(_quat_exp(dt * combo[3:6]), x[3:7])
    out[3:7] = q / np.linalg.norm(q)
    out[7:19] = x[7:19] + dt * combo[6:18]
    return out, k1, diag


def rollout(mp, sp, x0, n_steps, dt):
    """Integrate n_steps of RK4 from x0, logging state and commands per step."""
    md = unpack_model(np.asarray(mp, dtype=float))
    sp = np.asarray(sp, dtype=float)
    x = np.asarray(x0, dtype=float).copy()
    n = int(n_steps)

    out = {
        "t": np.empty(n + 1),
        "th1": np.empty((n + 1, 6)),
        "th2": np.empty((n + 1, 6)),
        "dth1": np.empty((n + 1, 6)),
        "dth2": np.empty((n + 1, 6)),
        "base": np.empty((n + 1, 7)),
        "ee": np.empty((n + 1, 7)),
        "e1": np.empty((n + 1, 6)),
        "e0": np.empty((n + 1, 6)),
        "dmin": np.empty(n + 1),
        "mom_res": np.empty(n + 1),
        "sigma_min": np.empty((n + 1, 2)),
        "v_b": np.empty((n + 1, 6)),
    }

    for i in range(n + 1):
        t = i * dt
        if i < n:
            x_next, k1, diag = rk4_step(md, sp, t, x, dt)
        else:
            k1, diag = eval_rates(md, sp, t, x)
            x_next = x
        e1, e0, dmin, mom_res, ee, q_ee, sig1, sig2 = diag
        out["t"][i] = t
        out["base"][i, :3] = x[0:3]
        out["base"][i, 3:] = x[3:7]
        out["th1"][i] = x[7:13]
        out["th2"][i] = x[13:19]
        out["v_b"][i] = k1[0:6]
        out["dth1"][i] = k1[6:12]
        out["dth2"][i] = k1[12:18]
        out["ee"][i, :3] = ee
        out["ee"][i, 3:] = q_ee
        out["e1"][i] = e1
        out["e0"][i] = e0
        out["dmin"][i] = dmin
        out["mom_res"][i] = mom_res
        out["sigma_min"][i, 0] = sig1
        out["sigma_min"][i, 1] = sig2
        x = x_next
    return out
