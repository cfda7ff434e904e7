"""Unit-quaternion helpers.

Quaternions are stored as length-4 float arrays ``[w, x, y, z]`` (scalar
first, Hamilton convention).  All functions renormalize their result so the
unit-norm invariant survives chained operations.  ``q`` and ``-q`` encode the
same rotation; functions that need a unique representative canonicalize to
``w >= 0``.

Angular velocities are world-frame rad/s and act by left multiplication:
``q_dot = 0.5 * (0, omega) x q``.
"""

from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q, canonical: bool = False) -> np.ndarray:
    """Scale to unit norm; optionally flip sign so w >= 0."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("zero quaternion cannot be normalized")
    q = q / n
    if canonical and q[0] < 0.0:
        q = -q
    return q


def conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def multiply(a, b) -> np.ndarray:
    """Hamilton product a x b, renormalized."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return normalize(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def rotate(q, v) -> np.ndarray:
    """Rotate vector v by quaternion q (matrix-free sandwich product)."""
    w = q[0]
    u = np.asarray(q[1:], dtype=float)
    v = np.asarray(v, dtype=float)
    # Rodrigues form of q v q^-1 for unit q
    return v + 2.0 * np.cross(u, np.cross(u, v) + w * v)


def to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def from_axis_angle(rotvec) -> np.ndarray:
    """Exponential map: rotation vector (axis * angle, rad) to quaternion."""
    rotvec = np.asarray(rotvec, dtype=float)
    angle = np.linalg.norm(rotvec)
    if angle < 1e-12:
        # first-order expansion keeps the map smooth through zero
        return normalize(np.concatenate(([1.0], 0.5 * rotvec)))
    axis = rotvec / angle
    half = 0.5 * angle
    return normalize(np.concatenate(([np.cos(half)], np.sin(half) * axis)))


def to_axis_angle(q) -> np.ndarray:
    """Logarithm map: quaternion to rotation vector with angle in [0, pi]."""
    q = normalize(q, canonical=True)
    s = np.linalg.norm(q[1:])
    if s < 1e-12:
        return 2.0 * q[1:]
    angle = 2.0 * np.arctan2(s, q[0])
    return (angle / s) * q[1:]


def integrate(q, omega, dt: float) -> np.ndarray:
    """Advance q by world-frame angular velocity omega over dt."""
    return multiply(from_axis_angle(np.asarray(omega, dtype=float) * dt), q)
