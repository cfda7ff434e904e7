"""Spatial-math primitives: poses, twists, pose errors, robust inverses.

Error convention used throughout the package: ``e = desired - actual``.
Position error is a plain difference; attitude error is ``2 * vec(q_err)``
with ``q_err = q_desired x q_actual^-1`` canonicalized to ``w >= 0``, which is
zero iff the attitudes coincide and well defined everywhere (it degrades
gracefully near 180 deg instead of blowing up the way minimal three-parameter
attitude representations do).

The damped pseudo-inverse implements variable damping: singular values above
the activation threshold ``eps`` are inverted exactly, values below it get a
damping term ``lambda^2 = lambda_max^2 * (1 - (sigma/eps)^2)`` so the gain
stays bounded through rank loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quat


def _as_vec3(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


@dataclass(frozen=True)
class Pose:
    """Rigid-body pose: position (m) plus unit quaternion attitude [w,x,y,z]."""

    position: np.ndarray
    attitude: np.ndarray = field(default_factory=lambda: quat.IDENTITY.copy())

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position, "position"))
        object.__setattr__(
            self, "attitude", quat.normalize(self.attitude, canonical=True)
        )

    def transform(self, v) -> np.ndarray:
        """Map a point from this pose's frame to the parent frame."""
        return self.position + quat.rotate(self.attitude, v)

    def compose(self, other: "Pose") -> "Pose":
        return Pose(
            self.transform(other.position),
            quat.multiply(self.attitude, other.attitude),
        )


@dataclass(frozen=True)
class Twist:
    """Spatial velocity: linear (m/s) and angular (rad/s), world frame."""

    linear: np.ndarray
    angular: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "linear", _as_vec3(self.linear, "linear"))
        object.__setattr__(self, "angular", _as_vec3(self.angular, "angular"))

    @staticmethod
    def zero() -> "Twist":
        return Twist(np.zeros(3), np.zeros(3))

    @staticmethod
    def from_vector(v) -> "Twist":
        v = np.asarray(v, dtype=float)
        return Twist(v[:3], v[3:6])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])


@dataclass(frozen=True)
class PoseError:
    """Pose error split into position part e_p (m) and attitude part e_o."""

    e_p: np.ndarray
    e_o: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "e_p", _as_vec3(self.e_p, "e_p"))
        object.__setattr__(self, "e_o", _as_vec3(self.e_o, "e_o"))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.e_p, self.e_o])

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_vector()))


def pose_error(desired: Pose, actual: Pose) -> PoseError:
    """Error of ``actual`` relative to ``desired`` (desired minus actual)."""
    q_err = quat.normalize(
        quat.multiply(desired.attitude, quat.conjugate(actual.attitude)),
        canonical=True,
    )
    return PoseError(desired.position - actual.position, 2.0 * q_err[1:])


def damped_pinv(J, eps: float = 0.02, lambda_max: float = 0.08) -> np.ndarray:
    """Singularity-robust inverse via SVD with variable damping.

    Equals the exact inverse whenever every singular value is at least
    ``eps``; below that, gains are damped to ``sigma / (sigma^2 + lambda^2)``
    and stay finite for any input, including rank-deficient ones.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if lambda_max < 0.0:
        raise ValueError("lambda_max must be non-negative")
    u, s, vt = np.linalg.svd(np.asarray(J, dtype=float), full_matrices=False)
    lam_sq = np.where(s < eps, lambda_max**2 * (1.0 - (s / eps) ** 2), 0.0)
    gains = s / (s**2 + lam_sq)
    # exact singular directions (s == 0) contribute zero, not 0/lambda^2 noise
    gains = np.where(s == 0.0, 0.0, gains)
    return (vt.T * gains) @ u.T


def nullspace_projector(
    J, mu: float = 1.0, eps: float = 0.0, lambda_max: float = 0.0
) -> np.ndarray:
    """Projector ``E - mu * J^T (J J^T)^-1 J`` onto the null space of J.

    With ``eps > 0`` the inner inverse is the damped pseudo-inverse, i.e.
    ``E - mu * damped_pinv(J) @ J``, which coincides with the exact projector
    away from singularities and stays bounded through them.  With ``eps = 0``
    exactly-zero singular values are simply excluded (Moore-Penrose limit).
    """
    J = np.asarray(J, dtype=float)
    u, s, vt = np.linalg.svd(J, full_matrices=False)
    if eps > 0.0:
        lam_sq = np.where(s < eps, lambda_max**2 * (1.0 - (s / eps) ** 2), 0.0)
        w = np.where(s == 0.0, 0.0, s**2 / (s**2 + lam_sq))
    else:
        cutoff = max(J.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        w = np.where(s > cutoff, 1.0, 0.0)
    return np.eye(J.shape[1]) - mu * (vt.T * w) @ vt
