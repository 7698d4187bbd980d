"""Quaternion and rigid-transform math shared across the package.

Quaternions are stored as numpy arrays [w, x, y, z], scalar first.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNIT_NORM_TOL = 1e-9


def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("cannot normalize zero or non-finite quaternion")
    return q / n


def quat_multiply(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_conjugate(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v):
    """Rotate 3-vector v by unit quaternion q."""
    w, x, y, z = q
    u = np.array([x, y, z])
    v = np.asarray(v, dtype=float)
    return v + 2.0 * np.cross(u, np.cross(u, v) + w * v)


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_from_matrix(m):
    """Shepperd's method; returns a unit quaternion with non-negative w."""
    m = np.asarray(m, dtype=float)
    t = np.trace(m)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s,
                      (m[1, 0] - m[0, 1]) / s])
    else:
        i = int(np.argmax([m[0, 0], m[1, 1], m[2, 2]]))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(m[i, i] - m[j, j] - m[k, k] + 1.0) * 2.0
        q = np.empty(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
    if q[0] < 0:
        q = -q
    return quat_normalize(q)


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def quat_angle(q):
    """Rotation angle of a unit quaternion, in [0, pi].

    atan2 keeps the angle well conditioned near the identity, where
    arccos of the scalar part loses half the significant digits.
    """
    s = float(np.linalg.norm(q[1:]))
    return 2.0 * np.arctan2(s, abs(float(q[0])))


def quat_angle_between(a, b):
    """Shortest-arc angle between two unit quaternions (double cover resolved)."""
    return quat_angle(quat_multiply(quat_conjugate(a), b))


def quat_slerp(a, b, u):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.dot(a, b) < 0:
        b = -b
    dot = min(1.0, max(-1.0, float(np.dot(a, b))))
    theta = np.arccos(dot)
    if theta < 1e-12:
        return quat_normalize(a + u * (b - a))
    s = np.sin(theta)
    return quat_normalize((np.sin((1 - u) * theta) / s) * a + (np.sin(u * theta) / s) * b)


def rotation_vector_from_quat(q):
    """Axis-angle vector of a unit quaternion (shortest arc)."""
    q = np.asarray(q, dtype=float)
    if q[0] < 0:
        q = -q
    angle = quat_angle(q)
    s = np.linalg.norm(q[1:])
    if s < 1e-12:
        return np.zeros(3)
    return (angle / s) * q[1:]


IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class RigidTransform:
    """Rotation-then-translation map p -> R p + t."""
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float).reshape(3)
        r = np.asarray(self.rotation, dtype=float).reshape(4)
        if abs(np.linalg.norm(r) - 1.0) > UNIT_NORM_TOL:
            raise ValueError("rotation quaternion must be unit norm")
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", r)

    def apply(self, p):
        return quat_rotate(self.rotation, p) + self.translation

    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.rotation)
        m[:3, 3] = self.translation
        return m

    @staticmethod
    def identity():
        return RigidTransform()


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform equal to applying b first, then a."""
    return RigidTransform(
        translation=quat_rotate(a.rotation, b.translation) + a.translation,
        rotation=quat_normalize(quat_multiply(a.rotation, b.rotation)),
    )


def invert(a: RigidTransform) -> RigidTransform:
    rinv = quat_conjugate(a.rotation)
    return RigidTransform(
        translation=-quat_rotate(rinv, a.translation),
        rotation=rinv,
    )
