"""Forward kinematics, geometric Jacobian, and damped-least-squares IK
for a 6-joint serial arm described by Denavit-Hartenberg rows.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .transforms import (
    RigidTransform,
    quat_from_matrix,
    quat_multiply,
    quat_conjugate,
    quat_slerp,
    rotation_vector_from_quat,
    quat_angle_between,
    quat_normalize,
    IDENTITY_QUAT,
)

N_JOINTS = 6


class KinematicsError(Exception):
    pass


class NotConverged(KinematicsError):
    def __init__(self, msg, substep=None):
        super().__init__(msg)
        self.substep = substep


class Unreachable(KinematicsError):
    pass


class ArmFileError(KinematicsError):
    """Raised on a malformed arm description file; names the offending field."""


@dataclass(frozen=True)
class DHRow:
    theta_offset: float
    d: float
    a: float
    alpha: float

    def __post_init__(self):
        vals = (self.theta_offset, self.d, self.a, self.alpha)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("DH row fields must be finite")

    def matrix(self, q):
        """Homogeneous transform RotZ(theta)*TransZ(d)*TransX(a)*RotX(alpha)."""
        th = q + self.theta_offset
        ct, st = np.cos(th), np.sin(th)
        ca, sa = np.cos(self.alpha), np.sin(self.alpha)
        return np.array([
            [ct, -st * ca, st * sa, self.a * ct],
            [st, ct * ca, -ct * sa, self.a * st],
            [0.0, sa, ca, self.d],
            [0.0, 0.0, 0.0, 1.0],
        ])


@dataclass(frozen=True)
class Capsule:
    """Collision capsule attached to the frame after joint `joint`."""
    joint: int
    radius: float
    p0: np.ndarray
    p1: np.ndarray

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("capsule radius must be > 0")
        object.__setattr__(self, "p0", np.asarray(self.p0, dtype=float).reshape(3))
        object.__setattr__(self, "p1", np.asarray(self.p1, dtype=float).reshape(3))


@dataclass(frozen=True)
class Pose:
    position: np.ndarray
    orientation: np.ndarray  # unit quaternion [w, x, y, z]

    def __post_init__(self):
        p = np.asarray(self.position, dtype=float).reshape(3)
        q = np.asarray(self.orientation, dtype=float).reshape(4)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ValueError("pose orientation must be a unit quaternion")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", q)

    @staticmethod
    def identity():
        return Pose(np.zeros(3), IDENTITY_QUAT.copy())


@dataclass(frozen=True)
class ArmModel:
    rows: tuple
    joint_limits: np.ndarray  # (6, 2) radians
    base: RigidTransform = field(default_factory=RigidTransform.identity)
    capsules: tuple = ()

    def __post_init__(self):
        rows = tuple(self.rows)
        if len(rows) != N_JOINTS:
            raise ValueError("arm must have exactly %d DH rows" % N_JOINTS)
        limits = np.asarray(self.joint_limits, dtype=float).reshape(N_JOINTS, 2)
        if not np.all(limits[:, 0] < limits[:, 1]):
            raise ValueError("each joint limit must satisfy min < max")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "joint_limits", limits)
        object.__setattr__(self, "capsules", tuple(self.capsules))

    def clamp(self, q):
        return np.clip(q, self.joint_limits[:, 0], self.joint_limits[:, 1])

    def in_limits(self, q, tol=1e-12):
        return bool(np.all(q >= self.joint_limits[:, 0] - tol)
                    and np.all(q <= self.joint_limits[:, 1] + tol))

    def reach(self):
        """Radius of a ball (around the base) guaranteed to contain the arm."""
        return float(sum(abs(r.a) + abs(r.d) for r in self.rows))


@dataclass(frozen=True)
class IKParams:
    max_iterations: int = 200
    position_tol: float = 1e-4
    orientation_tol: float = 1e-3
    damping: float = 0.05
    step_clamp: float = 0.2

    def __post_init__(self):
        if self.position_tol <= 0 or self.orientation_tol <= 0:
            raise ValueError("tolerances must be > 0")
        if self.damping < 0:
            raise ValueError("damping must be >= 0")


def _frames(arm: ArmModel, q):
    """Homogeneous transforms of every joint frame, base frame first."""
    t = arm.base.matrix()
    out = [t]
    for row, qi in zip(arm.rows, q):
        t = t @ row.matrix(qi)
        out.append(t)
    return out


def forward_kinematics(arm: ArmModel, q) -> Pose:
    q = np.asarray(q, dtype=float).reshape(N_JOINTS)
    t = _frames(arm, q)[-1]
    return Pose(t[:3, 3].copy(), quat_from_matrix(t[:3, :3]))


def link_segments(arm: ArmModel, q):
    """World-frame capsule segments at configuration q: list of (joint, radius, a, b)."""
    frames = _frames(arm, np.asarray(q, dtype=float).reshape(N_JOINTS))
    out = []
    for cap in arm.capsules:
        t = frames[cap.joint + 1]
        a = t[:3, :3] @ cap.p0 + t[:3, 3]
        b = t[:3, :3] @ cap.p1 + t[:3, 3]
        out.append((cap.joint, cap.radius, a, b))
    return out


def jacobian(arm: ArmModel, q):
    """Geometric Jacobian: rows 0-2 linear (m/rad), rows 3-5 angular (rad/rad)."""
    q = np.asarray(q, dtype=float).reshape(N_JOINTS)
    frames = _frames(arm, q)
    p_ee = frames[-1][:3, 3]
    J = np.zeros((6, N_JOINTS))
    for i in range(N_JOINTS):
        z = frames[i][:3, 2]
        p = frames[i][:3, 3]
        J[:3, i] = np.cross(z, p_ee - p)
        J[3:, i] = z
    return J


def _pose_error(current: Pose, target: Pose):
    """6-vector [dp; dtheta] from current to target."""
    dp = target.position - current.position
    dq = quat_multiply(target.orientation, quat_conjugate(current.orientation))
    return np.concatenate([dp, rotation_vector_from_quat(quat_normalize(dq))])


def solve_ik(arm: ArmModel, target: Pose, seed, params: IKParams = IKParams()):
    """Damped-least-squares IK with per-step clamping and joint-limit projection."""
    dist = np.linalg.norm(target.position - arm.base.translation)
    if dist > arm.reach():
        raise Unreachable("target %.3f m from base exceeds reach %.3f m"
                          % (dist, arm.reach()))
    q = arm.clamp(np.asarray(seed, dtype=float).reshape(N_JOINTS))
    lam2 = params.damping ** 2
    for _ in range(params.max_iterations):
        current = forward_kinematics(arm, q)
        err = _pose_error(current, target)
        if (np.linalg.norm(err[:3]) <= params.position_tol
                and np.linalg.norm(err[3:]) <= params.orientation_tol):
            return q
        J = jacobian(arm, q)
        dq = J.T @ np.linalg.solve(J @ J.T + lam2 * np.eye(6), err)
        dq = np.clip(dq, -params.step_clamp, params.step_clamp)
        q = arm.clamp(q + dq)
    raise NotConverged("IK did not converge in %d iterations" % params.max_iterations)


def solve_ik_segment(arm: ArmModel, from_q, to_pose: Pose, substeps: int,
                     params: IKParams = IKParams()):
    """Solve IK along an interpolated Cartesian segment, warm-starting each step."""
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    from_q = np.asarray(from_q, dtype=float).reshape(N_JOINTS)
    start = forward_kinematics(arm, from_q)
    out = []
    q = from_q
    for k in range(1, substeps + 1):
        u = k / substeps
        pose = Pose(
            (1 - u) * start.position + u * to_pose.position,
            quat_slerp(start.orientation, to_pose.orientation, u),
        )
        try:
            q = solve_ik(arm, pose, q, params)
        except KinematicsError as exc:
            raise NotConverged("segment failed at substep %d: %s" % (k - 1, exc),
                               substep=k - 1) from exc
        out.append(q)
    return out


def orientation_error(a, b):
    """Shortest-arc angle between two orientations, radians."""
    return quat_angle_between(a, b)


def load_arm(path) -> ArmModel:
    """Load an arm description file (JSON: dh, limits, capsules, base)."""
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ArmFileError("cannot read arm file %s: %s" % (path, exc)) from exc
    return arm_from_dict(doc)


def arm_from_dict(doc) -> ArmModel:
    def need(container, key, where):
        if key not in container:
            raise ArmFileError("missing field '%s' in %s" % (key, where))
        return container[key]

    dh = need(doc, "dh", "arm file")
    if len(dh) != N_JOINTS:
        raise ArmFileError("field 'dh' must have %d rows, got %d" % (N_JOINTS, len(dh)))
    try:
        rows = [DHRow(theta_offset=need(r, "theta_offset", "dh row %d" % i),
                      d=need(r, "d", "dh row %d" % i),
                      a=need(r, "a", "dh row %d" % i),
                      alpha=need(r, "alpha", "dh row %d" % i))
                for i, r in enumerate(dh)]
    except (TypeError, ValueError) as exc:
        raise ArmFileError("bad value in field 'dh': %s" % exc) from exc

    limits = need(doc, "limits", "arm file")
    if len(limits) != N_JOINTS:
        raise ArmFileError("field 'limits' must have %d pairs" % N_JOINTS)

    capsules = []
    for i, c in enumerate(doc.get("capsules", [])):
        capsules.append(Capsule(
            joint=need(c, "joint", "capsules[%d]" % i),
            radius=need(c, "radius", "capsules[%d]" % i),
            p0=need(c, "p0", "capsules[%d]" % i),
            p1=need(c, "p1", "capsules[%d]" % i),
        ))

    base_doc = doc.get("base", {"translation": [0, 0, 0], "rotation": [1, 0, 0, 0]})
    try:
        base = RigidTransform(
            translation=need(base_doc, "translation", "base"),
            rotation=need(base_doc, "rotation", "base"),
        )
    except ValueError as exc:
        raise ArmFileError("bad value in field 'base': %s" % exc) from exc

    try:
        return ArmModel(rows=rows, joint_limits=limits, base=base, capsules=capsules)
    except ValueError as exc:
        raise ArmFileError(str(exc)) from exc
