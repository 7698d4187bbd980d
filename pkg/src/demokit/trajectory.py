"""Demonstration recording, playback cursor, rewind/redraw editing,
phase resampling, and on-disk trajectory storage.
"""
from __future__ import annotations

import json
import os
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .kinematics import Pose
from .transforms import (
    quat_normalize,
    quat_multiply,
    quat_conjugate,
    quat_slerp,
    quat_from_axis_angle,
)

DEFAULT_SAMPLE_PERIOD = 0.2

# End-effector tool axis pointing straight down (180 deg about x).
TOOL_DOWN_QUAT = np.array([0.0, 1.0, 0.0, 0.0])
# Hand-frame orientation corresponding to a palm-facing-down pose.
PALM_DOWN_QUAT = np.array([1.0, 0.0, 0.0, 0.0])
# Fixed calibration rotation sending palm-down to tool-down (applied on the left).
_CALIBRATION_QUAT = quat_multiply(TOOL_DOWN_QUAT, quat_conjugate(PALM_DOWN_QUAT))


class TrajectoryError(Exception):
    pass


class RecorderInactive(TrajectoryError):
    pass


class IndexOutOfRange(TrajectoryError):
    pass


class TooShort(TrajectoryError):
    pass


class NotFound(TrajectoryError):
    pass


class StorageFailure(TrajectoryError):
    pass


class OrientationMode(str, Enum):
    FIXED = "fixed"
    CAPTURED = "captured"


class CursorState(str, Enum):
    PLAYING = "playing"
    PAUSED = "paused"


@dataclass(frozen=True)
class Waypoint:
    t: float
    pose: Pose

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("waypoint time must be >= 0")


@dataclass(frozen=True)
class Trajectory:
    id: str
    waypoints: tuple
    sample_period: float = DEFAULT_SAMPLE_PERIOD
    orientation_mode: OrientationMode = OrientationMode.FIXED

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        ts = [w.t for w in self.waypoints]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("waypoint timestamps must be strictly increasing")

    def __len__(self):
        return len(self.waypoints)

    @property
    def duration(self):
        if not self.waypoints:
            return 0.0
        return self.waypoints[-1].t

    def positions(self):
        return np.array([w.pose.position for w in self.waypoints])


@dataclass(frozen=True)
class PlaybackCursor:
    trajectory_id: str
    index: int = 0
    state: CursorState = CursorState.PAUSED


def map_hand_orientation(raw, mode: OrientationMode):
    """Map a tracked hand orientation to the end-effector orientation."""
    raw = quat_normalize(raw)
    if mode == OrientationMode.FIXED:
        return TOOL_DOWN_QUAT.copy()
    return quat_normalize(quat_multiply(_CALIBRATION_QUAT, raw))


class Recorder:
    """Gates an incoming pose stream onto an exact sample-period grid.

    Samples are accepted when at least one period of wall time has elapsed
    since the previous accepted sample, then re-stamped at index*period.
    """

    def __init__(self, sample_period=DEFAULT_SAMPLE_PERIOD,
                 orientation_mode=OrientationMode.FIXED):
        if sample_period <= 0:
            raise ValueError("sample_period must be > 0")
        self.sample_period = sample_period
        self.orientation_mode = OrientationMode(orientation_mode)
        self.active = False
        self._waypoints = []
        self._last_wall = None

    def start(self):
        self.active = True
        self._waypoints = []
        self._last_wall = None

    def record_sample(self, pose: Pose, t_wall: float) -> bool:
        if not self.active:
            raise RecorderInactive("recorder is not active")
        if self._last_wall is not None:
            # allow tiny scheduler jitter below one microsecond
            if t_wall - self._last_wall < self.sample_period - 1e-6:
                return False
        self._last_wall = t_wall
        t = len(self._waypoints) * self.sample_period
        self._waypoints.append(Waypoint(t=t, pose=pose))
        return True

    def finish(self, traj_id=None) -> Trajectory:
        self.active = False
        return Trajectory(
            id=traj_id or uuid.uuid4().hex,
            waypoints=tuple(self._waypoints),
            sample_period=self.sample_period,
            orientation_mode=self.orientation_mode,
        )

    def __len__(self):
        return len(self._waypoints)


def step_cursor(cursor: PlaybackCursor, delta: int, length: int) -> PlaybackCursor:
    idx = max(0, min(length - 1, cursor.index + delta))
    return replace(cursor, index=idx)


def redraw_from(traj: Trajectory, cursor_index: int, new_samples) -> Trajectory:
    """Keep waypoints up to and including cursor_index, then append new
    (already downsampled) poses re-stamped on the same period grid."""
    if not 0 <= cursor_index < len(traj):
        raise IndexOutOfRange("cursor index %d out of range [0, %d)"
                              % (cursor_index, len(traj)))
    kept = traj.waypoints[:cursor_index + 1]
    added = tuple(
        Waypoint(t=(cursor_index + 1 + k) * traj.sample_period, pose=p)
        for k, p in enumerate(new_samples)
    )
    return replace(traj, waypoints=kept + added)


def resample_phase(traj: Trajectory, n: int):
    """Resample onto n uniform phases in [0, 1] of normalized time.

    Positions interpolate linearly, orientations spherically.
    Returns a list of (phase, Pose).
    """
    if len(traj) < 2:
        raise TooShort("need at least 2 waypoints to resample")
    if n < 2:
        raise TooShort("need n >= 2 resample points")
    ts = np.array([w.t for w in traj.waypoints])
    t0, t1 = ts[0], ts[-1]
    out = []
    j = 0
    for k in range(n):
        phase = k / (n - 1)
        t = t0 + phase * (t1 - t0)
        while j < len(ts) - 2 and ts[j + 1] < t:
            j += 1
        a, b = traj.waypoints[j], traj.waypoints[j + 1]
        u = (t - a.t) / (b.t - a.t)
        u = min(1.0, max(0.0, u))
        if u == 0.0:
            pose = a.pose
        elif u == 1.0:
            pose = b.pose
        else:
            pose = Pose(
                (1 - u) * a.pose.position + u * b.pose.position,
                quat_slerp(a.pose.orientation, b.pose.orientation, u),
            )
        out.append((phase, pose))
    return out


def trajectory_to_dict(traj: Trajectory):
    return {
        "id": traj.id,
        "sample_period": traj.sample_period,
        "orientation_mode": traj.orientation_mode.value,
        "waypoints": [
            {
                "t": w.t,
                "position": [float(v) for v in w.pose.position],
                "orientation": [float(v) for v in w.pose.orientation],
            }
            for w in traj.waypoints
        ],
    }


def trajectory_from_dict(doc) -> Trajectory:
    return Trajectory(
        id=doc["id"],
        sample_period=doc["sample_period"],
        orientation_mode=OrientationMode(doc["orientation_mode"]),
        waypoints=tuple(
            Waypoint(t=w["t"], pose=Pose(w["position"], w["orientation"]))
            for w in doc["waypoints"]
        ),
    )


class TrajectoryStore:
    """One JSON document per trajectory under a directory."""

    def __init__(self, root):
        self.root = root
        os.makedirs(root, exist_ok=True)

    def _path(self, traj_id):
        return os.path.join(self.root, "%s.json" % traj_id)

    def save(self, traj: Trajectory) -> str:
        try:
            with open(self._path(traj.id), "w") as f:
                json.dump(trajectory_to_dict(traj), f, indent=1)
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc
        return traj.id

    def load(self, traj_id) -> Trajectory:
        path = self._path(traj_id)
        if not os.path.exists(path):
            raise NotFound("no trajectory with id %s" % traj_id)
        try:
            with open(path) as f:
                return trajectory_from_dict(json.load(f))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise StorageFailure(str(exc)) from exc

    def delete(self, traj_id):
        path = self._path(traj_id)
        if not os.path.exists(path):
            raise NotFound("no trajectory with id %s" % traj_id)
        os.remove(path)

    def list_ids(self):
        return sorted(
            os.path.splitext(name)[0]
            for name in os.listdir(self.root)
            if name.endswith(".json")
        )
