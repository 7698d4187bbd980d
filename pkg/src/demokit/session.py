"""Single-operator session: wire envelopes, the mode state machine, the
training-set manifest, and message handling that ties recording, editing,
training, conditioning, and execution together.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import promp
from .kinematics import (
    ArmModel,
    IKParams,
    Pose,
    forward_kinematics,
    solve_ik_segment,
    KinematicsError,
)
from .scene import Scene, Marker, collision_check
from .trajectory import (
    CursorState,
    OrientationMode,
    PlaybackCursor,
    Recorder,
    Trajectory,
    TrajectoryStore,
    NotFound,
    redraw_from,
    step_cursor,
)
from .transforms import quat_normalize

TRAINING_DEADLINE_S = 1.0

MESSAGE_TYPES = (
    "StartRecording", "PoseSample", "StopRecording", "StepCursor", "Play",
    "Pause", "RedrawFrom", "Save", "Discard", "AddToTrainingSet",
    "ListTrainingSet", "DeleteTrajectory", "TrainModel", "PlaceMarker",
    "ConditionAndSample", "Execute", "Ack", "ErrorReply", "RobotState",
    "CollisionWarning", "ExecutionDone", "Busy",
)


class Mode(str, Enum):
    IDLE = "Idle"
    RECORDING = "Recording"
    REVIEWING = "Reviewing"
    TRAINING = "Training"
    EXECUTING = "Executing"


@dataclass(frozen=True)
class Envelope:
    type: str
    seq: int
    payload: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps({"type": self.type, "seq": self.seq,
                           "payload": self.payload})

    @staticmethod
    def from_json(line):
        doc = json.loads(line)
        return Envelope(type=doc["type"], seq=doc["seq"],
                        payload=doc.get("payload", {}))


class SessionError(Exception):
    """Carried back to the client as an ErrorReply; never tears the session."""

    def __init__(self, code, msg):
        super().__init__(msg)
        self.code = code


class TrainingSetManifest:
    """Training-set index persisted as JSON; writes land before acks."""

    def __init__(self, path):
        self.path = path
        self.entries = []
        if os.path.exists(path):
            with open(path) as f:
                self.entries = json.load(f)

    def _flush(self):
        with open(self.path, "w") as f:
            json.dump(self.entries, f, indent=1)

    def ids(self):
        return [e["id"] for e in self.entries]

    def add(self, traj_id, file_path):
        if traj_id in self.ids():
            raise SessionError("DuplicateId", "trajectory %s already in training set"
                               % traj_id)
        self.entries.append({"id": traj_id, "path": file_path,
                             "added_at": time.time()})
        self._flush()

    def remove(self, traj_id):
        before = len(self.entries)
        self.entries = [e for e in self.entries if e["id"] != traj_id]
        if len(self.entries) == before:
            raise SessionError("NotFound", "trajectory %s not in training set"
                               % traj_id)
        self._flush()


# rows of the mode transition table: mode -> allowed client message types
TRANSITIONS = {
    Mode.IDLE: {"StartRecording", "TrainModel", "PlaceMarker",
                "ConditionAndSample", "Execute", "AddToTrainingSet",
                "ListTrainingSet", "DeleteTrajectory"},
    Mode.RECORDING: {"PoseSample", "StopRecording"},
    Mode.REVIEWING: {"StepCursor", "Play", "Pause", "RedrawFrom", "Save",
                     "AddToTrainingSet", "Discard", "Execute"},
    Mode.TRAINING: set(),
    Mode.EXECUTING: {"ExecutionDone"},
}


class Session:
    """One interactive operator session over a data directory."""

    def __init__(self, data_dir, arm: ArmModel, scene: Scene = None,
                 ik_params: IKParams = IKParams(), home_q=None,
                 executor=None):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self.arm = arm
        self.scene = scene or Scene()
        self.ik_params = ik_params
        self.store = TrajectoryStore(os.path.join(data_dir, "trajectories"))
        self.manifest = TrainingSetManifest(os.path.join(data_dir, "manifest"))
        self.model_path = os.path.join(data_dir, "model")
        self.executor = executor  # callable(arm, traj, endpoint, params, seed_q)

        self.mode = Mode.IDLE
        self.recorder = None
        self.hand_follow = False
        self.active = None  # Trajectory under review
        self.cursor = None
        self.markers = []
        self.model = None
        self.last_generated = None
        self.last_seq = None
        self.last_joints = (np.asarray(home_q, dtype=float)
                            if home_q is not None else np.zeros(6))
        if os.path.exists(self.model_path):
            self.model = promp.load_model(self.model_path)

    # -- envelope plumbing ------------------------------------------------

    def handle_message(self, env: Envelope):
        """Apply one client envelope; returns the list of reply envelopes."""
        try:
            if not isinstance(env.seq, int):
                raise SessionError("PayloadValidation", "seq must be an integer")
            if self.last_seq is not None and env.seq <= self.last_seq:
                raise SessionError(
                    "PayloadValidation",
                    "seq %d not greater than previous %d" % (env.seq, self.last_seq))
            self.last_seq = env.seq
            if env.type not in MESSAGE_TYPES:
                raise SessionError("UnknownMessageType",
                                   "unknown message type %r" % env.type)
            if env.type not in TRANSITIONS[self.mode]:
                raise SessionError(
                    "InvalidTransition",
                    "message %s not valid in mode %s" % (env.type, self.mode.value))
            handler = getattr(self, "_on_" + _snake(env.type))
            return handler(env)
        except SessionError as exc:
            return [self._error(env, exc.code, str(exc))]
        except Exception as exc:  # malformed payloads must never crash the session
            return [self._error(env, "PayloadValidation", str(exc))]

    def _ack(self, env, payload=None):
        return Envelope("Ack", env.seq, payload or {})

    def _error(self, env, code, msg):
        return Envelope("ErrorReply", env.seq,
                        {"code": code, "message": msg, "mode": self.mode.value})

    # -- recording --------------------------------------------------------

    def _on_start_recording(self, env):
        period = float(env.payload.get("sample_period", 0.2))
        mode = OrientationMode(env.payload.get("orientation_mode", "fixed"))
        self.hand_follow = bool(env.payload.get("hand_follow", False))
        self.recorder = Recorder(sample_period=period, orientation_mode=mode)
        self.recorder.start()
        self.mode = Mode.RECORDING
        return [self._ack(env, {"mode": self.mode.value})]

    def _on_pose_sample(self, env):
        pose = _pose_from_payload(env.payload)
        t_wall = float(env.payload["t_wall"])
        accepted = self.recorder.record_sample(pose, t_wall)
        replies = [self._ack(env, {"accepted": accepted,
                                   "count": len(self.recorder)})]
        if accepted and self.hand_follow:
            replies.extend(self._hand_follow_replies(env, pose))
        return replies

    def _hand_follow_replies(self, env, pose: Pose):
        started = time.perf_counter()
        try:
            chain = solve_ik_segment(self.arm, self.last_joints, pose,
                                     substeps=1, params=self.ik_params)
        except KinematicsError as exc:
            return [Envelope("ErrorReply", env.seq,
                             {"code": "IKFailure", "message": str(exc),
                              "mode": self.mode.value})]
        self.last_joints = chain[-1]
        elapsed = time.perf_counter() - started
        replies = [Envelope("RobotState", env.seq, {
            "joints": [float(v) for v in self.last_joints],
            "solve_time": elapsed,
        })]
        hits = collision_check(self.arm, self.last_joints, self.scene.boxes)
        if hits:
            replies.append(Envelope("CollisionWarning", env.seq, {
                "contacts": [{"link": int(l), "box": b} for l, b in hits],
            }))
        return replies

    def _on_stop_recording(self, env):
        traj = self.recorder.finish()
        if len(traj) < 1:
            self.mode = Mode.IDLE
            self.recorder = None
            raise SessionError("EmptyRecording", "no samples were recorded")
        self.active = traj
        self.cursor = PlaybackCursor(trajectory_id=traj.id, index=len(traj) - 1)
        self.recorder = None
        self.mode = Mode.REVIEWING
        return [self._ack(env, {"mode": self.mode.value, "id": traj.id,
                                "length": len(traj)})]

    # -- review & editing -------------------------------------------------

    def _on_step_cursor(self, env):
        delta = int(env.payload["delta"])
        self.cursor = step_cursor(self.cursor, delta, len(self.active))
        wp = self.active.waypoints[self.cursor.index]
        return [self._ack(env, {"index": self.cursor.index}),
                Envelope("RobotState", env.seq, {
                    "index": self.cursor.index,
                    "t": wp.t,
                    "position": [float(v) for v in wp.pose.position],
                    "orientation": [float(v) for v in wp.pose.orientation],
                })]

    def _on_play(self, env):
        self.cursor = PlaybackCursor(self.cursor.trajectory_id,
                                     self.cursor.index, CursorState.PLAYING)
        return [self._ack(env, {"state": self.cursor.state.value})]

    def _on_pause(self, env):
        self.cursor = PlaybackCursor(self.cursor.trajectory_id,
                                     self.cursor.index, CursorState.PAUSED)
        return [self._ack(env, {"state": self.cursor.state.value})]

    def _on_redraw_from(self, env):
        index = int(env.payload["index"])
        poses = [_pose_from_payload(p) for p in env.payload.get("samples", [])]
        self.active = redraw_from(self.active, index, poses)
        self.cursor = PlaybackCursor(self.active.id, min(index, len(self.active) - 1))
        return [self._ack(env, {"length": len(self.active)})]

    def _require_reviewable(self):
        if self.active is None or len(self.active) < 2:
            raise SessionError("TooShort",
                               "active trajectory needs at least 2 waypoints")

    def _on_save(self, env):
        self._require_reviewable()
        traj_id = self.store.save(self.active)
        self._to_idle_from_review()
        return [self._ack(env, {"id": traj_id})]

    def _on_discard(self, env):
        self._to_idle_from_review()
        return [self._ack(env, {})]

    def _on_add_to_training_set(self, env):
        if self.mode == Mode.REVIEWING:
            self._require_reviewable()
            traj = self.active
            self.store.save(traj)
            self._to_idle_from_review()
        else:
            traj_id = env.payload.get("trajectory_id")
            if traj_id is None:
                raise SessionError("PayloadValidation",
                                   "trajectory_id required when not reviewing")
            try:
                traj = self.store.load(traj_id)
            except NotFound as exc:
                raise SessionError("NotFound", str(exc)) from exc
        path = os.path.join(self.store.root, "%s.json" % traj.id)
        self.manifest.add(traj.id, path)
        return [self._ack(env, {"id": traj.id, "training_set": self.manifest.ids()})]

    def _to_idle_from_review(self):
        self.active = None
        self.cursor = None
        self.mode = Mode.IDLE

    # -- training set management -----------------------------------------

    def _on_list_training_set(self, env):
        return [self._ack(env, {"entries": list(self.manifest.entries)})]

    def _on_delete_trajectory(self, env):
        traj_id = env.payload["trajectory_id"]
        self.manifest.remove(traj_id)
        try:
            self.store.delete(traj_id)
        except NotFound:
            pass  # manifest entry was stale; removing it is the repair
        return [self._ack(env, {"training_set": self.manifest.ids()})]

    # -- model ------------------------------------------------------------

    def _on_train_model(self, env):
        ids = self.manifest.ids()
        if len(ids) < 2:
            raise SessionError("TooFewDemos",
                               "training set has %d trajectories, need 2" % len(ids))
        demos = [self.store.load(i) for i in ids]
        cfg = promp.BasisConfig(n_basis=int(env.payload.get("n_basis",
                                                            promp.DEFAULT_BASIS_COUNT)))
        self.mode = Mode.TRAINING
        started = time.perf_counter()
        try:
            model = promp.train_promp(demos, cfg=cfg)
        finally:
            self.mode = Mode.IDLE
        elapsed = time.perf_counter() - started
        if elapsed > TRAINING_DEADLINE_S:
            raise SessionError("TrainingTooSlow",
                               "training took %.3f s (limit %.1f s)"
                               % (elapsed, TRAINING_DEADLINE_S))
        self.model = model
        promp.save_model(model, self.model_path)
        return [self._ack(env, {"demos": len(demos), "duration": elapsed,
                                "n_basis": cfg.n_basis})]

    def _on_place_marker(self, env):
        marker = Marker(position=env.payload["position"],
                        timestamp=float(env.payload["timestamp"]))
        self.markers.append(marker)
        return [self._ack(env, {"markers": len(self.markers)})]

    def _on_condition_and_sample(self, env):
        if self.model is None:
            raise SessionError("NoModel", "train a model before conditioning")
        noise = float(env.payload.get("noise_var", 1e-12))
        vias = [
            promp.ViaPoint(
                phase=promp.timestamp_to_phase(m.timestamp,
                                               self.model.reference_duration),
                value=m.position,
                noise_var=noise,
            )
            for m in self.markers
        ]
        conditioned = promp.condition(self.model, vias)
        n = int(env.payload.get("n", promp.DEFAULT_RESAMPLE))
        traj = promp.mean_trajectory(conditioned, n,
                                     traj_id="generated-%d" % env.seq)
        self.last_generated = traj
        from .trajectory import trajectory_to_dict
        return [self._ack(env, {"trajectory": trajectory_to_dict(traj)})]

    # -- execution --------------------------------------------------------

    def _on_execute(self, env):
        traj = self._execution_target(env.payload.get("trajectory_id"))
        endpoint = env.payload.get("endpoint")
        was_reviewing = self.mode == Mode.REVIEWING
        self.mode = Mode.EXECUTING
        try:
            if self.executor is None or endpoint is None:
                report = {"sent": 0, "note": "no robot endpoint configured"}
            else:
                report = self.executor(self.arm, traj, endpoint, self.ik_params,
                                       self.last_joints)
        except SessionError:
            self.mode = Mode.REVIEWING if was_reviewing else Mode.IDLE
            raise
        # synchronous executor: completion is applied internally, not via a
        # client ExecutionDone message, so client sequence numbers are untouched
        done = self._on_execution_done(env)
        return [self._ack(env, {"report": report})] + done

    def _execution_target(self, traj_id):
        if traj_id is not None:
            try:
                return self.store.load(traj_id)
            except NotFound as exc:
                raise SessionError("NotFound", str(exc)) from exc
        if self.mode == Mode.REVIEWING:
            self._require_reviewable()
            return self.active
        if self.last_generated is not None:
            return self.last_generated
        raise SessionError("PayloadValidation",
                           "no trajectory to execute: pass trajectory_id")

    def _on_execution_done(self, env):
        self.mode = Mode.IDLE
        self.active = None
        self.cursor = None
        return [Envelope("ExecutionDone", env.seq, {})]


def _snake(name):
    out = []
    for ch in name:
        if ch.isupper() and out:
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


def _pose_from_payload(doc):
    position = doc["position"]
    orientation = doc.get("orientation")
    if orientation is None:
        from .trajectory import TOOL_DOWN_QUAT
        orientation = TOOL_DOWN_QUAT
    return Pose(position, quat_normalize(orientation))
