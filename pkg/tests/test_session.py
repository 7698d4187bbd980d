import itertools

import numpy as np
import pytest

from demokit.kinematics import forward_kinematics
from demokit.session import (
    Envelope,
    MESSAGE_TYPES,
    Mode,
    Session,
    TRANSITIONS,
)
from demokit.trajectory import TOOL_DOWN_QUAT


SERVER_ONLY = {"Ack", "ErrorReply", "RobotState", "CollisionWarning", "Busy"}


def make_session(tmp_path, ur10, **kwargs):
    return Session(str(tmp_path / "data"), ur10, **kwargs)


class SeqGen:
    def __init__(self):
        self.n = 0

    def __call__(self, type_, payload=None):
        self.n += 1
        return Envelope(type_, self.n, payload or {})


def pose_payload(arm, q, t_wall):
    pose = forward_kinematics(arm, q)
    return {
        "position": [float(v) for v in pose.position],
        "orientation": [float(v) for v in pose.orientation],
        "t_wall": t_wall,
    }


def record_demo(session, seq, arm, n_samples=12, offset=0.0):
    assert session.handle_message(seq("StartRecording"))[0].type == "Ack"
    base = np.array([0.2, -1.0, 1.2, 0.1, 0.4, 0.0])
    for i in range(n_samples):
        q = base + [0.01 * i + offset, 0, 0, 0, 0, 0]
        replies = session.handle_message(
            seq("PoseSample", pose_payload(arm, q, i * 0.2)))
        assert replies[0].type == "Ack"
        assert replies[0].payload["accepted"]
    return session.handle_message(seq("StopRecording"))[0]


class TestStateTable:
    def test_start_recording_from_idle(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        reply = session.handle_message(seq("StartRecording"))[0]
        assert reply.type == "Ack"
        assert session.mode == Mode.RECORDING

    def test_train_while_recording_invalid(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        session.handle_message(seq("StartRecording"))
        reply = session.handle_message(seq("TrainModel"))[0]
        assert reply.type == "ErrorReply"
        assert reply.payload["code"] == "InvalidTransition"
        assert session.mode == Mode.RECORDING

    def test_unknown_type_error_reply(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        reply = session.handle_message(Envelope("Nonsense", 1, {}))[0]
        assert reply.type == "ErrorReply"
        assert reply.payload["code"] == "UnknownMessageType"

    def test_full_cross_product_invalid_pairs(self, tmp_path, ur10):
        """Every client message not in the transition row must produce
        InvalidTransition and leave the session state untouched."""
        client_types = [t for t in MESSAGE_TYPES if t not in SERVER_ONLY]
        drivers = {
            Mode.IDLE: lambda s, q: None,
            Mode.RECORDING: lambda s, q: s.handle_message(q("StartRecording")),
            Mode.REVIEWING: lambda s, q: record_demo(s, q, ur10, 4),
        }
        for mode, msg_type in itertools.product(drivers, client_types):
            if msg_type in TRANSITIONS[mode]:
                continue
            session = make_session(tmp_path / ("%s_%s" % (mode.value, msg_type)),
                                   ur10)
            seq = SeqGen()
            drivers[mode](session, seq)
            snapshot = (session.mode, session.active, session.cursor,
                        tuple(session.manifest.ids()))
            reply = session.handle_message(seq(msg_type))[0]
            assert reply.type == "ErrorReply", (mode, msg_type)
            assert reply.payload["code"] == "InvalidTransition", (mode, msg_type)
            assert (session.mode, session.active, session.cursor,
                    tuple(session.manifest.ids())) == snapshot

    def test_seq_must_increase(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        session.handle_message(Envelope("ListTrainingSet", 5, {}))
        reply = session.handle_message(Envelope("ListTrainingSet", 5, {}))[0]
        assert reply.type == "ErrorReply"

    def test_deterministic_replies(self, tmp_path, ur10):
        replies = []
        for sub in ("a", "b"):
            session = make_session(tmp_path / sub, ur10)
            seq = SeqGen()
            r = session.handle_message(seq("StartRecording"))
            replies.append([(e.type, e.seq, e.payload) for e in r])
        assert replies[0] == replies[1]

    def test_malformed_payload_never_crashes(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        session.handle_message(seq("StartRecording"))
        reply = session.handle_message(seq("PoseSample", {"bogus": 1}))[0]
        assert reply.type == "ErrorReply"
        assert reply.payload["code"] == "PayloadValidation"
        assert session.mode == Mode.RECORDING


class TestRecordingFlow:
    def test_record_review_redraw_save(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        stop = record_demo(session, seq, ur10)
        assert session.mode == Mode.REVIEWING
        assert stop.payload["length"] == 12

        step = session.handle_message(seq("StepCursor", {"delta": -7}))
        assert step[0].payload["index"] == 4
        assert step[1].type == "RobotState"

        samples = [
            {"position": [float(v) for v in
                          forward_kinematics(
                              ur10, [0.3 + 0.01 * k, -1.0, 1.2, 0.1, 0.4, 0.0]
                          ).position]}
            for k in range(5)
        ]
        redraw = session.handle_message(
            seq("RedrawFrom", {"index": 4, "samples": samples}))[0]
        assert redraw.payload["length"] == 10

        save = session.handle_message(seq("Save"))[0]
        assert save.type == "Ack"
        assert session.mode == Mode.IDLE
        assert session.store.load(save.payload["id"]) is not None

    def test_gating_applied_by_server(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        session.handle_message(seq("StartRecording"))
        q = np.array([0.2, -1.0, 1.2, 0.1, 0.4, 0.0])
        for i in range(21):
            session.handle_message(
                seq("PoseSample", pose_payload(ur10, q, i * 0.05)))
        stop = session.handle_message(seq("StopRecording"))[0]
        assert stop.payload["length"] == 6

    def test_hand_follow_reply_within_deadline(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10,
                               home_q=[0.2, -1.0, 1.2, 0.1, 0.4, 0.0])
        seq = SeqGen()
        session.handle_message(seq("StartRecording", {"hand_follow": True}))
        q = np.array([0.22, -1.0, 1.2, 0.1, 0.4, 0.0])
        replies = session.handle_message(
            seq("PoseSample", pose_payload(ur10, q, 0.0)))
        states = [r for r in replies if r.type == "RobotState"]
        assert len(states) == 1
        assert states[0].payload["solve_time"] <= 0.2
        got = forward_kinematics(ur10, states[0].payload["joints"])
        want = forward_kinematics(ur10, q)
        assert np.linalg.norm(got.position - want.position) <= 1e-4

    def test_hand_follow_ik_failure_keeps_recording(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        session.handle_message(seq("StartRecording", {"hand_follow": True}))
        replies = session.handle_message(seq("PoseSample", {
            "position": [4.0, 4.0, 4.0], "t_wall": 0.0}))
        errors = [r for r in replies if r.type == "ErrorReply"]
        assert errors and errors[0].payload["code"] == "IKFailure"
        assert session.mode == Mode.RECORDING

    def test_discard(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        record_demo(session, seq, ur10, 4)
        session.handle_message(seq("Discard"))
        assert session.mode == Mode.IDLE
        assert session.active is None


class TestTrainingSet:
    def test_manifest_reflects_add_delete(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        ids = []
        for k in range(3):
            record_demo(session, seq, ur10, 6, offset=0.05 * k)
            reply = session.handle_message(seq("AddToTrainingSet"))[0]
            assert reply.type == "Ack"
            ids.append(reply.payload["id"])
        assert session.manifest.ids() == ids

        # a fresh session over the same directory sees the same manifest
        session2 = Session(session.data_dir, ur10)
        assert session2.manifest.ids() == ids

        reply = session.handle_message(
            seq("DeleteTrajectory", {"trajectory_id": ids[1]}))[0]
        assert reply.payload["training_set"] == [ids[0], ids[2]]
        session3 = Session(session.data_dir, ur10)
        assert session3.manifest.ids() == [ids[0], ids[2]]

    def test_train_requires_two(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        reply = session.handle_message(seq("TrainModel"))[0]
        assert reply.payload["code"] == "TooFewDemos"

    def test_train_and_condition(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        for k in range(3):
            record_demo(session, seq, ur10, 8, offset=0.02 * k)
            session.handle_message(seq("AddToTrainingSet"))
        train = session.handle_message(seq("TrainModel"))[0]
        assert train.type == "Ack"
        assert train.payload["duration"] <= 1.0
        assert session.model is not None

        # marker on the model's own mean: conditioned output stays the mean
        from demokit.promp import mean_trajectory
        prior = mean_trajectory(session.model, 101)
        mid = prior.positions()[50]
        session.handle_message(seq("PlaceMarker", {
            "position": [float(v) for v in mid],
            "timestamp": 0.5 * session.model.reference_duration}))
        reply = session.handle_message(seq("ConditionAndSample", {"n": 101}))[0]
        assert reply.type == "Ack"
        got = np.array([w["position"]
                        for w in reply.payload["trajectory"]["waypoints"]])
        np.testing.assert_allclose(got, prior.positions(), atol=1e-6)
        # stored model untouched by conditioning
        np.testing.assert_array_equal(session.model.mean.shape, (3, 20))

    def test_condition_without_model(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        reply = session.handle_message(seq("ConditionAndSample"))[0]
        assert reply.payload["code"] == "NoModel"

    def test_retrain_overwrites_model_keeps_manifest(self, tmp_path, ur10):
        session = make_session(tmp_path, ur10)
        seq = SeqGen()
        for k in range(2):
            record_demo(session, seq, ur10, 6, offset=0.03 * k)
            session.handle_message(seq("AddToTrainingSet"))
        session.handle_message(seq("TrainModel"))
        before = session.manifest.ids()
        record_demo(session, seq, ur10, 6, offset=0.1)
        session.handle_message(seq("AddToTrainingSet"))
        session.handle_message(seq("TrainModel"))
        assert session.manifest.ids() == before + session.manifest.ids()[-1:]
        assert session.model is not None
