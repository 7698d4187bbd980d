import numpy as np
import pytest
from hypothesis import given, strategies as st

from demokit.kinematics import Pose
from demokit.trajectory import (
    CursorState,
    IndexOutOfRange,
    NotFound,
    OrientationMode,
    PlaybackCursor,
    Recorder,
    RecorderInactive,
    TooShort,
    TrajectoryStore,
    TOOL_DOWN_QUAT,
    PALM_DOWN_QUAT,
    map_hand_orientation,
    redraw_from,
    resample_phase,
    step_cursor,
    trajectory_to_dict,
    trajectory_from_dict,
)
from demokit.transforms import (
    quat_multiply,
    quat_from_axis_angle,
    quat_angle_between,
)

from conftest import line_trajectory, position_trajectory


def pose_at(x, y=0.0, z=0.0):
    return Pose([x, y, z], TOOL_DOWN_QUAT)


class TestRecorder:
    def test_downsamples_to_period(self):
        rec = Recorder(sample_period=0.2)
        rec.start()
        for i in range(21):
            rec.record_sample(pose_at(i * 0.01), t_wall=i * 0.05)
        traj = rec.finish()
        assert len(traj) == 6
        np.testing.assert_allclose([w.t for w in traj.waypoints],
                                   [0.0, 0.2, 0.4, 0.6, 0.8, 1.0], atol=1e-12)

    def test_single_sample(self):
        rec = Recorder()
        rec.start()
        assert rec.record_sample(pose_at(0.1), 3.7)
        traj = rec.finish()
        assert len(traj) == 1
        assert traj.waypoints[0].t == 0.0

    def test_acceptance_rule_by_hand(self):
        rec = Recorder(sample_period=0.2)
        rec.start()
        assert rec.record_sample(pose_at(0.0), 0.0)
        assert not rec.record_sample(pose_at(0.1), 0.19)
        assert rec.record_sample(pose_at(0.2), 0.21)
        traj = rec.finish()
        assert len(traj) == 2
        np.testing.assert_allclose([w.t for w in traj.waypoints], [0.0, 0.2])

    def test_inactive_raises(self):
        rec = Recorder()
        with pytest.raises(RecorderInactive):
            rec.record_sample(pose_at(0.0), 0.0)

    def test_uniform_grid_despite_jitter(self):
        rec = Recorder(sample_period=0.2)
        rec.start()
        rng = np.random.default_rng(5)
        t = 0.0
        for _ in range(40):
            rec.record_sample(pose_at(t), t)
            t += 0.2 + rng.uniform(0.0, 0.05)
        traj = rec.finish()
        dts = np.diff([w.t for w in traj.waypoints])
        np.testing.assert_allclose(dts, 0.2, atol=1e-12)


class TestMapHandOrientation:
    def test_fixed_mode_is_constant(self):
        raw = quat_from_axis_angle([0.3, 0.7, 0.1], 1.1)
        out = map_hand_orientation(raw, OrientationMode.FIXED)
        np.testing.assert_allclose(out, TOOL_DOWN_QUAT)

    def test_palm_down_maps_to_tool_down(self):
        out = map_hand_orientation(PALM_DOWN_QUAT, OrientationMode.CAPTURED)
        assert quat_angle_between(out, TOOL_DOWN_QUAT) < 1e-12

    def test_yaw_composes(self):
        yaw = quat_from_axis_angle([0, 0, 1], np.pi / 2)
        raw = quat_multiply(PALM_DOWN_QUAT, yaw)
        out = map_hand_orientation(raw, OrientationMode.CAPTURED)
        expected = quat_multiply(TOOL_DOWN_QUAT, yaw)
        assert quat_angle_between(out, expected) < 1e-12

    @given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
    def test_output_unit_norm(self, raw):
        if np.linalg.norm(raw) < 1e-3:
            return
        for mode in OrientationMode:
            out = map_hand_orientation(raw, mode)
            assert abs(np.linalg.norm(out) - 1.0) < 1e-9


class TestCursor:
    def test_step_back(self):
        c = PlaybackCursor("t", index=5)
        assert step_cursor(c, -3, 10).index == 2

    def test_clamp_low(self):
        c = PlaybackCursor("t", index=0)
        assert step_cursor(c, -10, 10).index == 0

    def test_clamp_high(self):
        c = PlaybackCursor("t", index=8)
        assert step_cursor(c, +5, 10).index == 9

    def test_state_preserved(self):
        c = PlaybackCursor("t", index=3, state=CursorState.PLAYING)
        assert step_cursor(c, 1, 10).state == CursorState.PLAYING


class TestRedrawFrom:
    def test_keeps_prefix(self):
        traj = line_trajectory([0, 0, 0], [1, 0, 0], 10)
        out = redraw_from(traj, 4, [pose_at(0.5, y) for y in (0.1, 0.2, 0.3)])
        assert len(out) == 8
        for a, b in zip(traj.waypoints[:5], out.waypoints[:5]):
            assert a == b

    def test_empty_redraw_at_end(self):
        traj = line_trajectory([0, 0, 0], [1, 0, 0], 10)
        out = redraw_from(traj, 9, [])
        assert out == traj

    def test_redraw_everything_but_first(self):
        traj = line_trajectory([0, 0, 0], [1, 0, 0], 10)
        out = redraw_from(traj, 0, [pose_at(0.1 * k) for k in range(9)])
        assert len(out) == 10
        assert out.waypoints[0] == traj.waypoints[0]

    def test_restamped_on_grid(self):
        traj = line_trajectory([0, 0, 0], [1, 0, 0], 10, dt=0.2)
        out = redraw_from(traj, 4, [pose_at(0.5), pose_at(0.6)])
        np.testing.assert_allclose([w.t for w in out.waypoints],
                                   np.arange(7) * 0.2, atol=1e-12)

    def test_out_of_range(self):
        traj = line_trajectory([0, 0, 0], [1, 0, 0], 10)
        with pytest.raises(IndexOutOfRange):
            redraw_from(traj, 10, [])


class TestResamplePhase:
    def test_endpoints_and_midpoint(self):
        traj = position_trajectory([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dt=1.0)
        out = resample_phase(traj, 3)
        assert [p for p, _ in out] == [0.0, 0.5, 1.0]
        for (_, pose), wp in zip(out, traj.waypoints):
            np.testing.assert_allclose(pose.position, wp.pose.position,
                                       atol=1e-12)

    def test_line_stays_on_line(self):
        traj = line_trajectory([0, 1, 2], [3, -1, 0], 7)
        for _, pose in resample_phase(traj, 23):
            d = pose.position - np.array([0, 1, 2.0])
            u = np.array([3, -2, -2.0]) / np.linalg.norm([3, -2, -2.0])
            perp = d - (d @ u) * u
            assert np.linalg.norm(perp) < 1e-9

    def test_arc_within_chord_sagitta_bound(self):
        # unit circle arc sampled every 2*pi/64: worst interpolation error is
        # the sagitta of one chord, r*(1 - cos(theta/2))
        m = 65
        theta = 2 * np.pi / (m - 1)
        pts = [[np.cos(i * theta), np.sin(i * theta), 0.0] for i in range(m)]
        traj = position_trajectory(pts)
        sagitta = 1.0 - np.cos(theta / 2.0)
        for _, pose in resample_phase(traj, 101):
            err = abs(np.linalg.norm(pose.position[:2]) - 1.0)
            assert err <= sagitta + 1e-12

    def test_idempotent_on_uniform(self):
        traj = line_trajectory([0, 0, 0], [1, 2, 3], 11)
        out = resample_phase(traj, 11)
        for (_, pose), wp in zip(out, traj.waypoints):
            np.testing.assert_allclose(pose.position, wp.pose.position,
                                       atol=1e-12)
            np.testing.assert_allclose(pose.orientation, wp.pose.orientation,
                                       atol=1e-12)

    def test_too_short(self):
        traj = position_trajectory([[0, 0, 0]])
        with pytest.raises(TooShort):
            resample_phase(traj, 5)
        with pytest.raises(TooShort):
            resample_phase(line_trajectory([0, 0, 0], [1, 0, 0], 5), 1)


class TestStore:
    def test_round_trip_bit_exact(self, tmp_path):
        store = TrajectoryStore(str(tmp_path))
        traj = line_trajectory([0.123456789012345, 0, 0], [1, 1, 1], 9,
                               traj_id="rt")
        store.save(traj)
        loaded = store.load("rt")
        assert loaded.id == traj.id
        assert loaded.sample_period == traj.sample_period
        assert loaded.orientation_mode == traj.orientation_mode
        for a, b in zip(traj.waypoints, loaded.waypoints):
            assert a.t == b.t
            assert np.array_equal(a.pose.position, b.pose.position)
            assert np.array_equal(a.pose.orientation, b.pose.orientation)

    def test_delete_then_load(self, tmp_path):
        store = TrajectoryStore(str(tmp_path))
        traj = line_trajectory([0, 0, 0], [1, 0, 0], 4, traj_id="gone")
        store.save(traj)
        store.delete("gone")
        with pytest.raises(NotFound):
            store.load("gone")

    def test_distinct_ids(self, tmp_path):
        store = TrajectoryStore(str(tmp_path))
        rec = Recorder()
        rec.start()
        rec.record_sample(pose_at(0.0), 0.0)
        t1 = rec.finish()
        rec.start()
        rec.record_sample(pose_at(0.1), 0.0)
        t2 = rec.finish()
        assert store.save(t1) != store.save(t2)

    def test_dict_round_trip(self):
        traj = line_trajectory([0, 0, 0], [1, 1, 0], 5)
        again = trajectory_from_dict(trajectory_to_dict(traj))
        assert trajectory_to_dict(again) == trajectory_to_dict(traj)
