import numpy as np
import pytest

from demokit.cli import default_arm_path
from demokit.kinematics import ArmModel, DHRow, Capsule, load_arm
from demokit.trajectory import Trajectory, Waypoint, TOOL_DOWN_QUAT
from demokit.kinematics import Pose


def make_arm(rows, limits=None, capsules=(), base=None):
    if limits is None:
        limits = [[-2 * np.pi, 2 * np.pi]] * 6
    kwargs = {"rows": rows, "joint_limits": limits, "capsules": capsules}
    if base is not None:
        kwargs["base"] = base
    return ArmModel(**kwargs)


@pytest.fixture
def one_link_arm():
    """Six-row chain where only the first joint carries geometry: the end
    effector sits one meter out along the rotated x axis."""
    rows = [DHRow(0.0, 0.0, 1.0, 0.0)] + [DHRow(0.0, 0.0, 0.0, 0.0)] * 5
    return make_arm(rows)


@pytest.fixture
def degenerate_arm():
    rows = [DHRow(0.0, 0.0, 0.0, 0.0)] * 6
    return make_arm(rows)


@pytest.fixture(scope="session")
def ur10():
    return load_arm(default_arm_path())


@pytest.fixture(scope="session")
def ur10_limited():
    """UR10 geometry with limits away from wrap-around, for IK round trips."""
    arm = load_arm(default_arm_path())
    return ArmModel(rows=arm.rows, joint_limits=[[-2.8, 2.8]] * 6,
                    base=arm.base, capsules=arm.capsules)


def line_trajectory(start, end, n, dt=0.2, traj_id="line"):
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    wps = [
        Waypoint(t=i * dt, pose=Pose(start + (end - start) * i / (n - 1),
                                     TOOL_DOWN_QUAT))
        for i in range(n)
    ]
    return Trajectory(id=traj_id, waypoints=wps, sample_period=dt)


def position_trajectory(positions, dt=0.2, traj_id="traj"):
    wps = [Waypoint(t=i * dt, pose=Pose(p, TOOL_DOWN_QUAT))
           for i, p in enumerate(positions)]
    return Trajectory(id=traj_id, waypoints=wps, sample_period=dt)
