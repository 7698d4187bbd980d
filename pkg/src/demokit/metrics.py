"""Trajectory quality metrics: mean jerk, chord deviation, path variation,
and pairwise MSE after phase alignment.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trajectory import Trajectory, resample_phase


class MetricsError(Exception):
    pass


class TooShort(MetricsError):
    pass


class NonUniform(MetricsError):
    pass


@dataclass(frozen=True)
class SmoothnessReport:
    mean_jerk: float
    deviation: float
    variation: float


def mean_jerk(traj: Trajectory) -> float:
    """Mean norm of the third-order central difference of position, m/s^3."""
    if len(traj) < 4:
        raise TooShort("need at least 4 waypoints for jerk")
    ts = np.array([w.t for w in traj.waypoints])
    dts = np.diff(ts)
    dt = dts[0]
    if np.max(np.abs(dts - dt)) > 1e-6:
        raise NonUniform("jerk requires a uniform timestamp grid")
    p = traj.positions()
    # central third difference: (p[i+2] - 2 p[i+1] + 2 p[i-1] - p[i-2]) / (2 dt^3)
    jerk = (p[4:] - 2.0 * p[3:-1] + 2.0 * p[1:-3] - p[:-4]) / (2.0 * dt ** 3)
    if len(jerk) == 0:
        raise TooShort("need at least 5 waypoints for interior jerk samples")
    return float(np.mean(np.linalg.norm(jerk, axis=1)))


def deviation(traj: Trajectory) -> float:
    """Mean perpendicular distance of waypoints from the start-to-end chord."""
    if len(traj) < 2:
        raise TooShort("need at least 2 waypoints for deviation")
    p = traj.positions()
    chord = p[-1] - p[0]
    norm = np.linalg.norm(chord)
    rel = p - p[0]
    if norm == 0.0:
        return float(np.mean(np.linalg.norm(rel, axis=1)))
    u = chord / norm
    perp = rel - np.outer(rel @ u, u)
    return float(np.mean(np.linalg.norm(perp, axis=1)))


def variation(traj: Trajectory) -> float:
    """Sum of squared displacements between consecutive waypoints, m^2."""
    if len(traj) < 2:
        raise TooShort("need at least 2 waypoints for variation")
    p = traj.positions()
    return float(np.sum(np.sum(np.diff(p, axis=0) ** 2, axis=1)))


def mse(a: Trajectory, b: Trajectory, n: int = 100) -> float:
    """Mean squared position distance after resampling both to n phases."""
    if len(a) < 2 or len(b) < 2:
        raise TooShort("both trajectories need at least 2 waypoints")
    pa = np.array([p.position for _, p in resample_phase(a, n)])
    pb = np.array([p.position for _, p in resample_phase(b, n)])
    return float(np.mean(np.sum((pa - pb) ** 2, axis=1)))


def smoothness_report(traj: Trajectory) -> SmoothnessReport:
    return SmoothnessReport(
        mean_jerk=mean_jerk(traj),
        deviation=deviation(traj),
        variation=variation(traj),
    )
