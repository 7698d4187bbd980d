"""Workspace model: rigid transforms, auto-calibration, axis-aligned
obstacle boxes, capsule-vs-box collision checks, and calibration accuracy.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .kinematics import ArmModel, link_segments
from .transforms import RigidTransform, compose, invert  # re-exported

__all__ = [
    "RigidTransform", "compose", "invert", "SceneBox", "Marker", "Scene",
    "auto_calibrate", "collision_check", "calibration_error",
    "segment_box_distance", "load_scene", "SceneFileError",
]


class SceneFileError(Exception):
    pass


@dataclass(frozen=True)
class SceneBox:
    id: str
    center: np.ndarray
    half_extents: np.ndarray
    label: str = ""

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3)
        h = np.asarray(self.half_extents, dtype=float).reshape(3)
        if not np.all(h > 0):
            raise ValueError("box half_extents must be > 0 componentwise")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_extents", h)


@dataclass(frozen=True)
class Marker:
    position: np.ndarray
    timestamp: float

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError("marker timestamp must be >= 0")
        object.__setattr__(self, "position",
                           np.asarray(self.position, dtype=float).reshape(3))


@dataclass(frozen=True)
class Scene:
    boxes: tuple = ()
    calibration_offset: RigidTransform = None

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if self.calibration_offset is None:
            object.__setattr__(self, "calibration_offset",
                               RigidTransform.identity())


def auto_calibrate(controller: RigidTransform,
                   offset: RigidTransform) -> RigidTransform:
    """Base placement from a tracked reference pose and a declared offset."""
    return compose(controller, offset)


def _point_box_distance(p, box: SceneBox) -> float:
    d = np.maximum(np.abs(p - box.center) - box.half_extents, 0.0)
    return float(np.linalg.norm(d))


def segment_box_distance(a, b, box: SceneBox) -> float:
    """Minimum distance between segment [a, b] and an axis-aligned box.

    The point-box distance is convex along the segment, so golden-section
    search on t in [0, 1] converges to the global minimum.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def f(t):
        return _point_box_distance(a + t * (b - a), box)

    lo, hi = 0.0, 1.0
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(200):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_phi * (hi - lo)
            fd = f(d)
        if hi - lo < 1e-14:
            break
    return min(f(0.0), f(1.0), fc, fd)


def collision_check(arm: ArmModel, q, boxes):
    """Report (link joint index, box id) for every capsule that overlaps a box.

    Overlap requires distance strictly below the capsule radius; a tangent
    contact (distance equal to the radius) is not reported.
    """
    hits = []
    for joint, radius, a, b in link_segments(arm, q):
        for box in boxes:
            if segment_box_distance(a, b, box) < radius:
                hits.append((joint, box.id))
    return hits


def calibration_error(measured, reference):
    """Mean and population standard deviation of distances to a reference point."""
    pts = np.atleast_2d(np.asarray(measured, dtype=float))
    if pts.size == 0:
        raise ValueError("need at least one measurement")
    ref = np.asarray(reference, dtype=float).reshape(3)
    dists = np.linalg.norm(pts - ref, axis=1)
    return float(np.mean(dists)), float(np.std(dists))


def scene_to_dict(scene: Scene):
    return {
        "boxes": [
            {
                "id": b.id,
                "center": b.center.tolist(),
                "half_extents": b.half_extents.tolist(),
                "label": b.label,
            }
            for b in scene.boxes
        ],
        "calibration_offset": {
            "translation": scene.calibration_offset.translation.tolist(),
            "rotation": scene.calibration_offset.rotation.tolist(),
        },
    }


def scene_from_dict(doc) -> Scene:
    try:
        boxes = [
            SceneBox(id=b["id"], center=b["center"],
                     half_extents=b["half_extents"], label=b.get("label", ""))
            for b in doc.get("boxes", [])
        ]
        off = doc.get("calibration_offset")
        offset = None
        if off is not None:
            offset = RigidTransform(translation=off["translation"],
                                    rotation=off["rotation"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneFileError("bad scene document: %s" % exc) from exc
    return Scene(boxes=boxes, calibration_offset=offset)


def load_scene(path) -> Scene:
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise SceneFileError("cannot read scene file %s: %s" % (path, exc)) from exc
    return scene_from_dict(doc)
