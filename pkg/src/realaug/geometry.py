"""Frame math shared by every other module: angle wrapping, yaw rotation,
polar decomposition, oriented-box containment and BEV overlap.

Point clouds are ``(N, 4)`` float64 arrays with columns ``x, y, z, r``.
Boxes are :class:`Box3D`; ``Box3D.as_array`` gives the ``(7,)`` layout
``cx, cy, cz, l, w, h, yaw`` used by the vectorised helpers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import ValidationError

TWO_PI = 2.0 * math.pi


def wrap_angle(a):
    """Wrap an angle (scalar or array) into ``[-pi, pi)``."""
    if np.ndim(a) == 0:
        a = float(a)
        if -math.pi <= a < math.pi:
            return a  # already canonical, keep it bit-exact
        w = math.fmod(a + math.pi, TWO_PI)
        if w < 0.0:
            w += TWO_PI
        w -= math.pi
        # fmod can land exactly on +pi after the shift for inputs like -3pi
        return -math.pi if w >= math.pi else w
    a = np.asarray(a, dtype=np.float64)
    w = np.mod(a + math.pi, TWO_PI) - math.pi
    w = np.where(w >= math.pi, w - TWO_PI, w)
    return np.where((a >= -math.pi) & (a < math.pi), a, w)


def angle_diff(a, b):
    """Wrapped difference ``a - b``."""
    return wrap_angle(a - b)


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    z: float
    r: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z, self.r)):
            raise ValidationError(f"non-finite point {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.r], dtype=np.float64)


@dataclass(frozen=True)
class Box3D:
    cx: float
    cy: float
    cz: float
    l: float
    w: float
    h: float
    yaw: float = 0.0

    def __post_init__(self):
        vals = (self.cx, self.cy, self.cz, self.l, self.w, self.h, self.yaw)
        if not all(math.isfinite(float(v)) for v in vals):
            raise ValidationError(f"non-finite box parameter in {vals}")
        if self.l <= 0 or self.w <= 0 or self.h <= 0:
            raise ValidationError(
                f"box extents must be positive, got l={self.l} w={self.w} h={self.h}"
            )
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.cz])

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.cx, self.cy, self.cz, self.l, self.w, self.h, self.yaw],
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, a) -> "Box3D":
        return cls(*(float(v) for v in a[:7]))

    def moved(self, cx: float, cy: float, cz: float, yaw: float) -> "Box3D":
        return Box3D(cx, cy, cz, self.l, self.w, self.h, yaw)

    def bev_corners(self) -> np.ndarray:
        """Footprint corners, counter-clockwise, shape ``(4, 2)``."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        hl, hw = self.l / 2.0, self.w / 2.0
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.cx, self.cy])


class PolarPosition(NamedTuple):
    range: float
    azimuth: float


def yaw_rotate(p, delta: float):
    """Rotate a point (``Point`` or ``(N, >=2)`` array) about the z axis.

    z and reflectivity are carried through untouched.
    """
    if not math.isfinite(delta):
        raise ValidationError("rotation angle must be finite")
    c, s = math.cos(delta), math.sin(delta)
    if isinstance(p, Point):
        return Point(c * p.x - s * p.y, s * p.x + c * p.y, p.z, p.r)
    pts = np.array(p, dtype=np.float64, copy=True)
    x, y = pts[..., 0].copy(), pts[..., 1].copy()
    pts[..., 0] = c * x - s * y
    pts[..., 1] = s * x + c * y
    return pts


def to_polar(x: float, y: float) -> PolarPosition:
    if x == 0.0 and y == 0.0:
        return PolarPosition(0.0, 0.0)
    return PolarPosition(math.hypot(x, y), wrap_angle(math.atan2(y, x)))


def observing_angle(box: Box3D) -> float:
    """Heading plus sensor azimuth of the box center, wrapped.

    Raises ValidationError for a box centred on the sensor, where the
    azimuth is undefined.
    """
    if box.cx == 0.0 and box.cy == 0.0:
        raise ValidationError("observing angle undefined for a box centred at the origin")
    return wrap_angle(box.yaw + math.atan2(box.cy, box.cx))


def points_in_box(cloud: np.ndarray, box: Box3D) -> np.ndarray:
    """Indices of points inside ``box`` (boundary inclusive)."""
    return np.flatnonzero(points_in_box_mask(cloud, box))


def points_in_box_mask(cloud: np.ndarray, box: Box3D) -> np.ndarray:
    cloud = np.ascontiguousarray(cloud, dtype=np.float64)
    if cloud.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return kernels.points_in_box_mask(
        cloud, box.cx, box.cy, box.cz, box.l, box.w, box.h,
        math.cos(box.yaw), math.sin(box.yaw),
    )


def to_box_frame(cloud: np.ndarray, box: Box3D) -> np.ndarray:
    """Express xyz of ``cloud`` in the box frame (translate, then rotate by -yaw)."""
    local = np.asarray(cloud, dtype=np.float64)[:, :3] - box.center
    return yaw_rotate(local, -box.yaw)


def _project(corners: np.ndarray, axis: np.ndarray) -> tuple[float, float]:
    d = corners @ axis
    return float(d.min()), float(d.max())


def bev_overlap(a: Box3D, b: Box3D) -> bool:
    """Separating-axis test on the two yaw-rotated footprints.

    Touching footprints (zero-area contact) do not count as overlap.
    """
    # cheap reject on bounding circles
    ra = 0.5 * math.hypot(a.l, a.w)
    rb = 0.5 * math.hypot(b.l, b.w)
    if math.hypot(a.cx - b.cx, a.cy - b.cy) >= ra + rb:
        return False
    ca, cb = a.bev_corners(), b.bev_corners()
    for yaw in (a.yaw, b.yaw):
        c, s = math.cos(yaw), math.sin(yaw)
        for axis in (np.array([c, s]), np.array([-s, c])):
            lo_a, hi_a = _project(ca, axis)
            lo_b, hi_b = _project(cb, axis)
            if hi_a <= lo_b or hi_b <= lo_a:
                return False
    return True


def any_bev_overlap(box: Box3D, others) -> bool:
    return any(bev_overlap(box, o) for o in others)
