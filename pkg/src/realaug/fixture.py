"""Deterministic synthetic LiDAR frames for tests, demos and benchmarks.

Each frame is a gently tilted ground plane sampled on concentric rings (so
point density falls off with range, as with a spinning sensor) plus a few
boxes whose visible faces carry points. Box yaws for vehicles follow a
per-frame road direction so heading statistics are meaningful.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Box3D, bev_overlap, points_in_box_mask, yaw_rotate
from .io import SceneFrame

# mean (l, w, h) and whether the class follows the road direction
CATEGORIES = {
    "car": ((4.6, 1.9, 1.7), True),
    "truck": ((7.0, 2.5, 2.9), True),
    "pedestrian": ((0.7, 0.7, 1.75), False),
    "traffic_cone": ((0.45, 0.45, 1.0), False),
}
CATEGORY_WEIGHTS = np.array([0.45, 0.15, 0.25, 0.15])

YAW_LIMIT = 3.14159  # keeps six-decimal label text inside [-pi, pi)
SURFACE_INSET = 0.02


@dataclass(frozen=True)
class FixtureConfig:
    points_per_frame: int = 30000
    max_boxes: int = 8
    max_slope_deg: float = 1.5
    ground_z: float = -1.8
    ground_noise: float = 0.02
    n_rings: int = 40
    min_range: float = 2.5
    max_range: float = 80.0
    frames_per_scene: int = 5
    min_object_points: int = 10


def ground_height(x, y, plane) -> np.ndarray:
    a, b, c = plane
    return a * x + b * y + c


def _surface_points(box: Box3D, n: int, rng: np.random.Generator) -> np.ndarray:
    """Points on the four sides and top of ``box``, inset from the faces."""
    hl, hw, hh = box.l / 2 - SURFACE_INSET, box.w / 2 - SURFACE_INSET, box.h / 2 - SURFACE_INSET
    areas = np.array([box.w * box.h, box.w * box.h, box.l * box.h, box.l * box.h, box.l * box.w])
    face = rng.choice(5, size=n, p=areas / areas.sum())
    u = rng.uniform(-hl, hl, n)
    v = rng.uniform(-hw, hw, n)
    s = rng.uniform(-hh, hh, n)
    u = np.where(face == 0, hl, np.where(face == 1, -hl, u))
    v = np.where(face == 2, hw, np.where(face == 3, -hw, v))
    s = np.where(face == 4, hh, s)
    local = np.column_stack([u, v, s])
    pts = yaw_rotate(local, box.yaw) + box.center
    return pts


def _sample_boxes(rng, plane, road, cfg: FixtureConfig) -> list[tuple[Box3D, str]]:
    names = list(CATEGORIES)
    boxes: list[tuple[Box3D, str]] = []
    target = int(rng.integers(0, cfg.max_boxes + 1))
    tries = 0
    while len(boxes) < target and tries < 200:
        tries += 1
        cat = names[int(rng.choice(len(names), p=CATEGORY_WEIGHTS))]
        (l, w, h), on_road = CATEGORIES[cat]
        l, w, h = (v * rng.uniform(0.9, 1.1) for v in (l, w, h))
        r = rng.uniform(5.0, 45.0)
        az = rng.uniform(-math.pi, math.pi)
        x, y = r * math.cos(az), r * math.sin(az)
        if on_road:
            yaw = road + (math.pi if rng.random() < 0.5 else 0.0) + rng.normal(0.0, 0.08)
        else:
            yaw = rng.uniform(-math.pi, math.pi)
        yaw = float(np.clip(math.remainder(yaw, 2 * math.pi), -YAW_LIMIT, YAW_LIMIT))
        cz = float(ground_height(x, y, plane)) + h / 2
        box = Box3D(*(round(float(v), 6) for v in (x, y, cz, l, w, h, yaw)))
        if any(bev_overlap(box, b) for b, _ in boxes):
            continue
        boxes.append((box, cat))
    return boxes


def generate_frame(seed: int, index: int, cfg: FixtureConfig | None = None):
    """One frame plus its true ground mask (plane-sampled points)."""
    cfg = cfg or FixtureConfig()
    rng = np.random.default_rng([seed, index])
    slope = math.tan(math.radians(rng.uniform(0.0, cfg.max_slope_deg)))
    direction = rng.uniform(-math.pi, math.pi)
    plane = (slope * math.cos(direction), slope * math.sin(direction),
             cfg.ground_z + rng.uniform(-0.05, 0.05))
    road = rng.uniform(-math.pi, math.pi)
    boxes = _sample_boxes(rng, plane, road, cfg)

    obj_parts = []
    for box, _ in boxes:
        r = math.hypot(box.cx, box.cy)
        area = box.l * box.w + 2 * box.h * (box.l + box.w)
        n = int(min(2000, max(cfg.min_object_points * 2, 200.0 * area / r)))
        pts = _surface_points(box, n, rng)
        refl = rng.uniform(0.15, 0.9, (n, 1))
        obj_parts.append(np.hstack([pts, refl]))
    n_obj = sum(len(p) for p in obj_parts)

    per_ring = max(16, (cfg.points_per_frame - n_obj) // cfg.n_rings)
    radii = np.linspace(cfg.min_range, cfg.max_range, cfg.n_rings)
    rings = []
    for rad in radii:
        phase = rng.uniform(0, 2 * math.pi)
        az = phase + np.arange(per_ring) * (2 * math.pi / per_ring) + rng.normal(0, 1e-3, per_ring)
        rr = rad + rng.normal(0.0, 0.05, per_ring)
        rings.append(np.column_stack([rr * np.cos(az), rr * np.sin(az)]))
    xy = np.concatenate(rings)
    z = ground_height(xy[:, 0], xy[:, 1], plane) + rng.normal(0.0, cfg.ground_noise, len(xy))
    ground = np.column_stack([xy, z, rng.uniform(0.02, 0.25, len(xy))])
    # the ground under an object is hidden by it
    keep = np.ones(len(ground), dtype=bool)
    for box, _ in boxes:
        tall = Box3D(box.cx, box.cy, box.cz, box.l, box.w, box.h + 4.0, box.yaw)
        keep &= ~points_in_box_mask(ground, tall)
    ground = ground[keep]

    cloud = np.concatenate([ground] + obj_parts) if obj_parts else ground
    truth = np.zeros(len(cloud), dtype=bool)
    truth[:len(ground)] = True
    # disk precision, so in-memory frames equal what a reader gets back
    cloud = cloud.astype(np.float32).astype(np.float64)
    frame = SceneFrame(f"fixture-{index:05d}", f"scene-{index // cfg.frames_per_scene:04d}",
                       cloud, boxes)
    return frame, truth


def generate_frames(seed: int, n_frames: int, cfg: FixtureConfig | None = None):
    frames, truths = [], []
    for i in range(n_frames):
        f, t = generate_frame(seed, i, cfg)
        frames.append(f)
        truths.append(t)
    return frames, truths
