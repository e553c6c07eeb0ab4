"""Insert bank objects into a scene while keeping the scan pattern realistic.

A sampled object keeps its sensor range (within a tolerance) and its
observing angle (heading + azimuth), so the side of the object the sensor
saw is still the side facing the sensor after the move. The heading follows
same-category traffic in the scene; the box sits on the local ground; a
location must be supported by placeable ground and free of other boxes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bank import ObjectBank, ObjectSample, bank_sample
from .errors import ValidationError
from .geometry import Box3D, any_bev_overlap, points_in_box_mask, wrap_angle, yaw_rotate
from .io import SceneFrame

REJECT_REASONS = ("placeability", "collision", "no_candidate")


@dataclass
class CompositionConfig:
    delta_policy: str | float = "half_length"
    placeability_threshold: float = 0.5
    support_radius_scale: float = 0.5
    min_support_points: int = 10
    min_support_fraction: float = 0.8
    position_attempts: int = 10
    object_retries: int = 3
    remove_occupied: bool = True

    def __post_init__(self):
        if not 0.0 <= self.placeability_threshold <= 1.0:
            raise ValidationError("placeability_threshold must lie in [0, 1]")
        if not 0.0 <= self.min_support_fraction <= 1.0:
            raise ValidationError("min_support_fraction must lie in [0, 1]")
        if self.position_attempts < 1 or self.object_retries < 1:
            raise ValidationError("position_attempts and object_retries must be >= 1")
        if self.delta_policy != "half_length":
            try:
                self.delta_policy = float(self.delta_policy)
            except (TypeError, ValueError):
                raise ValidationError(f"bad delta_policy {self.delta_policy!r}") from None
            if self.delta_policy < 0:
                raise ValidationError("fixed delta must be >= 0")

    def delta(self, sample: ObjectSample) -> float:
        if self.delta_policy == "half_length":
            return sample.box.l / 2.0
        return float(self.delta_policy)


@dataclass
class Placement:
    sample_id: str
    category: str
    new_box: Box3D
    new_points: np.ndarray
    provenance: str = "inserted"
    # gate diagnostics, kept for auditing the constraints on the output
    ground_z_mean: float = float("nan")
    support_count: int = 0
    support_fraction: float = 0.0


@dataclass
class FrameReport:
    frame_id: str
    requested: int = 0
    placed: int = 0
    skipped: int = 0
    rejected_by: dict[str, int] = field(default_factory=lambda: dict.fromkeys(REJECT_REASONS, 0))

    CSV_HEADER = ["frame_id", "requested", "placed", "skipped",
                  *(f"rejected_{r}" for r in REJECT_REASONS)]

    def row(self) -> list:
        return [self.frame_id, self.requested, self.placed, self.skipped,
                *(self.rejected_by[r] for r in REJECT_REASONS)]


def select_heading(category: str, scene_boxes, bank: ObjectBank | None) -> float:
    """Heading maximising the summed cosine similarity to same-category
    boxes; the closed form is the direction of the resultant vector."""
    yaws = [b.yaw for b, c in scene_boxes if c == category]
    if yaws:
        s = math.fsum(math.sin(y) for y in yaws)
        c = math.fsum(math.cos(y) for y in yaws)
        if math.hypot(s, c) >= 1e-9:
            return wrap_angle(math.atan2(s, c))
    if bank is not None and category in bank.heading_mode:
        return bank.heading_mode[category]
    return 0.0


def candidate_position(sample: ObjectSample, theta_new: float, r_new: float,
                       delta: float | None = None) -> tuple[float, float]:
    if delta is None:
        delta = sample.box.l / 2.0
    if abs(r_new - sample.origin_range) > delta:
        raise ValidationError(
            f"range {r_new} outside {sample.origin_range} +/- {delta}")
    az = wrap_angle(sample.observing_angle - theta_new)
    return r_new * math.cos(az), r_new * math.sin(az)


@dataclass
class Support:
    ok: bool
    ground_z: np.ndarray
    count: int
    fraction: float


def placement_support(scene_cloud: np.ndarray, ground_mask: np.ndarray, footprint: Box3D,
                      cfg: CompositionConfig | None = None) -> Support:
    cfg = cfg or CompositionConfig()
    if scene_cloud.shape[0] == 0:
        return Support(False, np.zeros(0), 0, 0.0)
    radius = cfg.support_radius_scale * max(footprint.l, footprint.w)
    n_near, n_pl, near_idx, rect_idx = kernels.support_query(
        np.ascontiguousarray(scene_cloud, dtype=np.float64), np.asarray(ground_mask, dtype=bool),
        footprint.cx, footprint.cy, radius, footprint.l, footprint.w,
        math.cos(footprint.yaw), math.sin(footprint.yaw))
    frac = n_pl / n_near if n_near else 0.0
    ok = n_near >= cfg.min_support_points and frac >= cfg.min_support_fraction
    idx = rect_idx if rect_idx.size else near_idx
    return Support(ok, scene_cloud[idx, 2].copy(), n_near, frac)


class SceneGrid:
    """BEV bucket index over a fixed scene cloud with a per-point alive flag.

    compose_frame queries support and removes occupied points through this
    index instead of rescanning and copying the whole cloud per attempt.
    Query results are sorted by point index, so they match a full scan of
    the surviving points element for element.
    """

    def __init__(self, cloud: np.ndarray, placeable: np.ndarray, cell: float = 2.0):
        self.cloud = np.ascontiguousarray(cloud, dtype=np.float64)
        self.placeable = np.ascontiguousarray(placeable, dtype=bool)
        self.alive = np.ones(self.cloud.shape[0], dtype=bool)
        self.cell = cell
        n = self.cloud.shape[0]
        if n:
            self.x0 = math.floor(float(self.cloud[:, 0].min()))
            self.y0 = math.floor(float(self.cloud[:, 1].min()))
            ix = np.floor((self.cloud[:, 0] - self.x0) / cell).astype(np.intp)
            iy = np.floor((self.cloud[:, 1] - self.y0) / cell).astype(np.intp)
            self.nx, self.ny = int(ix.max()) + 1, int(iy.max()) + 1
            key = ix * self.ny + iy
        else:
            self.x0 = self.y0 = 0
            self.nx = self.ny = 1
            key = np.zeros(0, dtype=np.intp)
        self.order = np.argsort(key, kind="stable").astype(np.intp)
        self.starts = np.searchsorted(key[self.order], np.arange(self.nx * self.ny + 1)).astype(np.intp)

    def _range(self, cx: float, cy: float, radius: float):
        # pad by a hair so float rounding at the disc edge never drops a cell
        r = radius + 1e-6
        ix0 = max(0, math.floor((cx - r - self.x0) / self.cell))
        ix1 = min(self.nx - 1, math.floor((cx + r - self.x0) / self.cell))
        iy0 = max(0, math.floor((cy - r - self.y0) / self.cell))
        iy1 = min(self.ny - 1, math.floor((cy + r - self.y0) / self.cell))
        if ix0 > ix1 or iy0 > iy1:
            return None
        return ix0, ix1, iy0, iy1

    def support(self, footprint: Box3D, cfg: CompositionConfig) -> Support:
        radius = cfg.support_radius_scale * max(footprint.l, footprint.w)
        rng_ = self._range(footprint.cx, footprint.cy, radius)
        if rng_ is None:
            return Support(False, np.zeros(0), 0, 0.0)
        n_near, n_pl, near_idx, rect_idx = kernels.support_query_grid(
            self.cloud, self.placeable, self.alive, self.order, self.starts, self.ny, *rng_,
            footprint.cx, footprint.cy, radius, footprint.l, footprint.w,
            math.cos(footprint.yaw), math.sin(footprint.yaw))
        frac = n_pl / n_near if n_near else 0.0
        ok = n_near >= cfg.min_support_points and frac >= cfg.min_support_fraction
        idx = np.sort(rect_idx) if rect_idx.size else np.sort(near_idx)
        return Support(ok, self.cloud[idx, 2], n_near, frac)

    def remove_box(self, box: Box3D) -> None:
        rng_ = self._range(box.cx, box.cy, 0.5 * math.hypot(box.l, box.w))
        if rng_ is None:
            return
        ix0, ix1, iy0, iy1 = rng_
        cand = np.concatenate([self.order[self.starts[ix * self.ny + iy0]:self.starts[ix * self.ny + iy1 + 1]]
                               for ix in range(ix0, ix1 + 1)])
        cand = cand[self.alive[cand]]
        if cand.size:
            inside = points_in_box_mask(np.ascontiguousarray(self.cloud[cand]), box)
            self.alive[cand[inside]] = False


def adjust_height(box_h: float, ground_z) -> float:
    ground_z = np.asarray(ground_z, dtype=np.float64)
    if ground_z.size == 0:
        raise ValidationError("no ground points to rest the object on")
    return float(np.mean(ground_z)) + box_h / 2.0


def place_object(sample: ObjectSample, x: float, y: float, z: float, theta_new: float) -> Placement:
    """Rigidly move the sample's points and box to the new pose."""
    local = sample.points.copy()
    local[:, :3] -= sample.box.center
    moved = yaw_rotate(local, float(theta_new) - sample.box.yaw)
    moved[:, 0] += x
    moved[:, 1] += y
    moved[:, 2] += z
    return Placement(sample.sample_id, sample.category, sample.box.moved(x, y, z, theta_new), moved)


def remove_occupied_points(scene_cloud: np.ndarray, box: Box3D, enabled: bool = True,
                           mask: np.ndarray | None = None):
    """Drop scene points under the inserted box (footprint x height slab).

    Returns the filtered cloud, or ``(cloud, mask)`` when a per-point mask
    should be filtered alongside."""
    if not enabled or scene_cloud.shape[0] == 0:
        return scene_cloud if mask is None else (scene_cloud, mask)
    keep = ~points_in_box_mask(scene_cloud, box)
    if mask is None:
        return scene_cloud[keep]
    return scene_cloud[keep], mask[keep]


def compose_frame(frame: SceneFrame, bank: ObjectBank, counts: dict[str, int],
                  placeability: np.ndarray, cfg: CompositionConfig | None,
                  rng: np.random.Generator):
    """Insert ``counts[c]`` objects of each category into ``frame``.

    Returns ``(augmented_frame, report, placements)``.
    """
    cfg = cfg or CompositionConfig()
    if any(n < 0 for n in counts.values()):
        raise ValidationError("insertion counts must be non-negative")
    report = FrameReport(frame.frame_id, requested=int(sum(counts.values())))
    if report.requested == 0:
        return frame, report, []

    mask = np.asarray(placeability, dtype=bool)
    if mask.shape[0] != frame.cloud.shape[0]:
        raise ValidationError("placeability mask does not match the cloud")
    grid = SceneGrid(frame.cloud, mask)
    occupied = [b for b, _ in frame.boxes]
    placements: list[Placement] = []

    for category in sorted(counts):
        for _ in range(counts[category]):
            if category not in bank.index:
                report.rejected_by["no_candidate"] += 1
                report.skipped += 1
                continue
            theta = select_heading(category, frame.boxes, bank)
            done = None
            for _draw in range(cfg.object_retries):
                sample = bank_sample(bank, category, rng)
                delta = cfg.delta(sample)
                lo = max(0.0, sample.origin_range - delta)
                hi = sample.origin_range + delta
                for _attempt in range(cfg.position_attempts):
                    r_new = float(rng.uniform(lo, hi))
                    x, y = candidate_position(sample, theta, r_new, delta)
                    footprint = sample.box.moved(x, y, sample.box.cz, theta)
                    sup = grid.support(footprint, cfg)
                    if not sup.ok:
                        report.rejected_by["placeability"] += 1
                        continue
                    if any_bev_overlap(footprint, occupied):
                        report.rejected_by["collision"] += 1
                        continue
                    z = adjust_height(sample.box.h, sup.ground_z)
                    done = place_object(sample, x, y, z, theta)
                    done.ground_z_mean = float(np.mean(sup.ground_z))
                    done.support_count = sup.count
                    done.support_fraction = sup.fraction
                    break
                if done is not None:
                    break
            if done is None:
                report.skipped += 1
                continue
            if cfg.remove_occupied:
                grid.remove_box(done.new_box)
            occupied.append(done.new_box)
            placements.append(done)
            report.placed += 1

    scene = frame.cloud[grid.alive] if not grid.alive.all() else frame.cloud
    cloud = np.concatenate([scene] + [p.new_points for p in placements]) if placements else scene
    boxes = list(frame.boxes) + [(p.new_box, p.category) for p in placements]
    return SceneFrame(frame.frame_id, frame.scene_id, cloud, boxes), report, placements
