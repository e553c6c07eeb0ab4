"""Diagnostic statistics: reality-conforming score, foreground/background
BEV cell ratios, per-category object statistics and scene-category counts."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import points_in_box_mask


@dataclass(frozen=True)
class MetricPair:
    map_aug: float
    map_noaug: float


def reality_score(m: MetricPair) -> float:
    if not m.map_noaug > 0:
        raise ValidationError("map_noaug must be > 0")
    return m.map_aug / m.map_noaug


@dataclass(frozen=True)
class VoxelSpec:
    vx: float = 0.075
    vy: float = 0.075
    vz: float = 0.2
    stride: int = 8
    x_range: tuple[float, float] = (-54.0, 54.0)
    y_range: tuple[float, float] = (-54.0, 54.0)
    z_range: tuple[float, float] = (-5.0, 3.0)

    def __post_init__(self):
        if min(self.vx, self.vy, self.vz) <= 0 or self.stride < 1:
            raise ValidationError("voxel sizes must be > 0 and stride >= 1")


def bev_cells(cloud: np.ndarray, spec: VoxelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Flat BEV cell id per in-bounds point and the in-bounds mask.

    Points are voxelised at (vx, vy, vz); voxel columns are coarsened by
    ``stride`` in x and y and z is collapsed.
    """
    x, y, z = cloud[:, 0], cloud[:, 1], cloud[:, 2]
    inb = ((x >= spec.x_range[0]) & (x < spec.x_range[1])
           & (y >= spec.y_range[0]) & (y < spec.y_range[1])
           & (z >= spec.z_range[0]) & (z < spec.z_range[1]))
    ix = np.floor((x[inb] - spec.x_range[0]) / spec.vx).astype(np.int64) // spec.stride
    iy = np.floor((y[inb] - spec.y_range[0]) / spec.vy).astype(np.int64) // spec.stride
    ny = int(math.ceil((spec.y_range[1] - spec.y_range[0]) / spec.vy)) // spec.stride + 1
    return ix * ny + iy, inb


def frame_fg_bg(cloud: np.ndarray, boxes, category: str, spec: VoxelSpec) -> tuple[int, int]:
    cells, inb = bev_cells(cloud, spec)
    fg_pt = np.zeros(cloud.shape[0], dtype=bool)
    for b, c in boxes:
        if c == category:
            fg_pt |= points_in_box_mask(cloud, b)
    occupied = np.unique(cells)
    fg = np.unique(cells[fg_pt[inb]])
    return int(fg.size), int(occupied.size - fg.size)


def fg_bg_ratio(frames, spec: VoxelSpec, category: str) -> float:
    """Foreground/background occupied-cell ratio, averaged over frames."""
    ratios = []
    for fr in frames:
        fg, bg = frame_fg_bg(fr.cloud, fr.boxes, category, spec)
        if bg == 0:
            raise ValidationError(f"frame {fr.frame_id} has no background cells")
        ratios.append(fg / bg)
    if not ratios:
        raise ValidationError("no frames")
    return float(np.mean(ratios))


@dataclass
class CategoryStats:
    category: str
    mean_l: float
    mean_w: float
    mean_h: float
    mean_points: float
    d_pts: float
    r_frame: float
    r_obj: float

    CSV_HEADER = ["category", "mean_l", "mean_w", "mean_h", "mean_points", "d_pts",
                  "r_frame", "r_obj"]

    def row(self) -> list:
        return [self.category] + [f"{v:.6f}" for v in (
            self.mean_l, self.mean_w, self.mean_h, self.mean_points, self.d_pts,
            self.r_frame, self.r_obj)]


def point_density(mean_points: float, l: float, w: float, h: float, spec: VoxelSpec) -> float:
    """Mean points per voxel of a box built from category-mean extents."""
    return mean_points / ((l / spec.vx) * (w / spec.vy) * (h / spec.vz))


def object_stats(frames, bank, spec: VoxelSpec) -> list[CategoryStats]:
    if len(bank) == 0:
        raise ValidationError("object bank is empty")
    frames_with: dict[str, int] = defaultdict(int)
    n_frames = 0
    for fr in frames:
        n_frames += 1
        for c in {c for _, c in fr.boxes}:
            frames_with[c] += 1
    total = len(bank)
    out = []
    for c in bank.categories:
        ss = bank.category_samples(c)
        l = float(np.mean([s.box.l for s in ss]))
        w = float(np.mean([s.box.w for s in ss]))
        h = float(np.mean([s.box.h for s in ss]))
        npts = float(np.mean([len(s.points) for s in ss]))
        out.append(CategoryStats(c, l, w, h, npts, point_density(npts, l, w, h, spec),
                                 frames_with[c] / n_frames if n_frames else 0.0,
                                 len(ss) / total))
    return out


def scene_category_table(frames) -> dict[str, dict[str, int]]:
    """scene_id -> category -> box count; every scene lists every category."""
    counts: dict[str, dict[str, int]] = {}
    cats: set[str] = set()
    for fr in frames:
        row = counts.setdefault(fr.scene_id, {})
        for _, c in fr.boxes:
            row[c] = row.get(c, 0) + 1
            cats.add(c)
    return {s: {c: row.get(c, 0) for c in sorted(cats)} for s, row in counts.items()}
