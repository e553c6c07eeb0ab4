"""Plane-fit ground labelling on a concentric ring x azimuth-sector grid.

A deliberately small stand-in for PatchWork-style segmenters: each cell gets
its own least-squares plane ``z = a x + b y + c`` seeded from its lowest
points and refined by rejecting vertical outliers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GroundConfig:
    ring_edges: tuple[float, ...] = (10.0, 20.0, 40.0, 80.0)
    sectors: int = 16
    epsilon: float = 0.2
    iterations: int = 3
    seed_fraction: float = 0.2
    min_cell_points: int = 10


def cell_index(cloud: np.ndarray, cfg: GroundConfig) -> tuple[np.ndarray, np.ndarray]:
    """Ring and sector index per point. Points past the last edge fall in
    the outermost ring."""
    rng = np.hypot(cloud[:, 0], cloud[:, 1])
    ring = np.searchsorted(np.asarray(cfg.ring_edges), rng, side="right")
    ring = np.minimum(ring, len(cfg.ring_edges) - 1)
    az = np.arctan2(cloud[:, 1], cloud[:, 0]) + math.pi
    sector = np.minimum((az / (2 * math.pi) * cfg.sectors).astype(np.int64), cfg.sectors - 1)
    return ring, sector


def fit_plane(pts: np.ndarray) -> np.ndarray:
    """Least-squares ``(a, b, c)`` for ``z = a x + b y + c``."""
    A = np.column_stack([pts[:, 0], pts[:, 1], np.ones(len(pts))])
    coef, *_ = np.linalg.lstsq(A, pts[:, 2], rcond=None)
    return coef


def plane_residual(pts: np.ndarray, coef: np.ndarray) -> np.ndarray:
    return pts[:, 2] - (coef[0] * pts[:, 0] + coef[1] * pts[:, 1] + coef[2])


def _fit_cell(pts: np.ndarray, cfg: GroundConfig) -> np.ndarray | None:
    n_seed = max(3, int(math.ceil(cfg.seed_fraction * len(pts))))
    order = np.argsort(pts[:, 2], kind="stable")
    coef = fit_plane(pts[order[:n_seed]])
    for _ in range(cfg.iterations):
        inl = np.abs(plane_residual(pts, coef)) <= cfg.epsilon
        if np.count_nonzero(inl) < 3:
            break
        coef = fit_plane(pts[inl])
    return coef


def ground_fit(cloud: np.ndarray, cfg: GroundConfig | None = None) -> np.ndarray:
    """Boolean ground mask (True = placeable ground)."""
    cfg = cfg or GroundConfig()
    cloud = np.asarray(cloud, dtype=np.float64)
    n = cloud.shape[0]
    mask = np.zeros(n, dtype=bool)
    if n == 0:
        return mask
    ring, sector = cell_index(cloud, cfg)
    n_rings = len(cfg.ring_edges)
    cell = ring * cfg.sectors + sector
    order = np.argsort(cell, kind="stable")
    bounds = np.searchsorted(cell[order], np.arange(n_rings * cfg.sectors + 1))

    planes: dict[tuple[int, int], np.ndarray] = {}
    members: dict[tuple[int, int], np.ndarray] = {}
    for r in range(n_rings):
        for s in range(cfg.sectors):
            k = r * cfg.sectors + s
            idx = order[bounds[k]:bounds[k + 1]]
            if idx.size == 0:
                continue
            members[(r, s)] = idx
            if idx.size >= cfg.min_cell_points:
                planes[(r, s)] = _fit_cell(cloud[idx], cfg)

    for (r, s), idx in members.items():
        coef = planes.get((r, s))
        if coef is None:
            # nearest fitted ring in the same sector; inner ring wins ties
            for d in range(1, n_rings):
                for rr in (r - d, r + d):
                    if (rr, s) in planes:
                        coef = planes[(rr, s)]
                        break
                if coef is not None:
                    break
        if coef is None:
            continue
        mask[idx] = np.abs(plane_residual(cloud[idx], coef)) <= cfg.epsilon
    return mask
