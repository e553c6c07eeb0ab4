"""Frame-parallel augmentation of a whole dataset.

Every frame draws from its own generators derived from ``(seed, frame_id)``,
so output bytes do not depend on the worker count or scheduling order.
"""
from __future__ import annotations

import csv
import hashlib
import logging
import multiprocessing as mp
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bank import ObjectBank
from .composition import CompositionConfig, FrameReport, compose_frame
from .io import (Dataset, LabeledBox, ManifestEntry, read_mask, write_cloud, write_labels,
                 write_manifest)
from .placeability.ground import GroundConfig, ground_fit
from .placeability.model import PlaceabilityModel, infer_mask
from .schedule import ScheduleConfig, ScheduleState, counts_for_frame

log = logging.getLogger(__name__)

STREAM_COUNTS = 0
STREAM_COMPOSE = 1


def frame_key(frame_id: str) -> int:
    return int.from_bytes(hashlib.sha256(frame_id.encode()).digest()[:8], "little")


def frame_rng(seed: int, frame_id: str, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, frame_key(frame_id), stream]))


@dataclass
class AugmentJob:
    dataset: Dataset
    bank: ObjectBank
    out_dir: Path
    schedule: ScheduleConfig
    composition: CompositionConfig
    progress: float
    seed: int
    masks_dir: Path | None = None
    model: PlaceabilityModel | None = None
    ground: GroundConfig | None = None

    def placeability(self, frame) -> np.ndarray:
        if self.masks_dir is not None:
            return read_mask(self.masks_dir / f"{frame.frame_id}.mask", len(frame.cloud))
        if self.model is not None:
            return infer_mask(self.model, frame.cloud, self.composition.placeability_threshold)
        return ground_fit(frame.cloud, self.ground)

    def run_frame(self, i: int):
        frame = self.dataset.frame(i)
        state = ScheduleState.at(self.progress, self.schedule)
        counts = counts_for_frame(frame.categories, state, self.schedule,
                                  frame_rng(self.seed, frame.frame_id, STREAM_COUNTS))
        if sum(counts.values()) == 0:
            mask = np.zeros(len(frame.cloud), dtype=bool)
        else:
            mask = self.placeability(frame)
        aug, report, _ = compose_frame(frame, self.bank, counts, mask, self.composition,
                                       frame_rng(self.seed, frame.frame_id, STREAM_COMPOSE))
        path = self.out_dir / "clouds" / f"{frame.frame_id}.bin"
        write_cloud(aug.cloud, path)
        labels = [LabeledBox(aug.frame_id, b, c) for b, c in aug.boxes]
        return ManifestEntry(aug.frame_id, aug.scene_id, path), labels, report


_JOB: AugmentJob | None = None


def _worker_run(i: int):
    return _JOB.run_frame(i)


def augment_dataset(job: AugmentJob, workers: int = 1) -> list[FrameReport]:
    """Augment every frame of ``job.dataset`` into ``job.out_dir``.

    Writes ``clouds/``, ``manifest.csv``, ``labels.csv`` and ``report.csv``.
    """
    global _JOB
    (job.out_dir / "clouds").mkdir(parents=True, exist_ok=True)
    n = len(job.dataset)
    if workers <= 1 or n <= 1:
        results = [job.run_frame(i) for i in range(n)]
    else:
        _JOB = job
        try:
            ctx = mp.get_context("fork")
            with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
                # at most 4 frames per worker in flight; results kept in frame order
                window = 4 * workers
                pending: deque = deque()
                results = []
                for i in range(n):
                    pending.append(pool.submit(_worker_run, i))
                    if len(pending) >= window:
                        results.append(pending.popleft().result())
                results.extend(f.result() for f in pending)
        finally:
            _JOB = None

    entries = [r[0] for r in results]
    labels = [lb for r in results for lb in r[1]]
    reports = [r[2] for r in results]
    write_manifest(entries, job.out_dir / "manifest.csv")
    write_labels(labels, job.out_dir / "labels.csv")
    write_report(reports, job.out_dir / "report.csv")
    placed = sum(r.placed for r in reports)
    log.info("augmented %d frames, placed %d of %d requested objects",
             n, placed, sum(r.requested for r in reports))
    return reports


def write_report(reports, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FrameReport.CSV_HEADER)
        for r in reports:
            w.writerow(r.row())
