"""Object bank: every labelled object cut out of its scene together with the
polar pose it was observed at.

Persisted as a directory holding ``manifest.csv`` (one row per sample) and
``points.blob`` (packed little-endian float32 ``x, y, z, r`` records).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, MissingInputError, ValidationError
from .geometry import Box3D, observing_angle, points_in_box, to_polar

HEADING_BIN = math.radians(10.0)
N_HEADING_BINS = 36

BANK_HEADER = [
    "sample_id", "category", "cx", "cy", "cz", "l", "w", "h", "yaw",
    "origin_range", "origin_azimuth", "observing_angle",
    "num_points", "blob_offset", "blob_length",
]


@dataclass
class ObjectSample:
    sample_id: str
    category: str
    box: Box3D
    points: np.ndarray
    origin_range: float
    origin_azimuth: float
    observing_angle: float

    @classmethod
    def from_box(cls, sample_id: str, category: str, box: Box3D, points: np.ndarray):
        pol = to_polar(box.cx, box.cy)
        return cls(sample_id, category, box, points, pol.range, pol.azimuth,
                   observing_angle(box))


@dataclass
class ObjectBank:
    samples: list[ObjectSample] = field(default_factory=list)
    index: dict[str, list[str]] = field(default_factory=dict)
    heading_mode: dict[str, float] = field(default_factory=dict)
    skipped: int = 0

    def __post_init__(self):
        self._by_id = {s.sample_id: s for s in self.samples}
        if not self.index:
            self.reindex()

    def reindex(self) -> None:
        self._by_id = {s.sample_id: s for s in self.samples}
        self.index = {}
        for s in self.samples:
            self.index.setdefault(s.category, []).append(s.sample_id)
        self.index = dict(sorted(self.index.items()))
        self.heading_mode = {
            c: heading_mode([self._by_id[i].box.yaw for i in ids])
            for c, ids in self.index.items()
        }

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, sample_id: str) -> ObjectSample:
        return self._by_id[sample_id]

    @property
    def categories(self) -> list[str]:
        return list(self.index)

    def category_samples(self, category: str) -> list[ObjectSample]:
        return [self._by_id[i] for i in self.index.get(category, [])]


def heading_bin(yaw: float) -> int:
    i = int(math.floor((yaw + math.pi) / HEADING_BIN))
    return min(max(i, 0), N_HEADING_BINS - 1)


def heading_mode(yaws) -> float:
    """Center of the most populated 10 degree heading bin; ties go to the
    smaller angle."""
    counts = np.zeros(N_HEADING_BINS, dtype=np.int64)
    for y in yaws:
        counts[heading_bin(y)] += 1
    best = int(np.argmax(counts))  # argmax returns the first maximum
    return -math.pi + (best + 0.5) * HEADING_BIN


def bank_build(frames, min_points: int = 5) -> ObjectBank:
    if min_points < 1:
        raise ValidationError("min_points must be >= 1")
    samples, skipped = [], 0
    for fr in frames:
        for k, (box, category) in enumerate(fr.boxes):
            idx = points_in_box(fr.cloud, box)
            if idx.size < min_points or (box.cx == 0.0 and box.cy == 0.0):
                skipped += 1
                continue
            samples.append(ObjectSample.from_box(
                f"{fr.frame_id}:{k}", category, box, fr.cloud[idx].copy()))
    return ObjectBank(samples, skipped=skipped)


def bank_sample(bank: ObjectBank, category: str, rng: np.random.Generator) -> ObjectSample:
    ids = bank.index.get(category)
    if not ids:
        raise KeyError(f"category {category!r} not in object bank")
    return bank[ids[int(rng.integers(len(ids)))]]


def save_bank(bank: ObjectBank, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    offset = 0
    with (out_dir / "points.blob").open("wb") as blob, \
            (out_dir / "manifest.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BANK_HEADER)
        for s in bank.samples:
            data = np.ascontiguousarray(s.points[:, :4], dtype="<f4").tobytes()
            blob.write(data)
            b = s.box
            w.writerow([s.sample_id, s.category]
                       + [repr(float(v)) for v in (b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw,
                                                   s.origin_range, s.origin_azimuth,
                                                   s.observing_angle)]
                       + [len(s.points), offset, len(data)])
            offset += len(data)


def load_bank(path) -> ObjectBank:
    path = Path(path)
    manifest, blob_path = path / "manifest.csv", path / "points.blob"
    if not manifest.exists() or not blob_path.exists():
        raise MissingInputError(f"object bank not found at {path}")
    blob = blob_path.read_bytes()
    samples = []
    with manifest.open(newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != BANK_HEADER:
            raise FormatError(f"{manifest}:1: unexpected header")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(BANK_HEADER):
                raise FormatError(f"{manifest}:{lineno}: expected {len(BANK_HEADER)} columns")
            vals = [float(v) for v in row[2:12]]
            n, off, length = (int(v) for v in row[12:])
            if length != 16 * n or off + length > len(blob):
                raise FormatError(f"{manifest}:{lineno}: blob slice out of range")
            pts = np.frombuffer(blob, dtype="<f4", count=4 * n, offset=off)
            samples.append(ObjectSample(row[0], row[1], Box3D(*vals[:7]),
                                        pts.reshape(n, 4).astype(np.float64),
                                        vals[7], vals[8], vals[9]))
    return ObjectBank(samples)
