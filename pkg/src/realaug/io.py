"""Point-cloud, label and dataset-manifest I/O.

Clouds on disk are nuScenes/KITTI-style ``.bin`` files of little-endian
float32 records (4 or 5 fields). In memory they are ``(N, 4)`` float64.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, MissingInputError, StorageError, ValidationError
from .geometry import Box3D

LABEL_HEADER = ["frame_id", "category", "cx", "cy", "cz", "l", "w", "h", "yaw"]
MANIFEST_HEADER = ["frame_id", "scene_id", "cloud_path"]

_F32 = np.dtype("<f4")


def empty_cloud() -> np.ndarray:
    return np.zeros((0, 4), dtype=np.float64)


def read_cloud(path, fields_per_point: int = 4) -> np.ndarray:
    if fields_per_point not in (4, 5):
        raise ValidationError(f"fields_per_point must be 4 or 5, got {fields_per_point}")
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError as exc:
        raise MissingInputError(f"cloud file not found: {path}") from exc
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    record = 4 * fields_per_point
    rem = len(raw) % record
    if rem:
        raise FormatError(
            f"{path}: size {len(raw)} is not a multiple of {record} bytes "
            f"({rem} remainder bytes)"
        )
    data = np.frombuffer(raw, dtype=_F32).reshape(-1, fields_per_point)
    cloud = data[:, :4].astype(np.float64)
    if cloud.shape[0] and cloud[:, 3].max() > 1.0:
        cloud[:, 3] /= 255.0
    return cloud


def write_cloud(cloud: np.ndarray, path) -> None:
    path = Path(path)
    buf = np.ascontiguousarray(np.asarray(cloud)[:, :4], dtype=_F32).reshape(-1, 4)
    try:
        path.write_bytes(buf.tobytes())
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


@dataclass
class LabeledBox:
    frame_id: str
    box: Box3D
    category: str


def _fmt(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def read_labels(path) -> list[LabeledBox]:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"label file not found: {path}")
    out = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LABEL_HEADER:
            raise FormatError(f"{path}:1: expected header {','.join(LABEL_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 9:
                raise FormatError(f"{path}:{lineno}: expected 9 columns, got {len(row)}")
            frame_id, category = row[0], row[1]
            if not category:
                raise FormatError(f"{path}:{lineno}: empty category")
            try:
                vals = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            if not all(math.isfinite(v) for v in vals):
                raise FormatError(f"{path}:{lineno}: non-finite value")
            if min(vals[3:6]) <= 0:
                raise ValidationError(f"{path}:{lineno}: non-positive box extent")
            out.append(LabeledBox(frame_id, Box3D(*vals), category))
    return out


def write_labels(labels, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(LABEL_HEADER)
            for lb in labels:
                b = lb.box
                w.writerow([lb.frame_id, lb.category]
                           + [_fmt(v) for v in (b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw)])
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


@dataclass
class SceneFrame:
    frame_id: str
    scene_id: str
    cloud: np.ndarray
    boxes: list[tuple[Box3D, str]] = field(default_factory=list)

    @property
    def categories(self) -> set[str]:
        return {c for _, c in self.boxes}


@dataclass
class ManifestEntry:
    frame_id: str
    scene_id: str
    cloud_path: Path


def read_manifest(path) -> list[ManifestEntry]:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"dataset manifest not found: {path}")
    root = path.parent
    entries, seen = [], set()
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != MANIFEST_HEADER:
            raise FormatError(f"{path}:1: expected header {','.join(MANIFEST_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 columns")
            if row[0] in seen:
                raise ValidationError(f"{path}:{lineno}: duplicate frame_id {row[0]}")
            seen.add(row[0])
            cloud = Path(row[2])
            entries.append(ManifestEntry(row[0], row[1], cloud if cloud.is_absolute() else root / cloud))
    return entries


def write_manifest(entries, path) -> None:
    path = Path(path)
    root = path.parent
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        for e in entries:
            p = Path(e.cloud_path)
            try:
                p = p.relative_to(root)
            except ValueError:
                pass
            w.writerow([e.frame_id, e.scene_id, p.as_posix()])


class Dataset:
    """A manifest plus its labels file, loaded lazily frame by frame.

    Layout: ``<root>/manifest.csv``, ``<root>/labels.csv`` and the clouds the
    manifest points at.
    """

    def __init__(self, manifest_path, labels_path=None, fields_per_point: int = 4):
        manifest_path = Path(manifest_path)
        if manifest_path.is_dir():
            manifest_path = manifest_path / "manifest.csv"
        self.manifest_path = manifest_path
        self.root = manifest_path.parent
        self.entries = read_manifest(manifest_path)
        labels_path = Path(labels_path) if labels_path else self.root / "labels.csv"
        self.labels_path = labels_path
        self.fields_per_point = fields_per_point
        self._boxes: dict[str, list[tuple[Box3D, str]]] = {e.frame_id: [] for e in self.entries}
        if labels_path.exists():
            for lb in read_labels(labels_path):
                if lb.frame_id not in self._boxes:
                    raise ValidationError(f"{labels_path}: label for unknown frame {lb.frame_id}")
                self._boxes[lb.frame_id].append((lb.box, lb.category))

    def __len__(self) -> int:
        return len(self.entries)

    def boxes(self, frame_id: str) -> list[tuple[Box3D, str]]:
        return self._boxes[frame_id]

    def frame(self, i: int) -> SceneFrame:
        e = self.entries[i]
        cloud = read_cloud(e.cloud_path, self.fields_per_point)
        return SceneFrame(e.frame_id, e.scene_id, cloud, list(self._boxes[e.frame_id]))

    def __iter__(self):
        for i in range(len(self.entries)):
            yield self.frame(i)


def write_dataset(frames, out_dir, cloud_subdir: str = "clouds") -> None:
    """Write frames as ``manifest.csv`` + ``labels.csv`` + ``clouds/*.bin``."""
    out_dir = Path(out_dir)
    (out_dir / cloud_subdir).mkdir(parents=True, exist_ok=True)
    entries, labels = [], []
    for fr in frames:
        cp = out_dir / cloud_subdir / f"{fr.frame_id}.bin"
        write_cloud(fr.cloud, cp)
        entries.append(ManifestEntry(fr.frame_id, fr.scene_id, cp))
        labels.extend(LabeledBox(fr.frame_id, b, c) for b, c in fr.boxes)
    write_manifest(entries, out_dir / "manifest.csv")
    write_labels(labels, out_dir / "labels.csv")


def write_mask(mask: np.ndarray, path) -> None:
    Path(path).write_bytes(np.asarray(mask, dtype=np.uint8).tobytes())


def read_mask(path, n: int | None = None) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"mask file not found: {path}")
    m = np.frombuffer(path.read_bytes(), dtype=np.uint8).astype(bool)
    if n is not None and m.size != n:
        raise FormatError(f"{path}: mask has {m.size} entries, cloud has {n}")
    return m


def ensure_empty_dir(path, force: bool = False) -> Path:
    path = Path(path)
    if path.exists() and any(path.iterdir()) and not force:
        raise ValidationError(f"output directory {path} is not empty (use --force)")
    path.mkdir(parents=True, exist_ok=True)
    return path


def file_digest(path) -> str:
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def tree_digest(root, names=None) -> str:
    """Hash of every file under ``root`` (relative path + content)."""
    import hashlib

    root = Path(root)
    h = hashlib.sha256()
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for fn in sorted(filenames):
            p = Path(dirpath) / fn
            rel = p.relative_to(root).as_posix()
            if names is not None and rel not in names:
                continue
            h.update(rel.encode())
            h.update(file_digest(p).encode())
    return h.hexdigest()
