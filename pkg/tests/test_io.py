import struct

import numpy as np
import pytest

from realaug.errors import FormatError, MissingInputError, ValidationError
from realaug.geometry import Box3D
from realaug.io import (Dataset, LabeledBox, ManifestEntry, SceneFrame, read_cloud,
                        read_labels, read_manifest, read_mask, tree_digest, write_cloud,
                        write_dataset, write_labels, write_manifest, write_mask)

HEADER = "frame_id,category,cx,cy,cz,l,w,h,yaw\n"


class TestCloud:
    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.bin"
        p.write_bytes(b"")
        assert read_cloud(p).shape == (0, 4)

    def test_single_record(self, tmp_path):
        p = tmp_path / "one.bin"
        p.write_bytes(struct.pack("<4f", 1, 2, 3, 0.5))
        assert read_cloud(p).tolist() == [[1.0, 2.0, 3.0, 0.5]]

    def test_five_fields_drop_ring(self, tmp_path):
        p = tmp_path / "five.bin"
        p.write_bytes(struct.pack("<10f", 1, 2, 3, 0.25, 7, 4, 5, 6, 0.5, 9))
        assert read_cloud(p, 5).tolist() == [[1, 2, 3, 0.25], [4, 5, 6, 0.5]]

    def test_intensity_rescaled(self, tmp_path):
        p = tmp_path / "i.bin"
        p.write_bytes(struct.pack("<8f", 0, 0, 0, 255, 1, 1, 1, 51))
        np.testing.assert_allclose(read_cloud(p)[:, 3], [1.0, 0.2])

    def test_size_mismatch(self, tmp_path):
        p = tmp_path / "bad.bin"
        p.write_bytes(b"\0" * 18)
        with pytest.raises(FormatError) as ei:
            read_cloud(p)
        assert "bad.bin" in str(ei.value) and "2 remainder" in str(ei.value)

    def test_bad_field_count(self, tmp_path):
        with pytest.raises(ValidationError):
            read_cloud(tmp_path / "x.bin", 3)

    def test_missing(self, tmp_path):
        with pytest.raises(MissingInputError):
            read_cloud(tmp_path / "nope.bin")

    def test_round_trip_bit_identical(self, tmp_path, rng):
        pts = np.column_stack([rng.normal(0, 30, (10_000, 3)), rng.uniform(0, 1, 10_000)])
        pts = pts.astype(np.float32).astype(np.float64)
        p = tmp_path / "rt.bin"
        write_cloud(pts, p)
        back = read_cloud(p)
        assert back.tobytes() == pts.tobytes()

    def test_empty_write_is_zero_bytes(self, tmp_path):
        p = tmp_path / "z.bin"
        write_cloud(np.zeros((0, 4)), p)
        assert p.stat().st_size == 0

    def test_write_deterministic(self, tmp_path, rng):
        pts = rng.normal(size=(100, 4))
        write_cloud(pts, tmp_path / "a.bin")
        write_cloud(pts, tmp_path / "b.bin")
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


class TestLabels:
    def test_header_only(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text(HEADER)
        assert read_labels(p) == []

    def test_one_row(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text(HEADER + "f0,car,1.5,-2.25,0.5,4.2,1.8,1.6,0.3\n")
        (lb,) = read_labels(p)
        assert lb.frame_id == "f0" and lb.category == "car"
        b = lb.box
        assert (b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw) == (1.5, -2.25, 0.5, 4.2, 1.8, 1.6, 0.3)

    def test_malformed_row_line_number(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text(HEADER + "f0,car,1,2,3,4,5,6,0\nf0,car,1,2,x,4,5,6,0\n")
        with pytest.raises(FormatError, match=":3:"):
            read_labels(p)

    def test_short_row(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text(HEADER + "f0,car,1,2\n")
        with pytest.raises(FormatError, match=":2:"):
            read_labels(p)

    def test_nonpositive_extent(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text(HEADER + "f0,car,1,2,3,0,5,6,0\n")
        with pytest.raises(ValidationError):
            read_labels(p)

    def test_nonfinite(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text(HEADER + "f0,car,nan,2,3,1,5,6,0\n")
        with pytest.raises(FormatError):
            read_labels(p)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text("a,b\n")
        with pytest.raises(FormatError, match=":1:"):
            read_labels(p)

    def test_round_trip(self, tmp_path, rng):
        labels = []
        for i in range(1000):
            b = Box3D(*rng.uniform(-50, 50, 3), *rng.uniform(0.2, 10, 3), rng.uniform(-3.14, 3.14))
            labels.append(LabeledBox(f"f{i % 17}", b, ["car", "bus", "pedestrian"][i % 3]))
        p = tmp_path / "l.csv"
        write_labels(labels, p)
        back = read_labels(p)
        assert len(back) == 1000
        for a, b in zip(labels, back):
            assert (a.frame_id, a.category) == (b.frame_id, b.category)
            np.testing.assert_allclose(a.box.as_array(), b.box.as_array(), atol=1e-6, rtol=0)

    def test_six_decimals_and_nine_columns(self, tmp_path):
        p = tmp_path / "l.csv"
        write_labels([LabeledBox("f", Box3D(1, -1e-9, 0, 1, 1, 1, 0), "car")], p)
        row = p.read_text().splitlines()[1].split(",")
        assert len(row) == 9
        assert row[2:5] == ["1.000000", "0.000000", "0.000000"]


class TestManifestAndDataset:
    def test_manifest_relative_paths(self, tmp_path):
        entries = [ManifestEntry("a", "s0", tmp_path / "clouds" / "a.bin")]
        write_manifest(entries, tmp_path / "manifest.csv")
        assert "clouds/a.bin" in (tmp_path / "manifest.csv").read_text()
        (back,) = read_manifest(tmp_path / "manifest.csv")
        assert back.cloud_path == tmp_path / "clouds" / "a.bin"

    def test_duplicate_frame_id(self, tmp_path):
        (tmp_path / "manifest.csv").write_text("frame_id,scene_id,cloud_path\na,s,x.bin\na,s,y.bin\n")
        with pytest.raises(ValidationError, match="duplicate"):
            read_manifest(tmp_path / "manifest.csv")

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(MissingInputError):
            Dataset(tmp_path)

    def test_dataset_round_trip(self, fixture_frames, fixture_dir):
        frames = fixture_frames[0]
        ds = Dataset(fixture_dir)
        assert len(ds) == len(frames)
        for a, b in zip(frames, ds):
            assert a.frame_id == b.frame_id and a.scene_id == b.scene_id
            assert np.array_equal(a.cloud, b.cloud)
            assert [c for _, c in a.boxes] == [c for _, c in b.boxes]
            for (ba, _), (bb, _) in zip(a.boxes, b.boxes):
                np.testing.assert_allclose(ba.as_array(), bb.as_array(), atol=1e-6)

    def test_label_for_unknown_frame(self, tmp_path):
        fr = SceneFrame("a", "s", np.zeros((0, 4)))
        write_dataset([fr], tmp_path)
        (tmp_path / "labels.csv").write_text(HEADER + "zz,car,1,2,3,1,1,1,0\n")
        with pytest.raises(ValidationError, match="unknown frame"):
            Dataset(tmp_path)


def test_mask_round_trip(tmp_path, rng):
    m = rng.random(1000) < 0.3
    write_mask(m, tmp_path / "m.bin")
    assert np.array_equal(read_mask(tmp_path / "m.bin", 1000), m)
    with pytest.raises(FormatError):
        read_mask(tmp_path / "m.bin", 999)


def test_tree_digest_sensitive(tmp_path):
    (tmp_path / "a").write_bytes(b"1")
    d0 = tree_digest(tmp_path)
    assert tree_digest(tmp_path) == d0
    (tmp_path / "a").write_bytes(b"2")
    assert tree_digest(tmp_path) != d0
