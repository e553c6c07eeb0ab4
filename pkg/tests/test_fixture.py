import math

import numpy as np

from realaug.fixture import FixtureConfig, generate_frame
from realaug.geometry import bev_overlap
from realaug.placeability import ground_fit

from oracles import halfspace_contains


def test_deterministic():
    a, ta = generate_frame(7, 3)
    b, tb = generate_frame(7, 3)
    assert a.cloud.tobytes() == b.cloud.tobytes() and a.boxes == b.boxes
    assert np.array_equal(ta, tb)
    c, _ = generate_frame(8, 3)
    assert c.cloud.tobytes() != a.cloud.tobytes()


def test_shape_and_ids(fixture_frames):
    frames, truths = fixture_frames
    for i, (fr, t) in enumerate(zip(frames, truths)):
        assert fr.frame_id == f"fixture-{i:05d}" and fr.scene_id == f"scene-{i // 5:04d}"
        assert 25_000 <= len(fr.cloud) <= 35_000 and len(t) == len(fr.cloud)
        assert fr.cloud.dtype == np.float64
        assert np.array_equal(fr.cloud, fr.cloud.astype(np.float32).astype(np.float64))
        assert len(fr.boxes) <= 8


def test_boxes_contain_points(fixture_frames):
    cfg = FixtureConfig()
    for fr in fixture_frames[0]:
        for b, c in fr.boxes:
            assert halfspace_contains(fr.cloud, *b.as_array()).sum() >= cfg.min_object_points
            assert -math.pi <= b.yaw < math.pi


def test_boxes_disjoint(fixture_frames):
    for fr in fixture_frames[0]:
        bs = [b for b, _ in fr.boxes]
        assert not any(bev_overlap(bs[i], bs[j]) for i in range(len(bs)) for j in range(i))


def test_ground_fit_recovers_plane(fixture_frames):
    frames, truths = fixture_frames
    for fr, t in zip(frames, truths):
        m = ground_fit(fr.cloud)
        assert np.count_nonzero(m & t) / np.count_nonzero(t) >= 0.95


def test_slope_within_limit():
    cfg = FixtureConfig()
    for i in range(10):
        fr, t = generate_frame(1, i)
        g = fr.cloud[t]
        A = np.column_stack([g[:, 0], g[:, 1], np.ones(len(g))])
        (a, b, _), *_ = np.linalg.lstsq(A, g[:, 2], rcond=None)
        assert math.degrees(math.atan(math.hypot(a, b))) <= 3.0
        assert math.degrees(math.atan(math.hypot(a, b))) <= cfg.max_slope_deg + 0.1
