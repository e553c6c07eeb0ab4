import csv

import numpy as np
import pytest

from realaug.analytics import VoxelSpec, object_stats
from realaug.bank import load_bank
from realaug.cli import main
from realaug.io import Dataset, file_digest, tree_digest

DATA_FILES = ["manifest.csv", "labels.csv"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Small end-to-end pipeline run shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    ds = root / "ds"
    assert main(["fixture", "--seed", "3", "--frames", "6", "--points", "12000", "--out", str(ds)]) == 0
    assert main(["ground", "fit", "--dataset", str(ds), "--out", str(root / "ground")]) == 0
    assert main(["bank", "build", "--dataset", str(ds), "--out", str(root / "bank")]) == 0
    return root


def _cloud_digests(d):
    return {p.name: file_digest(p) for p in sorted((d / "clouds").iterdir())}


def test_score(capsys):
    assert run(capsys, "score", "--map-aug", 0.5, "--map-noaug", 0.5)[:2] == (0, "Re=1.000000\n")
    assert run(capsys, "score", "--map-aug", 0.372, "--map-noaug", 0.5)[1] == "Re=0.744000\n"


def test_score_zero_denominator(capsys):
    code, _, err = run(capsys, "score", "--map-aug", 0.5, "--map-noaug", 0)
    assert code == 3 and err.startswith("error code=validation message=")


def test_missing_dataset(capsys, tmp_path):
    code, _, err = run(capsys, "bank", "build", "--dataset", tmp_path / "nope", "--out", tmp_path / "b")
    assert code == 2 and err.startswith("error code=missing_input")
    assert err.count("\n") == 1


def test_unknown_config_key(capsys, tmp_path, workspace):
    code, _, err = run(capsys, "bank", "build", "--dataset", workspace / "ds", "--set", "bogus.key=1",
                       "--out", tmp_path / "b")
    assert code == 3


def test_fixture_deterministic_and_refuses_nonempty(capsys, tmp_path):
    for d in ("a", "b"):
        assert run(capsys, "fixture", "--seed", 7, "--frames", 1, "--out", tmp_path / d)[0] == 0
    assert tree_digest(tmp_path / "a") == tree_digest(tmp_path / "b")
    assert run(capsys, "fixture", "--seed", 7, "--frames", 1, "--out", tmp_path / "a")[0] == 3
    assert run(capsys, "fixture", "--seed", 7, "--frames", 1, "--out", tmp_path / "a", "--force")[0] == 0


def test_augment_requires_seed(capsys, tmp_path, workspace):
    code, _, err = run(capsys, "augment", "--dataset", workspace / "ds", "--bank", workspace / "bank",
                       "--progress", 0.5, "--out", tmp_path / "o")
    assert code == 3 and "seed" in err


def test_augment_bad_progress(capsys, tmp_path, workspace):
    code, _, _ = run(capsys, "augment", "--dataset", workspace / "ds", "--bank", workspace / "bank",
                     "--seed", 1, "--progress", 1.5, "--out", tmp_path / "o")
    assert code == 3


def test_noop_hashes(capsys, tmp_path, workspace):
    ds = workspace / "ds"
    code, _, _ = run(capsys, "augment", "--dataset", ds, "--bank", workspace / "bank", "--seed", 1,
                     "--progress", 0.3, "--set", "schedule.n_plain.car=0", "--out", tmp_path / "o")
    assert code == 0
    assert _cloud_digests(tmp_path / "o") == _cloud_digests(ds)
    for name in DATA_FILES:
        assert file_digest(tmp_path / "o" / name) == file_digest(ds / name)


def test_augment_workers_and_repeat(capsys, tmp_path, workspace):
    base = ["augment", "--dataset", workspace / "ds", "--bank", workspace / "bank",
            "--masks", workspace / "ground", "--seed", 11, "--progress", 0.8]
    digests = []
    for name, workers in (("w1", 1), ("w2", 2), ("w1b", 1)):
        assert run(capsys, *base, "--workers", workers, "--out", tmp_path / name)[0] == 0
        digests.append(tree_digest(tmp_path / name))
    assert digests[0] == digests[1] == digests[2]
    out = tmp_path / "w1"
    assert "progress = 0.8" in (out / "config.resolved").read_text()
    rows = list(csv.DictReader((out / "report.csv").open()))
    assert len(rows) == 6
    for r in rows:
        assert int(r["placed"]) + int(r["skipped"]) == int(r["requested"])
    ds = Dataset(out)
    assert len(ds) == 6


def test_placeability_train_and_infer(capsys, tmp_path, workspace):
    model = tmp_path / "m.rapm"
    code, out, _ = run(capsys, "placeability", "train", "--dataset", workspace / "ds", "--masks",
                       workspace / "ground", "--epochs", 2, "--seed", 0, "--set",
                       "train.max_points_per_frame=1000", "--out", model)
    assert code == 0 and model.exists()
    assert (tmp_path / "m.loss.csv").read_text().startswith("epoch,mean_loss\n")
    code, _, _ = run(capsys, "placeability", "infer", "--dataset", workspace / "ds", "--model", model,
                     "--out", tmp_path / "masks")
    assert code == 0
    assert len(list((tmp_path / "masks").glob("*.mask"))) == 6
    code, _, _ = run(capsys, "augment", "--dataset", workspace / "ds", "--bank", workspace / "bank",
                     "--model", model, "--seed", 2, "--progress", 0.1, "--out", tmp_path / "aug")
    assert code == 0


def test_stats_match_recount(capsys, tmp_path, workspace):
    code, out, _ = run(capsys, "stats", "objects", "--dataset", workspace / "ds", "--bank",
                       workspace / "bank", "--out", tmp_path / "o.csv")
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "o.csv").open()))
    bank = load_bank(workspace / "bank")
    ref = {s.category: s for s in object_stats(Dataset(workspace / "ds"), bank, VoxelSpec())}
    assert {r["category"] for r in rows} == set(ref)
    for r in rows:
        s = ref[r["category"]]
        assert float(r["d_pts"]) == pytest.approx(s.d_pts, abs=1e-6)
        assert float(r["r_obj"]) == pytest.approx(s.r_obj, abs=1e-6)
    assert out.splitlines()[0].split()[0] == "category"

    code, out, _ = run(capsys, "stats", "scene-category", "--dataset", workspace / "ds")
    assert code == 0 and out.startswith("scene_id")
    code, out, _ = run(capsys, "stats", "fgbg", "--dataset", workspace / "ds", "--category", "car")
    assert code == 0 and "car" in out
