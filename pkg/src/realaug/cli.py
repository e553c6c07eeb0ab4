"""``realaug`` command line.

Exit codes: 0 success, 2 missing input, 3 validation failure, 4 I/O error.
Failures print one line to stderr: ``error code=<kind> message=<text>``.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (CategoryStats, MetricPair, fg_bg_ratio, object_stats,
                        reality_score, scene_category_table)
from .bank import bank_build, load_bank, save_bank
from .config import apply_overrides, dump_config, load_config, resolved, section, validate_keys
from .errors import MissingInputError, RealAugError, StorageError, ValidationError
from .fixture import generate_frames
from .io import Dataset, ensure_empty_dir, read_mask, write_dataset, write_mask
from .pipeline import AugmentJob, augment_dataset
from .placeability.ground import ground_fit
from .placeability.model import PlaceabilityModel, infer_mask, load_model, save_model, train

log = logging.getLogger("realaug")


def _common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    if out_required:
        p.add_argument("--out", type=Path, required=True)
    else:
        p.add_argument("--out", type=Path)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="realaug", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", help="generate a synthetic dataset")
    _common(p)
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--points", type=int, default=30000, help="approx points per frame")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("bank", help="object bank commands")
    bsub = p.add_subparsers(dest="action", required=True)
    q = bsub.add_parser("build")
    _common(q)
    q.add_argument("--dataset", type=Path)
    q.add_argument("--min-points", type=int)
    q.set_defaults(func=cmd_bank_build)

    p = sub.add_parser("ground", help="plane-fit ground labels")
    gsub = p.add_subparsers(dest="action", required=True)
    q = gsub.add_parser("fit")
    _common(q)
    q.add_argument("--dataset", type=Path)
    q.set_defaults(func=cmd_ground_fit)

    p = sub.add_parser("placeability", help="placeability estimator")
    psub = p.add_subparsers(dest="action", required=True)
    q = psub.add_parser("train")
    _common(q)
    q.add_argument("--dataset", type=Path)
    q.add_argument("--masks", type=Path, help="ground labels from `ground fit` (else fitted on the fly)")
    q.add_argument("--epochs", type=int)
    q.add_argument("--lr", type=float)
    q.add_argument("--batch-size", type=int)
    q.set_defaults(func=cmd_placeability_train)
    q = psub.add_parser("infer")
    _common(q)
    q.add_argument("--dataset", type=Path)
    q.add_argument("--model", type=Path)
    q.add_argument("--threshold", type=float)
    q.set_defaults(func=cmd_placeability_infer)

    p = sub.add_parser("augment", help="compose objects into every frame")
    _common(p)
    p.add_argument("--dataset", type=Path)
    p.add_argument("--bank", type=Path)
    p.add_argument("--masks", type=Path, help="per-frame placeability masks")
    p.add_argument("--model", type=Path, help="placeability model (used when --masks is absent)")
    p.add_argument("--progress", type=float, required=True, help="training progress t in [0, 1]")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("stats", help="dataset statistics")
    ssub = p.add_subparsers(dest="action", required=True)
    q = ssub.add_parser("objects")
    _common(q, out_required=False)
    q.add_argument("--dataset", type=Path)
    q.add_argument("--bank", type=Path)
    q.set_defaults(func=cmd_stats_objects)
    q = ssub.add_parser("scene-category")
    _common(q, out_required=False)
    q.add_argument("--dataset", type=Path)
    q.set_defaults(func=cmd_stats_scene_category)
    q = ssub.add_parser("fgbg")
    _common(q, out_required=False)
    q.add_argument("--dataset", type=Path)
    q.add_argument("--category", action="append", help="default: every labelled category")
    q.set_defaults(func=cmd_stats_fgbg)

    p = sub.add_parser("score", help="reality-conforming score from two mAP values")
    p.add_argument("--map-aug", type=float, required=True)
    p.add_argument("--map-noaug", type=float, required=True)
    p.set_defaults(func=cmd_score)
    return ap


def _config(args) -> dict:
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    cfg = apply_overrides(cfg, getattr(args, "set", []))
    for key in ("seed", "workers", "dataset", "bank", "model", "masks"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = str(v) if isinstance(v, Path) else v
    validate_keys(cfg)
    return cfg


def _path(cfg: dict, key: str) -> Path:
    if key not in cfg:
        raise MissingInputError(f"--{key} (or config key '{key}') is required")
    p = Path(cfg[key])
    if not p.exists():
        raise MissingInputError(f"{key} path does not exist: {p}")
    return p


def _dataset(cfg: dict) -> Dataset:
    return Dataset(_path(cfg, "dataset"))


def _emit_table(header, rows, out: Path | None) -> None:
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(header)]
    print("  ".join(str(h).ljust(w) for h, w in zip(header, widths)))
    for r in rows:
        print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))
    if out is not None:
        with out.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)


def cmd_fixture(args) -> None:
    cfg = _config(args)
    if args.frames < 1:
        raise ValidationError("--frames must be >= 1")
    from .fixture import FixtureConfig

    out = ensure_empty_dir(args.out, args.force)
    frames, _ = generate_frames(int(cfg.get("seed", 0)), args.frames,
                                FixtureConfig(points_per_frame=args.points))
    write_dataset(frames, out)
    print(f"wrote {len(frames)} frames to {out}")


def cmd_bank_build(args) -> None:
    cfg = _config(args)
    ds = _dataset(cfg)
    min_points = args.min_points or int(cfg.get("bank.min_points", 5))
    bank = bank_build(ds, min_points)
    save_bank(bank, args.out)
    counts = ", ".join(f"{c}={len(v)}" for c, v in bank.index.items())
    print(f"bank: {len(bank)} samples ({counts}); skipped {bank.skipped} boxes below {min_points} points")


def cmd_ground_fit(args) -> None:
    cfg = _config(args)
    ds = _dataset(cfg)
    gcfg = section(cfg, "ground")
    args.out.mkdir(parents=True, exist_ok=True)
    total = ground = 0
    for fr in ds:
        m = ground_fit(fr.cloud, gcfg)
        write_mask(m, args.out / f"{fr.frame_id}.mask")
        total += m.size
        ground += int(m.sum())
    print(f"labelled {len(ds)} frames; ground fraction {ground / max(total, 1):.4f}")


def cmd_placeability_train(args) -> None:
    cfg = _config(args)
    for flag, key in (("epochs", "train.epochs"), ("lr", "train.learning_rate"),
                      ("batch_size", "train.batch_size")):
        v = getattr(args, flag)
        if v is not None:
            cfg[key] = v
    if "seed" in cfg and "train.seed" not in cfg:
        cfg["train.seed"] = cfg["seed"]
    tcfg = section(cfg, "train")
    gcfg = section(cfg, "ground")
    ds = _dataset(cfg)
    cap = int(cfg.get("train.max_points_per_frame", 5000))
    rng = np.random.default_rng(tcfg.seed)
    data = []
    for fr in ds:
        labels = (read_mask(args.masks / f"{fr.frame_id}.mask", len(fr.cloud))
                  if args.masks else ground_fit(fr.cloud, gcfg))
        idx = np.arange(len(fr.cloud))
        if cap and len(idx) > cap:
            idx = np.sort(rng.choice(len(idx), cap, replace=False))
        data.append((fr.cloud[idx], labels[idx]))
    model, history = train(PlaceabilityModel.init(seed=tcfg.seed), data, tcfg)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, args.out)
    hist_path = args.out.with_suffix(".loss.csv")
    with hist_path.open("w") as fh:
        fh.write("epoch,mean_loss\n")
        fh.writelines(f"{i},{v:.8f}\n" for i, v in enumerate(history))
    print(f"trained on {sum(len(d[1]) for d in data)} points; final loss {history[-1]:.6f}")


def cmd_placeability_infer(args) -> None:
    cfg = _config(args)
    ds = _dataset(cfg)
    model = load_model(_path(cfg, "model"))
    thr = args.threshold if args.threshold is not None else section(cfg, "composition").placeability_threshold
    args.out.mkdir(parents=True, exist_ok=True)
    for fr in ds:
        write_mask(infer_mask(model, fr.cloud, thr), args.out / f"{fr.frame_id}.mask")
    print(f"wrote {len(ds)} placeability masks to {args.out}")


def cmd_augment(args) -> None:
    cfg = _config(args)
    if "seed" not in cfg:
        raise ValidationError("augment requires --seed (or config key 'seed')")
    ds = _dataset(cfg)
    bank = load_bank(_path(cfg, "bank"))
    masks = _path(cfg, "masks") if "masks" in cfg else None
    model = load_model(_path(cfg, "model")) if masks is None and "model" in cfg else None
    out = ensure_empty_dir(args.out, args.force)
    job = AugmentJob(ds, bank, out, section(cfg, "schedule"), section(cfg, "composition"),
                     float(args.progress), int(cfg["seed"]), masks, model, section(cfg, "ground"))
    snapshot = resolved(cfg)
    snapshot.pop("workers", None)  # does not affect outputs
    snapshot["progress"] = float(args.progress)
    dump_config(snapshot, out / "config.resolved")
    t0 = time.perf_counter()
    reports = augment_dataset(job, int(cfg.get("workers", 1)))
    dt = time.perf_counter() - t0
    placed = sum(r.placed for r in reports)
    requested = sum(r.requested for r in reports)
    print(f"augmented {len(reports)} frames in {dt:.2f}s; placed {placed}/{requested}")


def cmd_stats_objects(args) -> None:
    cfg = _config(args)
    ds = _dataset(cfg)
    bank = load_bank(_path(cfg, "bank"))
    stats = object_stats(ds, bank, section(cfg, "voxel"))
    _emit_table(CategoryStats.CSV_HEADER, [s.row() for s in stats], args.out)


def cmd_stats_scene_category(args) -> None:
    cfg = _config(args)
    table = scene_category_table(_dataset(cfg))
    cats = sorted({c for row in table.values() for c in row})
    _emit_table(["scene_id", *cats], [[s, *(row[c] for c in cats)] for s, row in table.items()],
                args.out)


def cmd_stats_fgbg(args) -> None:
    cfg = _config(args)
    ds = _dataset(cfg)
    frames = list(ds)
    cats = args.category or sorted({c for fr in frames for _, c in fr.boxes})
    spec = section(cfg, "voxel")
    _emit_table(["category", "fg_bg_ratio"],
                [[c, f"{fg_bg_ratio(frames, spec, c):.6f}"] for c in cats], args.out)


def cmd_score(args) -> None:
    print(f"Re={reality_score(MetricPair(args.map_aug, args.map_noaug)):.6f}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except RealAugError as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error code={exc.code} message={msg}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        err = StorageError(str(exc))
        print(f"error code={err.code} message={err}", file=sys.stderr)
        return err.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
