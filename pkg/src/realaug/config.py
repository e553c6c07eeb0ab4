"""Run configuration: a flat ``dotted.key = value`` document.

Values are Python literals (numbers, lists, quoted strings) or bare words;
``true``/``false`` are booleans. Lines starting with ``#`` are comments.
Example::

    seed = 7
    schedule.alpha_start = 0.75
    schedule.beta_steps = [0.75, 0.85]
    schedule.n_plain.car = 2
    composition.position_attempts = 10
"""
from __future__ import annotations

import ast
from dataclasses import fields
from pathlib import Path

from .analytics import VoxelSpec
from .composition import CompositionConfig
from .errors import FormatError, MissingInputError, ValidationError
from .placeability.ground import GroundConfig
from .placeability.model import TrainConfig
from .schedule import ScheduleConfig

SECTIONS = {
    "composition": CompositionConfig,
    "schedule": ScheduleConfig,
    "voxel": VoxelSpec,
    "ground": GroundConfig,
    "train": TrainConfig,
}
TOP_LEVEL = {"seed", "workers", "dataset", "bank", "model", "masks",
             "bank.min_points", "train.max_points_per_frame"}


def parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        v = list(v)
    return repr(v)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{source}:{lineno}: expected key = value")
        key, val = line.split("=", 1)
        out[key.strip()] = parse_value(val)
    return out


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), str(path))


def apply_overrides(cfg: dict, pairs) -> dict:
    cfg = dict(cfg)
    for pair in pairs or []:
        if "=" not in pair:
            raise ValidationError(f"--set expects key=value, got {pair!r}")
        k, v = pair.split("=", 1)
        cfg[k.strip()] = parse_value(v)
    return cfg


def _known_keys() -> set[str]:
    keys = set(TOP_LEVEL)
    for name, cls in SECTIONS.items():
        keys.update(f"{name}.{f.name}" for f in fields(cls))
    return keys


def validate_keys(cfg: dict) -> None:
    known = _known_keys()
    for k in cfg:
        if k in known or k.startswith("schedule.n_plain."):
            continue
        raise ValidationError(f"unknown config key {k!r}")


def section(cfg: dict, name: str):
    """Build the dataclass for section ``name`` from dotted keys."""
    cls = SECTIONS[name]
    prefix = name + "."
    kwargs = {}
    for f in fields(cls):
        key = prefix + f.name
        if key in cfg:
            v = cfg[key]
            kwargs[f.name] = tuple(v) if isinstance(v, list) and name in ("voxel", "ground") else v
    if name == "schedule":
        n_plain = {k[len("schedule.n_plain."):]: int(v) for k, v in cfg.items()
                   if k.startswith("schedule.n_plain.")}
        if n_plain:
            # an explicit quota table replaces the reference table wholesale
            kwargs["n_plain"] = n_plain
        kwargs.pop("seed", None)
        if "seed" in cfg:
            kwargs["seed"] = int(cfg["seed"])
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"bad [{name}] section: {exc}") from exc


def resolved(cfg: dict) -> dict:
    """Every key with its effective value, defaults filled in."""
    out = {k: v for k, v in cfg.items() if k in TOP_LEVEL}
    for name in SECTIONS:
        obj = section(cfg, name)
        for f in fields(obj):
            v = getattr(obj, f.name)
            if name == "schedule" and f.name == "n_plain":
                for c, n in sorted(v.items()):
                    out[f"schedule.n_plain.{c}"] = n
                continue
            out[f"{name}.{f.name}"] = v
    return dict(sorted(out.items()))


def dump_config(cfg: dict, path) -> None:
    lines = [f"{k} = {format_value(v)}" for k, v in cfg.items()]
    Path(path).write_text("\n".join(lines) + "\n")
