"""Per-frame insertion counts for real/synthetic mixing.

Early in training every category gets its plain quota; after ``alpha_start``
the quota shifts linearly toward categories already present in the scan,
and ``beta`` steps the whole budget down so crowdedness drifts back toward
real scans.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# CBGS reference sampling magnitudes for the nuScenes classes
REFERENCE_N_PLAIN = {
    "car": 2,
    "truck": 3,
    "construction_vehicle": 7,
    "bus": 4,
    "trailer": 6,
    "barrier": 2,
    "motorcycle": 6,
    "bicycle": 6,
    "pedestrian": 2,
    "traffic_cone": 2,
}


@dataclass
class ScheduleConfig:
    n_plain: dict[str, int] = field(default_factory=lambda: dict(REFERENCE_N_PLAIN))
    alpha_start: float = 0.75
    beta_steps: list[float] = field(default_factory=lambda: [0.75, 0.85])
    beta_factor: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha_start <= 1.0:
            raise ValidationError("alpha_start must lie in [0, 1]")
        steps = list(self.beta_steps)
        if any(not 0.0 <= s <= 1.0 for s in steps) or any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValidationError("beta_steps must be strictly increasing within [0, 1]")
        if self.beta_factor < 1.0:
            raise ValidationError("beta_factor must be >= 1")
        if any(v < 0 for v in self.n_plain.values()):
            raise ValidationError("n_plain values must be >= 0")


@dataclass(frozen=True)
class ScheduleState:
    t: float
    alpha: float
    beta: float

    @classmethod
    def at(cls, t: float, cfg: ScheduleConfig) -> "ScheduleState":
        return cls(t, alpha_at(t, cfg), beta_at(t, cfg))


def _check_t(t: float) -> None:
    if not (0.0 <= t <= 1.0) or math.isnan(t):
        raise ValidationError(f"training progress must lie in [0, 1], got {t}")


def alpha_at(t: float, cfg: ScheduleConfig) -> float:
    _check_t(t)
    if t >= 1.0:
        return 0.0
    if t < cfg.alpha_start:
        return 1.0
    # integer literals keep Fraction inputs exact
    return 1 - (t - cfg.alpha_start) / (1 - cfg.alpha_start)


def beta_at(t: float, cfg: ScheduleConfig) -> float:
    _check_t(t)
    k = sum(1 for s in cfg.beta_steps if s <= t)
    return float(cfg.beta_factor) ** (-k)


def expected_count(n_plain: float, present: bool, state: ScheduleState) -> float:
    n_exist = n_plain if present else 0.0
    return (n_plain * state.alpha + n_exist * (1.0 - state.alpha)) * state.beta


def counts_for_frame(scene_categories, state: ScheduleState, cfg: ScheduleConfig,
                     rng: np.random.Generator) -> dict[str, int]:
    """Integer insertion count per category, stochastically rounded so the
    expectation equals the mixed quota exactly."""
    present = set(scene_categories)
    out = {}
    for c in sorted(cfg.n_plain):
        raw = expected_count(cfg.n_plain[c], c in present, state)
        base = math.floor(raw)
        frac = raw - base
        out[c] = int(base) + int(rng.random() < frac)
    return out
