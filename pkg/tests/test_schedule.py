import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from realaug.errors import ValidationError
from realaug.schedule import (REFERENCE_N_PLAIN, ScheduleConfig, ScheduleState, alpha_at, beta_at,
                              counts_for_frame, expected_count)

CFG = ScheduleConfig()


class TestAlpha:
    @pytest.mark.parametrize("t,expected", [(0.0, 1), (0.5, 1), (0.75, 1), (1.0, 0)])
    def test_table(self, t, expected):
        assert alpha_at(t, CFG) == expected

    def test_ramp_exact_rational(self):
        cfg = ScheduleConfig(alpha_start=Fraction(3, 4))
        assert alpha_at(Fraction(4, 5), cfg) == Fraction(4, 5)
        assert alpha_at(Fraction(7, 8), cfg) == Fraction(1, 2)

    def test_ramp_float(self):
        assert alpha_at(0.8, CFG) == pytest.approx(0.8, abs=1e-15)

    def test_start_one(self):
        cfg = ScheduleConfig(alpha_start=1.0)
        assert alpha_at(0.999, cfg) == 1.0 and alpha_at(1.0, cfg) == 0.0

    @pytest.mark.parametrize("t", [-0.01, 1.01, math.nan])
    def test_out_of_range(self, t):
        with pytest.raises(ValidationError):
            alpha_at(t, CFG)
        with pytest.raises(ValidationError):
            beta_at(t, CFG)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_monotone(self, a, b):
        lo, hi = sorted((a, b))
        assert alpha_at(hi, CFG) <= alpha_at(lo, CFG)
        assert beta_at(hi, CFG) <= beta_at(lo, CFG)


class TestBeta:
    @pytest.mark.parametrize("t,expected", [(0.0, 1.0), (0.5, 1.0), (0.75, 0.5), (0.8, 0.5),
                                            (0.85, 0.25), (0.9, 0.25), (1.0, 0.25)])
    def test_table(self, t, expected):
        assert beta_at(t, CFG) == expected

    def test_factor(self):
        assert beta_at(0.9, ScheduleConfig(beta_factor=3.0)) == 1 / 9


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(alpha_start=1.5), dict(beta_steps=[0.8, 0.7]),
                                    dict(beta_steps=[0.5, 0.5]), dict(beta_factor=0.5),
                                    dict(n_plain={"car": -1})])
    def test_invalid(self, kw):
        with pytest.raises(ValidationError):
            ScheduleConfig(**kw)

    def test_reference_table(self):
        assert REFERENCE_N_PLAIN == {"car": 2, "truck": 3, "construction_vehicle": 7, "bus": 4,
                                     "trailer": 6, "barrier": 2, "motorcycle": 6, "bicycle": 6,
                                     "pedestrian": 2, "traffic_cone": 2}


class TestCounts:
    def test_plain(self, rng):
        st_ = ScheduleState(0.0, 1.0, 1.0)
        assert counts_for_frame(set(), st_, CFG, rng) == REFERENCE_N_PLAIN

    def test_exist(self, rng):
        st_ = ScheduleState(1.0, 0.0, 1.0)
        out = counts_for_frame({"car", "bus"}, st_, CFG, rng)
        assert out == {c: (n if c in ("car", "bus") else 0) for c, n in REFERENCE_N_PLAIN.items()}

    def test_monte_carlo_expectation(self):
        cfg = ScheduleConfig(n_plain={"bus": 6})
        st_ = ScheduleState(0.9, 0.5, 0.5)
        assert expected_count(6, False, st_) == 1.5
        rng = np.random.default_rng(2024)
        draws = np.array([counts_for_frame(set(), st_, cfg, rng)["bus"] for _ in range(100_000)])
        assert set(np.unique(draws)) == {1, 2}
        assert abs(draws.mean() - 1.5) <= 0.01

    def test_deterministic(self):
        st_ = ScheduleState.at(0.8, CFG)
        a = counts_for_frame({"car"}, st_, CFG, np.random.default_rng(7))
        b = counts_for_frame({"car"}, st_, CFG, np.random.default_rng(7))
        assert a == b

    def test_state_at(self):
        s = ScheduleState.at(0.9, CFG)
        assert s.beta == 0.25 and s.alpha == pytest.approx(0.4)
