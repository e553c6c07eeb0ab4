import pytest

from realaug.config import (apply_overrides, dump_config, load_config, parse_config_text,
                            resolved, section, validate_keys)
from realaug.errors import FormatError, MissingInputError, ValidationError
from realaug.schedule import REFERENCE_N_PLAIN


def test_parse():
    cfg = parse_config_text("""
# comment
seed = 7
schedule.beta_steps = [0.5, 0.9]
composition.remove_occupied = false
composition.delta_policy = 1.5
dataset = data/fixture
""")
    assert cfg == {"seed": 7, "schedule.beta_steps": [0.5, 0.9], "composition.remove_occupied": False,
                   "composition.delta_policy": 1.5, "dataset": "data/fixture"}


def test_bad_line():
    with pytest.raises(FormatError, match=":2:"):
        parse_config_text("seed = 1\nnonsense\n", "c")


def test_missing_file(tmp_path):
    with pytest.raises(MissingInputError):
        load_config(tmp_path / "none.cfg")


def test_unknown_key():
    with pytest.raises(ValidationError):
        validate_keys({"schedule.alpha_begin": 0.5})
    validate_keys({"schedule.n_plain.car": 3, "voxel.vx": 0.1, "seed": 1})


def test_sections():
    cfg = apply_overrides({"seed": 4}, ["schedule.alpha_start=0.5", "composition.position_attempts=3",
                                        "voxel.x_range=[-10, 10]"])
    assert section(cfg, "schedule").alpha_start == 0.5
    assert section(cfg, "schedule").seed == 4
    assert section(cfg, "schedule").n_plain == REFERENCE_N_PLAIN
    assert section(cfg, "composition").position_attempts == 3
    assert section(cfg, "voxel").x_range == (-10, 10)


def test_n_plain_replaces_table():
    cfg = {"schedule.n_plain.car": 0, "schedule.n_plain.bus": 1}
    assert section(cfg, "schedule").n_plain == {"car": 0, "bus": 1}


def test_invalid_section_value():
    with pytest.raises(ValidationError):
        section({"composition.position_attempts": 0}, "composition")


def test_bad_override():
    with pytest.raises(ValidationError):
        apply_overrides({}, ["novalue"])


def test_resolved_round_trip(tmp_path):
    cfg = {"seed": 3, "schedule.beta_factor": 3.0}
    res = resolved(cfg)
    assert res["schedule.beta_factor"] == 3.0 and res["schedule.n_plain.car"] == 2
    assert res["composition.delta_policy"] == "half_length"
    dump_config(res, tmp_path / "c")
    back = load_config(tmp_path / "c")
    assert resolved(back) == res
