import pytest

from app.core.config import load_run_config
from app.core.errors import ConfigError
from app.schemas.texture import OffsetMode, RunConfig, WeightingChoice


def test_defaults():
    config = load_run_config(environ={})
    assert config == RunConfig()
    assert config.theta == 0.2
    assert config.tract.c_p == 0.7 and config.tract.c_t == 2.0
    assert config.gate_threshold == 8.0 and config.gate_slope == 2.5
    assert config.weighting is WeightingChoice.BOTH
    assert config.filterbank.n_seg == 133
    assert config.filterbank.filter_length == 17_640
    assert config.filterbank.frame_rate == 441.0
    assert config.filterbank.warmup_frames == 177


def test_precedence(tmp_path):
    config_file = tmp_path / "run.env"
    config_file.write_text("THETA=0.3\nTEXTURE_C_T=3.0\nOFFSET_MODE=round\n")
    environ = {"TEXTURE_THETA": "0.25", "TEXTURE_C_P": "0.5", "TEXTURE_SEED": "9", "UNRELATED": "x"}

    from_env = load_run_config(environ=environ)
    assert from_env.theta == 0.25 and from_env.tract.c_p == 0.5 and from_env.seed == 9

    from_file = load_run_config(str(config_file), environ=environ)
    assert from_file.theta == 0.3
    assert from_file.tract.c_p == 0.5 and from_file.tract.c_t == 3.0
    assert from_file.offset_mode is OffsetMode.ROUND

    flagged = load_run_config(str(config_file), {"THETA": 0.4, "SEED": None}, environ=environ)
    assert flagged.theta == 0.4
    assert flagged.seed == 9


def test_filterbank_keys_change_the_hash():
    base = load_run_config(environ={})
    narrow = load_run_config(overrides={"N_SEG": 64, "F_MAX": "8000"}, environ={})
    assert narrow.filterbank.n_seg == 64 and narrow.filterbank.f_max == 8000.0
    assert narrow.filterbank.config_hash() != base.filterbank.config_hash()
    assert load_run_config(overrides={"THETA": 0.3}, environ={}).filterbank.config_hash() == base.filterbank.config_hash()


def test_boolean_and_log_level_parsing():
    config = load_run_config(overrides={"ADD_FLOOR": "false", "LOG_LEVEL": "debug"}, environ={})
    assert config.add_floor is False
    assert config.log_level == "DEBUG"


@pytest.mark.parametrize("overrides", [
    {"THETA": 1.5},
    {"C_P": 0},
    {"WEIGHTING": "loudness"},
    {"LOG_LEVEL": "chatty"},
    {"F_MAX": 30_000},
    {"WORKERS": 0},
])
def test_invalid_values(overrides):
    with pytest.raises(ConfigError):
        load_run_config(overrides=overrides, environ={})


def test_unknown_key_and_missing_file(tmp_path):
    config_file = tmp_path / "run.env"
    config_file.write_text("THETAA=0.3\n")
    with pytest.raises(ConfigError):
        load_run_config(str(config_file), environ={})
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "absent.env"), environ={})
    with pytest.raises(ConfigError):
        load_run_config(overrides={"BOGUS": 1}, environ={})


def test_floor_seed_follows_run_seed():
    config = load_run_config(overrides={"SEED": 100}, environ={})
    assert config.noise_spec().seed == 100
    assert config.floor_spec(2.0).seed == 101
    assert config.floor_spec(2.0).duration_s == 2.0
