"""Configuration files and dotted overrides."""

import json

import pytest

from dqtrack.config import load_config, merge, parse_override, parse_value, set_path
from dqtrack.errors import ConfigError
from dqtrack.sim import SimConfig


@pytest.mark.parametrize("text, value", [
    ("0.5", 0.5), ("3", 3), ("true", True), ("[1, 2, 3]", [1, 2, 3]), ("proposed", "proposed"),
])
def test_parse_value(text, value):
    assert parse_value(text) == value


def test_parse_override_errors():
    assert parse_override("gains.kp = 0.5") == ("gains.kp", 0.5)
    for bad in ("gains.kp", "=3"):
        with pytest.raises(ConfigError):
            parse_override(bad)


def test_set_path_and_merge():
    cfg = {}
    set_path(cfg, "gains.kp", 1.0)
    set_path(cfg, "gains.kd", 2.0)
    assert cfg == {"gains": {"kp": 1.0, "kd": 2.0}}
    with pytest.raises(ConfigError):
        set_path(cfg, "gains.kp.x", 1)
    base = {"a": {"b": 1, "c": 2}, "d": 3}
    out = merge(base, {"a": {"b": 9}})
    assert out == {"a": {"b": 9, "c": 2}, "d": 3}
    assert base["a"]["b"] == 1


def test_load_toml_and_json(tmp_path):
    t = tmp_path / "cfg.toml"
    t.write_text('scenario = "marco_track"\n[gains]\nkp = 0.4\n')
    j = tmp_path / "cfg.json"
    j.write_text(json.dumps({"gains": {"kp": 0.4}}))
    assert load_config(t)["gains"]["kp"] == 0.4
    assert load_config(j) == {"gains": {"kp": 0.4}}
    bad = tmp_path / "bad.toml"
    bad.write_text("gains = [\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")


def test_overrides_reach_resolved_parameters():
    p = SimConfig("marco_track", overrides={"gains": {"kp": 0.4}}, seed=9).resolve()
    assert p["gains"] == {"kp": 0.4, "kd": 0.3}
    assert p["seed"] == 9
    assert p["body"]["mass"] == 13.5


@pytest.mark.parametrize("gains", [{"kp": -1.0}, {"kd": 0.0}])
def test_invalid_gains_rejected_before_simulation(gains):
    from dqtrack.sim import run_scenario
    with pytest.raises(Exception) as exc:
        run_scenario(SimConfig("marco_track", n=1, t_final=0.1, overrides={"gains": gains}))
    assert exc.type.__name__ in {"ConfigError", "DomainError"}
