# tests/test_config.py
"""
backend.config.settings の環境変数パース、RunConfig の検証、load_run_config の上書き順のテスト
"""
from pathlib import Path

import pytest
from pydantic import ValidationError

from backend.config.settings import RunConfig, Settings, get_settings, load_run_config
from common.exceptions import ConfigError, UnknownFamilyError


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ("WVN_OUT_DIR", "WVN_LOG_LEVEL", "WVN_JSON_LOGS", "WVN_EXACT_NET_BUDGET"):
        monkeypatch.delenv(key, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


# --- Settings ---
def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("WVN_OUT_DIR", "/tmp/wvn")
    monkeypatch.setenv("WVN_EXACT_NET_BUDGET", "12")
    monkeypatch.setenv("WVN_JSON_LOGS", "true")
    settings = Settings()
    assert settings.out_dir == Path("/tmp/wvn")
    assert settings.exact_net_budget == 12
    assert settings.json_logs


def test_settings_reject_bad_budget(monkeypatch):
    monkeypatch.setenv("WVN_EXACT_NET_BUDGET", "0")
    with pytest.raises(ValidationError):
        Settings()


def test_get_settings_is_cached():
    assert get_settings() is get_settings()


# --- RunConfig ---
def test_defaults_are_resolved():
    resolved = RunConfig().resolved()
    assert resolved["family"]["kind"] == "grid_balls"
    assert resolved["truncations"] == [3, 7, 19]
    assert resolved["out_dir"] == "out"


def test_unknown_keys_are_rejected():
    with pytest.raises(ValidationError):
        RunConfig(frobnicate=1)


def test_truncation_must_cover_depth():
    with pytest.raises(ValidationError):
        RunConfig(depth=5, truncations=(3, 7))


# --- load_run_config ---
def test_toml_then_flags(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('seed = 4\ndepth = 2\nmode = "complex"\n[family]\nkind = "star_family"\nn_list = [2]\n')
    cfg = load_run_config(path, {"seed": 11, "depth": None}, settings=Settings())
    assert cfg.seed == 11
    assert cfg.depth == 2
    assert cfg.mode == "complex"
    assert cfg.family.kind == "star_family"


def test_environment_out_dir_only_without_flag(tmp_path):
    settings = Settings(WVN_OUT_DIR=str(tmp_path / "env"))
    assert load_run_config(None, {}, settings=settings).out_dir == tmp_path / "env"
    flagged = load_run_config(None, {"out_dir": str(tmp_path / "flag")}, settings=settings)
    assert flagged.out_dir == tmp_path / "flag"


def test_errors_are_input_errors(tmp_path):
    with pytest.raises(ConfigError) as exc:
        load_run_config(None, {"depth": 0}, settings=Settings())
    assert exc.value.input_error
    assert any("depth" in e for e in exc.value.fields["errors"])
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "absent.toml", settings=Settings())
    with pytest.raises(UnknownFamilyError):
        load_run_config(None, {"family": {"kind": "hyperbolic_plane"}}, settings=Settings())
