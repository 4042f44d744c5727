# tests/test_cli.py
"""
backend.cli のサブコマンド実行・終了コード・出力ファイル (ヘッダ / 再現性) のテスト
"""
import json

import pytest

from backend import cli
from backend.cli import main
from backend.config.settings import get_settings
from backend.services.report_service import read_csv_rows
from common.exceptions import (
    BlockWidthDeficitError,
    ConfigError,
    InsufficientMultiplicityError,
    NotIsometryError,
    ScheduleExhaustedError,
)

SMALL = """
seed = 3
depth = 2
truncations = [2, 5]
samples = 4
defect_trials = 2
ambient_side = 3
uniform_eps = [1.0]
uniform_radii = [2.0]
uniform_lipschitz = [0.5]
uniform_samples = 3

[family]
kind = "star_family"
n_list = [2, 3]
"""


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    monkeypatch.delenv("WVN_OUT_DIR", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL, encoding="utf-8")
    return path


def run(*argv):
    return main([str(a) for a in argv])


# --- 正常系 ---
@pytest.mark.parametrize("command", ["gen", "nets", "hierarchy", "certify", "uniform"])
def test_small_config_exits_zero(tmp_path, small_config, command):
    out = tmp_path / "out"
    assert run(command, "--config", small_config, "--out", out) == 0
    assert any(out.iterdir())


def test_certify_writes_header_and_tables(tmp_path, small_config):
    out = tmp_path / "out"
    assert run("certify", "--config", small_config, "--out", out) == 0
    first = (out / "certification.csv").read_text(encoding="utf-8").splitlines()[0]
    assert first.startswith("# config: ")
    header = json.loads(first[len("# config: "):])
    assert header["command"] == "certify"
    assert header["config"]["truncations"] == [2, 5]
    assert header["config"]["eps_base"] == 0.5
    rows = read_csv_rows(out / "certification.csv")
    assert {r["truncation"] for r in rows} == {"2", "5"}
    assert all(r["pass"] == "true" for r in rows)
    report = json.loads((out / "certification.json").read_text(encoding="utf-8"))["report"]
    assert report["all_passed"] and report["truncation_consistent"]


def test_flags_override_config(tmp_path, small_config):
    out = tmp_path / "out"
    assert run("hierarchy", "--config", small_config, "--out", out, "--depth", "1", "--seed", "9") == 0
    payload = json.loads((out / "hierarchy.json").read_text(encoding="utf-8"))
    assert payload["header"]["config"]["depth"] == 1
    assert payload["header"]["config"]["seed"] == 9
    assert len(payload["report"]["S"]) == 1


def test_reruns_are_byte_identical(tmp_path, small_config):
    out = tmp_path / "out"
    names = ("certification.csv", "defect_checks.csv", "certification.json")
    assert run("certify", "--config", small_config, "--out", out) == 0
    before = {n: (out / n).read_bytes() for n in names}
    assert run("certify", "--config", small_config, "--out", out) == 0
    assert {n: (out / n).read_bytes() for n in names} == before


def test_complex_mode_flag(tmp_path, small_config):
    out = tmp_path / "out"
    assert run("certify", "--config", small_config, "--out", out, "--mode", "complex") == 0
    header = json.loads((out / "certification.json").read_text(encoding="utf-8"))["header"]
    assert header["config"]["mode"] == "complex"


def test_star_nets_grow(tmp_path):
    config = tmp_path / "stars.toml"
    config.write_text(
        'eps_list = [0.9]\nnet_method = "exact"\n[family]\nkind = "star_family"\nn_list = [2, 4, 8]\n',
        encoding="utf-8",
    )
    out = tmp_path / "out"
    assert run("nets", "--config", config, "--out", out) == 0
    (row,) = read_csv_rows(out / "nets.csv")
    assert row["N"] == "9"
    assert row["sizes"] == "3;5;9"


# --- 出力先 ---
def test_out_dir_from_environment(tmp_path, small_config, monkeypatch):
    target = tmp_path / "from_env"
    monkeypatch.setenv("WVN_OUT_DIR", str(target))
    get_settings.cache_clear()
    assert run("gen", "--config", small_config) == 0
    assert (target / "family.json").exists()


def test_out_flag_wins_over_environment(tmp_path, small_config, monkeypatch):
    monkeypatch.setenv("WVN_OUT_DIR", str(tmp_path / "from_env"))
    get_settings.cache_clear()
    assert run("gen", "--config", small_config, "--out", tmp_path / "flag") == 0
    assert (tmp_path / "flag" / "family.json").exists()
    assert not (tmp_path / "from_env").exists()


# --- 違反 / 入力エラー ---
def test_injected_defect_exits_one(tmp_path):
    config = tmp_path / "inject.toml"
    config.write_text(
        'depth = 1\nsamples = 2\ndefect_trials = 1\n[family]\nkind = "grid_balls"\nradius = 2\ncount = 1\n',
        encoding="utf-8",
    )
    out = tmp_path / "out"
    assert run("certify", "--config", config, "--out", out, "--truncation", "1,2", "--inject-defect") == 1
    report = json.loads((out / "certification.json").read_text(encoding="utf-8"))["report"]
    assert not report["all_passed"]
    assert report["violations"]


def test_missing_space_file_exits_two(tmp_path):
    config = tmp_path / "file.toml"
    config.write_text(f'[family]\nkind = "from_file"\npath = "{tmp_path / "nope.json"}"\n', encoding="utf-8")
    assert run("gen", "--config", config, "--out", tmp_path / "out") == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["certify", "--bogus"],
        ["certify", "--truncation", "a,b"],
        ["certify", "--mode", "quaternion"],
        ["explode"],
        [],
    ],
)
def test_bad_command_line_exits_two(tmp_path, argv):
    assert run(*argv, *(["--out", tmp_path] if argv else [])) == 2


@pytest.mark.parametrize(
    "content",
    [
        "frobnicate = 1\n",
        "depth = 0\n",
        "depth = 4\ntruncations = [3]\n",
        "[family]\nkind = \"hyperbolic_plane\"\n",
        "not toml at all = = =\n",
    ],
)
def test_bad_config_exits_two(tmp_path, content):
    config = tmp_path / "bad.toml"
    config.write_text(content, encoding="utf-8")
    assert run("gen", "--config", config, "--out", tmp_path / "out") == 2


def test_missing_config_file_exits_two(tmp_path):
    assert run("gen", "--config", tmp_path / "absent.toml") == 2


def test_internal_invariant_error_is_not_swallowed(tmp_path, small_config, monkeypatch):
    def broken(cfg):
        raise BlockWidthDeficitError((1, 0), 3, 2)

    monkeypatch.setitem(cli.COMMANDS, "gen", broken)
    with pytest.raises(BlockWidthDeficitError):
        run("gen", "--config", small_config, "--out", tmp_path / "out")


def test_input_error_flag_partitions_the_hierarchy():
    assert ConfigError("bad").input_error
    assert ScheduleExhaustedError(1.0, 0.5, 2).input_error
    assert not BlockWidthDeficitError((0, 0), 2, 1).input_error
    assert not InsufficientMultiplicityError(1, 2).input_error
    assert not NotIsometryError(1.0, 1e-9).input_error
