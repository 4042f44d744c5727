"""
backend/config/settings.py
────────────────────────────────────────────────────────────────────────────
実行設定の読み込み・バリデーションを担うモジュール。
- **Settings (BaseSettings)** : 環境変数 (`WVN_*`) と `.env` から実行環境を取り込む
- **RunConfig (BaseModel)**   : 1 回のバッチ実行の全パラメータ。既定値はすべて明示し、
                                `resolved()` の辞書を出力ファイルのヘッダに埋め込む
- **load_run_config**         : TOML 設定ファイル → CLI フラグで上書き → WVN_OUT_DIR
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Any, Literal, Mapping, Optional

import toml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from common.exceptions import ConfigError
from engines.metric_core.generators import parse_family_spec
from engines.metric_core.models import FamilySpec, GridBallsSpec


class Settings(BaseSettings):
    # ────────────────────────── 出力 / ログ ───────────────────────────────────
    out_dir: Optional[Path] = Field(None, alias="WVN_OUT_DIR")
    log_level: str = Field("INFO", alias="WVN_LOG_LEVEL")
    json_logs: bool = Field(False, alias="WVN_JSON_LOGS")

    # ────────────────────────── 計算上限 ─────────────────────────────────────
    exact_net_budget: int = Field(20, alias="WVN_EXACT_NET_BUDGET", ge=1)

    # ────────────────────────── Pydantic の設定 ─────────────────────────────
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8-sig",
        case_sensitive=False,
        extra="ignore",
    )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """プロセス全体で共有する Settings。テストでは get_settings.cache_clear() で読み直す。"""
    return Settings()


class RunConfig(BaseModel):
    """1 回の実行の全パラメータ。未知のキーはエラーにする (設定ミスを黙って通さない)。"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # ────────────────────────── 空間族 ──────────────────────────────────────
    family: FamilySpec = Field(default_factory=lambda: GridBallsSpec(radius=4, count=5, min_radius=2))
    seed: int = 0
    eps_list: tuple[float, ...] = (0.5, 1.0, 2.0)
    net_method: Literal["exact", "greedy"] = "greedy"

    # ────────────────────────── スケジュール ──────────────────────────────────
    depth: int = Field(3, ge=1)
    lipschitz_step: float = Field(1.0, gt=0, description="L_k = lipschitz_step·k")
    eps_base: float = Field(0.5, gt=0, lt=1, description="ε_k = eps_base^k")
    mode: Literal["real", "complex"] = "real"

    # ────────────────────────── 表現 / 証明書 ─────────────────────────────────
    truncations: tuple[int, ...] = (3, 7, 19)
    rho_multiplicity: int = Field(3, ge=1)
    rho_random: bool = False
    samples: int = Field(200, ge=0)
    defect_trials: int = Field(50, ge=0)
    inject_defect: bool = False

    # ────────────────────────── 一様被覆 ────────────────────────────────────
    ambient_side: int = Field(12, ge=1)
    target_diam: float = Field(2.0, gt=0)
    uniform_eps: tuple[float, ...] = (0.5, 1.0)
    uniform_radii: tuple[float, ...] = (2.0, 4.0)
    uniform_lipschitz: tuple[float, ...] = (0.5, 1.0)
    uniform_samples: int = Field(100, ge=0)

    # ────────────────────────── 出力 ───────────────────────────────────────
    out_dir: Path = Path("out")

    @field_validator("eps_list", "uniform_eps", "uniform_radii")
    @classmethod
    def _positive(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value or any(v <= 0 for v in value):
            raise ValueError("entries must be positive and the list non-empty")
        return value

    @field_validator("uniform_lipschitz")
    @classmethod
    def _non_negative(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value or any(v < 0 for v in value):
            raise ValueError("entries must be non-negative and the list non-empty")
        return value

    @model_validator(mode="after")
    def _truncations_cover_depth(self) -> "RunConfig":
        if not self.truncations:
            raise ValueError("at least one truncation level is required")
        short = [t for t in self.truncations if t < self.depth]
        if short:
            raise ValueError(f"truncation levels {short} are below depth {self.depth}")
        return self

    def resolved(self) -> dict[str, Any]:
        """既定値を含む全フィールドの JSON 互換辞書 (出力ヘッダ用)。"""
        return self.model_dump(mode="json")


def _read_toml(path: str | Path) -> dict[str, Any]:
    try:
        return dict(toml.load(str(path)))
    except FileNotFoundError as exc:
        raise ConfigError("config file not found", path=str(path)) from exc
    except toml.TomlDecodeError as exc:
        raise ConfigError("config file is not valid TOML", path=str(path), reason=str(exc)) from exc
    except OSError as exc:
        raise ConfigError("config file unreadable", path=str(path), reason=str(exc)) from exc


def load_run_config(
    path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
    *,
    settings: Settings | None = None,
) -> RunConfig:
    """
    TOML → CLI フラグ (None 以外が勝つ) → WVN_OUT_DIR (--out 未指定時のみ) の順に重ねて検証する。
    family の kind が不明なら UnknownFamilyError、それ以外の検証失敗は ConfigError。
    """
    data: dict[str, Any] = _read_toml(path) if path else {}
    flags = {k: v for k, v in (overrides or {}).items() if v is not None}
    data.update(flags)

    settings = settings or get_settings()
    if "out_dir" not in flags and settings.out_dir is not None:
        data["out_dir"] = str(settings.out_dir)

    if isinstance(data.get("family"), Mapping):
        data["family"] = parse_family_spec(data["family"])
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(
            "invalid run configuration",
            errors=[f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors()],
        ) from exc
