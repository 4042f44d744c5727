# common/utils.py
"""
共通ユーティリティモジュール

- derive_rng      : (seed, 任意のキー列) から決定的な numpy Generator を派生
- format_float17  : 17 有効桁での浮動小数表記 (ビット完全なシリアライズ用)
- canonical_json  : キー順固定の JSON 文字列 (レポート用)
- unit_disc       : 複素単位円板上の一様乱数
"""

from __future__ import annotations

import json
import math
from typing import Any, Hashable

import numpy as np
import structlog

logger = structlog.get_logger(__name__)


# ────────────────────────────────────────────
# 乱数
# ────────────────────────────────────────────
def derive_rng(seed: int, *keys: Hashable) -> np.random.Generator:
    """
    seed とキー列から独立なストリームを作る。

    並列実行・実行順序に依存せず同じ (seed, keys) なら同じ乱数列になるよう、
    SeedSequence のエントロピーにはキーの hash() ではなく文字列の
    バイト列由来の整数を使う (PYTHONHASHSEED の影響を受けない)。
    """
    entropy = [int(seed) & 0xFFFFFFFF]
    for key in keys:
        raw = str(key).encode("utf-8")
        entropy.append(int.from_bytes(raw[:8].ljust(8, b"\0"), "little") ^ len(raw))
        for start in range(8, len(raw), 8):
            entropy.append(int.from_bytes(raw[start:start + 8].ljust(8, b"\0"), "little"))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def unit_disc(rng: np.random.Generator, size: int) -> np.ndarray:
    """複素単位円板上の一様分布 (半径は sqrt で補正)。"""
    radius = np.sqrt(rng.uniform(0.0, 1.0, size))
    angle = rng.uniform(0.0, 2.0 * math.pi, size)
    return radius * np.exp(1j * angle)


# ────────────────────────────────────────────
# シリアライズ
# ────────────────────────────────────────────
def format_float17(value: float) -> str:
    """17 有効桁。整数値でも JSON 数値として読める表記を返す。"""
    if not math.isfinite(value):
        raise ValueError(f"non-finite value cannot be serialized: {value}")
    return format(float(value), ".17g")


def _default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def canonical_json(payload: Any, *, indent: int | None = 2) -> str:
    """
    キー順をソートした JSON 文字列。float は repr (最短往復表記) で出るので
    同一入力なら常にバイト単位で同一の出力になる。
    """
    return json.dumps(
        payload,
        default=_default,
        sort_keys=True,
        indent=indent,
        ensure_ascii=False,
        allow_nan=False,
    )


def json_number_row(values: Any) -> str:
    """数値列を 17 有効桁の JSON 配列テキストにする (空間ファイルの dist 行用)。"""
    return "[" + ", ".join(format_float17(float(v)) for v in values) + "]"
