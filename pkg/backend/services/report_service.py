# backend/services/report_service.py
"""
レポート出力サービス
────────────────────────────────────────────
* CSV  : 1 行目に `# config: {...}` (解決済み設定の 1 行 JSON)、2 行目が列名
* JSON : {"header": {...}, "report": {...}} をキー順固定で出力
* 数値は repr (最短往復表記) で書くので、同じ入力なら常にバイト単位で同一
"""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import structlog

from common.utils import canonical_json

logger = structlog.get_logger(__name__)


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if not math.isfinite(value):
            return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ";".join(_cell(v) for v in value)
    if value is None:
        return ""
    return str(value)


def make_header(command: str, config: Mapping[str, Any]) -> dict[str, Any]:
    return {"command": command, "config": dict(config)}


def write_csv(
    path: str | Path,
    header: Mapping[str, Any],
    columns: Sequence[str],
    rows: Iterable[Mapping[str, Any]],
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(f"# config: {canonical_json(header, indent=None)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    count = 0
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
        count += 1
    path.write_text(buf.getvalue(), encoding="utf-8")
    logger.info("csv written", path=str(path), rows=count)
    return path


def write_json(path: str | Path, header: Mapping[str, Any], report: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json({"header": header, "report": report}) + "\n", encoding="utf-8")
    logger.info("json report written", path=str(path))
    return path


def read_csv_rows(path: str | Path) -> list[dict[str, str]]:
    """ヘッダ行 (# config) を飛ばして CSV を辞書のリストで読む。"""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = [line for line in lines if not line.startswith("# ")]
    return list(csv.DictReader(body))
