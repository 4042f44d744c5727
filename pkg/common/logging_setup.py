# common/logging_setup.py
"""
ロギング初期化ユーティリティ。

- 標準 logging は stderr へ出力 (レポートファイル / stdout の CSV を汚さない)
- structlog は stdlib LoggerFactory 経由で同じハンドラに流す
- json_logs=True で JSONRenderer、False なら ConsoleRenderer
"""
from __future__ import annotations

import logging
import sys

import structlog


def setup_logging(level: str = "INFO", *, json_logs: bool = False) -> None:
    """
    ルートロガーと structlog をまとめて設定する。
    何度呼んでも同じ状態になる (CLI のサブコマンドごとに呼ばれるため)。
    """
    numeric = getattr(logging, level.upper(), logging.INFO)

    # ルートロガー設定
    logging.basicConfig(
        level=numeric,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )

    renderer = (
        structlog.processors.JSONRenderer()
        if json_logs
        else structlog.dev.ConsoleRenderer(colors=False)
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            renderer,
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )
