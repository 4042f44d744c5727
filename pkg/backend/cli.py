# backend/cli.py
"""
コマンドラインエントリポイント
────────────────────────────────────────────
    python -m backend <gen|nets|hierarchy|certify|uniform> [options]

終了コード
  0 … 全チェック合格
  1 … 証明書違反あり (レポートは出力済み)
  2 … 入力 / 設定エラー
"""
from __future__ import annotations

import argparse
from typing import Any, Callable, Sequence

import structlog

from backend.config.settings import RunConfig, get_settings, load_run_config
from backend.services import pipeline_service
from common.exceptions import WvnError
from common.logging_setup import setup_logging

logger = structlog.get_logger(__name__)

COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "gen": pipeline_service.run_gen,
    "nets": pipeline_service.run_nets,
    "hierarchy": pipeline_service.run_hierarchy,
    "certify": pipeline_service.run_certify,
    "uniform": pipeline_service.run_uniform,
}


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers: {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("at least one truncation level is required")
    return values


class _Parser(argparse.ArgumentParser):
    """argparse の既定 (SystemExit(2)) を例外に置き換え、main() で終了コードを決める。"""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise WvnError("invalid command line", reason=message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML 設定ファイル")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", metavar="DIR", dest="out_dir")
    common.add_argument("--depth", type=int)
    common.add_argument("--truncation", type=_int_list, dest="truncations", metavar="N1,N2,...")
    common.add_argument("--mode", choices=("real", "complex"))
    common.add_argument("--inject-defect", action="store_true", default=None, dest="inject_defect")

    parser = _Parser(prog="wvn", description="Quantified covering isometries on finite metric spaces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("gen", parents=[common], help="空間族を生成")
    sub.add_parser("nets", parents=[common], help="ε-net と admissibility プロファイル")
    sub.add_parser("hierarchy", parents=[common], help="分割階層と S_k")
    sub.add_parser("certify", parents=[common], help="打ち切りスイープ付きランク証明書")
    sub.add_parser("uniform", parents=[common], help="一様被覆の証明書")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    settings = get_settings()
    setup_logging(settings.log_level, json_logs=settings.json_logs)
    try:
        args = build_parser().parse_args(argv)
        overrides: dict[str, Any] = {
            key: getattr(args, key)
            for key in ("seed", "out_dir", "depth", "truncations", "mode", "inject_defect")
        }
        cfg = load_run_config(args.config, overrides, settings=settings)
        logger.info("run started", command=args.command, out_dir=str(cfg.out_dir))
        code = COMMANDS[args.command](cfg)
    except WvnError as exc:
        if not exc.input_error:
            raise
        logger.error("input error", error=str(exc))
        return pipeline_service.EXIT_INPUT
    except OSError as exc:
        logger.error("file system error", error=str(exc))
        return pipeline_service.EXIT_INPUT
    logger.info("run finished", command=args.command, exit_code=code)
    return code
