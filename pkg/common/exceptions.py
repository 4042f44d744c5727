# common/exceptions.py
# ─────────────────────────────────────────────────────────────
# 共通の例外クラスを集約するモジュール
# いずれか 1 つにまとめておくことで、CLI 層から一括ハンドリングできる。
#   • 入力起因 (設定 / ファイル / スケジュール) … exit code 2
#   • 構成の内部不変条件違反 (input_error = False) … CLI でも再送出
#   • 証明書違反は例外ではなくレポートに記録する
# ─────────────────────────────────────────────────────────────
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence


class WvnError(RuntimeError):
    """
    本パッケージが送出する全例外の基底クラス。

    * message … str() で人間可読メッセージ
    * fields  … 構造化ペイロード (ログ出力・テスト用)
    """

    #: CLI 層で入力エラー (exit code 2) として扱うか
    input_error: bool = True

    def __init__(self, message: str, **fields: Any) -> None:
        super().__init__(message)
        self.message = message
        self.fields: dict[str, Any] = fields

    def __str__(self) -> str:
        if not self.fields:
            return f"{self.__class__.__name__}({self.message})"
        body = ", ".join(f"{k}={v!r}" for k, v in self.fields.items())
        return f"{self.__class__.__name__}({self.message}: {body})"


# ────────────────────────────────────────────
# metric_core
# ────────────────────────────────────────────
@dataclass(frozen=True)
class MetricViolation:
    """距離公理違反 1 件分。axiom は違反種別、indices は証拠となる点番号。"""

    axiom: str
    indices: tuple[int, ...]
    detail: str = ""


class MetricValidationError(WvnError):
    """距離行列が有限距離空間の公理を満たさない。違反リストを全件保持する。"""

    def __init__(self, violations: Sequence[MetricViolation]) -> None:
        self.violations: list[MetricViolation] = list(violations)
        first = self.violations[0] if self.violations else None
        super().__init__(
            "metric axioms violated",
            count=len(self.violations),
            first=(first.axiom, first.indices) if first else None,
        )

    @property
    def axioms(self) -> set[str]:
        return {v.axiom for v in self.violations}


class NetBudgetExceededError(WvnError):
    """厳密 ε-net 探索の点数上限を超えた。"""

    def __init__(self, size: int, budget: int) -> None:
        super().__init__("exhaustive net budget exceeded", size=size, budget=budget)
        self.size = size
        self.budget = budget


class UnknownFamilyError(WvnError):
    def __init__(self, kind: str) -> None:
        super().__init__("unknown family descriptor", kind=kind)
        self.kind = kind


class SpaceFileError(WvnError):
    """空間ファイルの読み込み・構文エラー。"""

    def __init__(self, path: str, reason: str) -> None:
        super().__init__("malformed space file", path=path, reason=reason)
        self.path = path
        self.reason = reason


# ────────────────────────────────────────────
# partitions / wvn_isometry
# ────────────────────────────────────────────
class ScheduleError(WvnError):
    """スケジュール (L_k, ε_k, ε1_k, K_k) の不変条件違反。"""


class ScheduleExhaustedError(WvnError):
    """m_lookup で条件を満たすレベル k が存在しない。"""

    def __init__(self, lipschitz: float, eps: float, depth: int) -> None:
        super().__init__("schedule too shallow", L=lipschitz, eps=eps, depth=depth)


class SeedBasisError(WvnError):
    def __init__(self, defect: float) -> None:
        super().__init__("seed basis is not orthonormal", defect=defect)
        self.defect = defect


class InsufficientMultiplicityError(WvnError):
    """π の一様重複度が階層の深さに満たない (無限射影の有限版の前提違反)。"""

    input_error = False

    def __init__(self, multiplicity: int, depth: int) -> None:
        super().__init__("pi multiplicity below hierarchy depth", multiplicity=multiplicity, depth=depth)


class BlockWidthDeficitError(WvnError):
    """π 側ブロック幅が ρ 側ブロック幅に満たない (k, P) がある。"""

    input_error = False

    def __init__(self, key: tuple[int, int], rho_width: int, pi_width: int) -> None:
        super().__init__(
            "pi block narrower than rho block",
            key=key,
            rho_width=rho_width,
            pi_width=pi_width,
        )
        self.key = key
        self.rho_width = rho_width
        self.pi_width = pi_width


# ────────────────────────────────────────────
# operator_model
# ────────────────────────────────────────────
class DimensionMismatchError(WvnError):
    input_error = False

    def __init__(self, expected: tuple[int, ...], actual: tuple[int, ...]) -> None:
        super().__init__("operator dimensions do not conform", expected=expected, actual=actual)


class NotIsometryError(WvnError):
    input_error = False

    def __init__(self, defect: float, tolerance: float) -> None:
        super().__init__("V*V differs from the identity", defect=defect, tolerance=tolerance)
        self.defect = defect


# ────────────────────────────────────────────
# backend
# ────────────────────────────────────────────
class ConfigError(WvnError):
    """RunConfig / TOML 設定ファイルの検証エラー。"""
