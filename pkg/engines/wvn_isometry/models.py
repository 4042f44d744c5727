# engines/wvn_isometry/models.py

"""
engines.wvn_isometry.models
────────────────────────────────────────────────────────────────────────────
  • DiagonalizingBasis   : ブロック (m, P) ごとの正規直交列
                           (0, P)  … P·E_1            (P ∈ R_1)
                           (m, P)  … P(E_{m+1} ⊖ E_m)  (1 ≤ m < depth, P ∈ R_m)
                           (depth, P) … P(H ⊖ E_depth) (P ∈ R_depth)
  • CoveringIsometry     : V と ρ ブロック → π 列の対応表
  • RankSchedule / RankLookup : M(L, ε) = 2kS_k の参照表
  • DefectCheckReport    : A_k の元に対する厳密な欠損ランク検査
  • CertificationRecord / CertificationReport : 関数ごとの ε-rank と上界
  • TruncationSweep      : 打ち切り重複度を変えたときの一致検査
"""
from __future__ import annotations

from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from engines.partitions.models import Schedule

BlockKey = tuple[int, int]


def label_level(key: BlockKey) -> int:
    """ブロック (m, P) の P が属する分割レベル。"""
    return max(key[0], 1)


class DiagonalizingBasis(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    side: Literal["rho", "pi"]
    depth: int = Field(..., ge=1)
    keys: tuple[BlockKey, ...]
    widths: tuple[int, ...]
    matrix: np.ndarray = Field(..., description="dim × dim、列はブロック順")
    e_dimensions: tuple[int, ...] = Field(..., description="dim E_k (k = 1..depth)")

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def starts(self) -> dict[BlockKey, int]:
        out, acc = {}, 0
        for key, width in zip(self.keys, self.widths):
            out[key] = acc
            acc += width
        return out

    def width_of(self, key: BlockKey) -> int:
        return dict(zip(self.keys, self.widths)).get(key, 0)

    def columns(self, key: BlockKey) -> np.ndarray:
        start = self.starts[key]
        return self.matrix[:, start:start + self.width_of(key)]

    def span_columns(self, below: int) -> np.ndarray:
        """m < below のブロック列 (= E_below の基底)。"""
        count = sum(w for (m, _), w in zip(self.keys, self.widths) if m < below)
        return self.matrix[:, :count]

    def complement_columns(self, below: int) -> np.ndarray:
        count = sum(w for (m, _), w in zip(self.keys, self.widths) if m < below)
        return self.matrix[:, count:]

    def orthonormality_defect(self) -> float:
        gram = self.matrix.conj().T @ self.matrix
        return float(np.max(np.abs(gram - np.eye(gram.shape[0])))) if gram.size else 0.0


class BlockAssignment(BaseModel):
    model_config = ConfigDict(frozen=True)

    key: BlockKey
    rho_columns: tuple[int, ...]
    pi_columns: tuple[int, ...]


class CoveringIsometry(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    V: np.ndarray = Field(..., description="dim H_π × dim H_ρ")
    block_map: tuple[BlockAssignment, ...]
    basis_rho: DiagonalizingBasis
    basis_pi: DiagonalizingBasis

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(self.V.shape)  # type: ignore[return-value]


class RankLookup(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    bound: int = Field(..., description="2·k·S_k")
    tight_bound: int = Field(..., description="k·S_k")
    tolerance: float = Field(..., description="2·ε_k")


class RankSchedule(BaseModel):
    model_config = ConfigDict(frozen=True)

    schedule: Schedule
    S: tuple[int, ...]

    def entry(self, k: int) -> RankLookup:
        s_k = self.S[k - 1]
        return RankLookup(
            k=k,
            bound=2 * k * s_k,
            tight_bound=k * s_k,
            tolerance=2.0 * self.schedule.level(k).eps,
        )


class DefectTrial(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: int
    rank: int
    support_residual: float
    passed: bool


class DefectCheckReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    space: str
    k: int
    dim_e: int = Field(..., description="dim E_k^ρ")
    bound: int = Field(..., description="k·S_k")
    trials: tuple[DefectTrial, ...]

    @property
    def violations(self) -> int:
        return sum(1 for t in self.trials if not t.passed)

    @property
    def max_rank(self) -> int:
        return max((t.rank for t in self.trials), default=0)


class CertificationRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    space: str
    k: int
    sample: int
    lipschitz: float
    eps: float
    tolerance: float
    rank: int
    tight_bound: int
    bound: int
    passed: bool
    sv_head: tuple[float, ...]
    quant_error: float
    quant_bound: float
    quant_ok: bool
    injected: bool = False


class CertificationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    truncation: int
    mode: Literal["real", "complex"]
    S: tuple[int, ...]
    records: tuple[CertificationRecord, ...]
    defect_checks: tuple[DefectCheckReport, ...] = ()
    isometry_defects: dict[str, float] = Field(default_factory=dict)

    @property
    def violations(self) -> list[CertificationRecord]:
        return [r for r in self.records if not r.passed]

    @property
    def all_passed(self) -> bool:
        return (
            not self.violations
            and all(r.quant_ok for r in self.records)
            and all(c.violations == 0 for c in self.defect_checks)
        )

    def summary(self) -> dict[str, Any]:
        total = len(self.records)
        ratios = [r.rank / r.tight_bound for r in self.records if r.tight_bound]
        return {
            "truncation": self.truncation,
            "records": total,
            "violations": len(self.violations),
            "pass_rate": (total - len(self.violations)) / total if total else 1.0,
            "max_rank": max((r.rank for r in self.records), default=0),
            "max_tight_ratio": max(ratios, default=0.0),
            "quantization": {
                "violations": sum(1 for r in self.records if not r.quant_ok),
                "max_error": max((r.quant_error for r in self.records), default=0.0),
                "max_bound": max((r.quant_bound for r in self.records), default=0.0),
            },
            "defect_checks": {
                "trials": sum(len(c.trials) for c in self.defect_checks),
                "violations": sum(c.violations for c in self.defect_checks),
            },
            "max_isometry_defect": max(self.isometry_defects.values(), default=0.0),
            "all_passed": self.all_passed,
        }


class TruncationSweep(BaseModel):
    model_config = ConfigDict(frozen=True)

    truncations: tuple[int, ...]
    reports: tuple[CertificationReport, ...]
    consistent: bool
    mismatches: tuple[str, ...] = ()

    @property
    def primary(self) -> Optional[CertificationReport]:
        return self.reports[0] if self.reports else None
