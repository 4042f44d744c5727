# engines/uniform_covering/models.py

"""
engines.uniform_covering.models
────────────────────────────────────────────────────────────────────────────
  • SpaceDecomposition         : アンビエント空間のセル分解 X = ∪ X_i
  • CoarseProfile              : 粗密な部分集合 Y と R 球内の Y の点数
  • UniformCoveringCertificate : (ε, R, L) 格子ごとの上界 M と実測ランク
"""
from __future__ import annotations

from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from engines.metric_core.models import FiniteMetricSpace, SpaceFamily


class SpaceDecomposition(BaseModel):
    model_config = ConfigDict(frozen=True)

    ambient: FiniteMetricSpace
    cells: tuple[tuple[int, ...], ...] = Field(..., description="セル i に属するアンビエント点番号 (昇順)")
    R0: float = Field(..., ge=0, description="max_i diam(X_i)")
    cell_family: SpaceFamily

    @model_validator(mode="after")
    def _check_cover(self) -> "SpaceDecomposition":
        seen = sorted(p for cell in self.cells for p in cell)
        if seen != list(range(self.ambient.size)):
            raise ValueError("cells must cover the ambient space disjointly")
        if any(not cell for cell in self.cells):
            raise ValueError("cells must be non-empty")
        if len(self.cell_family.spaces) != len(self.cells):
            raise ValueError("one cell space per cell is required")
        return self

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_of(self) -> tuple[int, ...]:
        out = [0] * self.ambient.size
        for cid, cell in enumerate(self.cells):
            for p in cell:
                out[p] = cid
        return tuple(out)


class CoarseProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    net: tuple[int, ...]
    net_radius: float = Field(..., gt=0)
    covering_radius: float = Field(..., ge=0)
    ball_counts: dict[float, int]

    @model_validator(mode="after")
    def _monotone(self) -> "CoarseProfile":
        ordered = [self.ball_counts[r] for r in sorted(self.ball_counts)]
        if any(a > b for a, b in zip(ordered, ordered[1:])):
            raise ValueError("ball counts must be non-decreasing in R")
        return self


class UniformSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    grid_index: int
    sample: int
    eps: float
    R: float
    lipschitz: float
    measured_lipschitz: float
    k: int
    tolerance: float
    rank: int
    bound: int
    c_R: int
    support_cells: int
    cell_bound_ok: bool = Field(..., description="台が 1 セルのとき単一空間の上界も満たすか")
    passed: bool


class GridPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    eps: float
    R: float
    lipschitz: float
    certified_lipschitz: float = Field(..., description="max(L, サンプルの実測定数)")
    k: int
    tolerance: float
    c_R: int
    per_cell_bound: int
    M: int
    samples: int
    max_rank: int
    passed: bool


class UniformCoveringCertificate(BaseModel):
    model_config = ConfigDict(frozen=True)

    truncation: int
    n_cells: int
    R0: float
    S: tuple[int, ...]
    grid: tuple[GridPoint, ...]
    samples: tuple[UniformSample, ...]
    locality_residual: float = Field(..., description="台の外側での欠損の最大絶対値")
    locality_ok: bool
    admissibility: dict[str, Any] = Field(default_factory=dict)
    admissibility_ok: bool = True
    isometry_defect: float = 0.0

    @property
    def all_passed(self) -> bool:
        return (
            all(g.passed for g in self.grid)
            and all(s.cell_bound_ok for s in self.samples)
            and self.locality_ok
            and self.admissibility_ok
        )

    def summary(self) -> dict[str, Any]:
        total = len(self.samples)
        failed = sum(1 for s in self.samples if not s.passed)
        return {
            "truncation": self.truncation,
            "cells": self.n_cells,
            "R0": self.R0,
            "S": list(self.S),
            "samples": total,
            "violations": failed,
            "pass_rate": (total - failed) / total if total else 1.0,
            "max_rank": max((s.rank for s in self.samples), default=0),
            "locality_residual": self.locality_residual,
            "locality_ok": self.locality_ok,
            "admissibility_ok": self.admissibility_ok,
            "isometry_defect": self.isometry_defect,
            "all_passed": self.all_passed,
        }
