# engines/partitions/models.py

"""
engines.partitions.models
────────────────────────────────────────────────────────────────────────────
Borel 分割と入れ子階層のモデル定義
  • Partition          : 点 → セル番号、セル中心、半径上界
  • ScheduleLevel      : 1 レベル分の (L_k, ε_k, ε1_k, K_k)
  • Schedule           : レベル列 + 量子化モード
  • PartitionHierarchy : レベルごとの Partition、カット点 I_k、射影の平坦リスト
"""
from __future__ import annotations

import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from engines.function_nets.params import grid_constant, quantization_params
from engines.metric_core.models import FiniteMetricSpace


class Partition(BaseModel):
    model_config = ConfigDict(frozen=True)

    cell_of: tuple[int, ...] = Field(..., description="点番号 → セル番号")
    centers: tuple[int, ...] = Field(..., description="セル番号 → 中心の点番号")
    radius_bound: float = Field(..., gt=0)

    @model_validator(mode="after")
    def _check_cells(self) -> "Partition":
        used = set(self.cell_of)
        if used != set(range(len(self.centers))):
            raise ValueError("every cell must be non-empty and cell ids contiguous")
        for cid, center in enumerate(self.centers):
            if self.cell_of[center] != cid:
                raise ValueError(f"center {center} lies outside its cell {cid}")
        return self

    @property
    def n_cells(self) -> int:
        return len(self.centers)

    def cells(self) -> tuple[tuple[int, ...], ...]:
        members: list[list[int]] = [[] for _ in self.centers]
        for p, cid in enumerate(self.cell_of):
            members[cid].append(p)
        return tuple(tuple(m) for m in members)

    def indicator(self, cell: int) -> np.ndarray:
        return (np.asarray(self.cell_of) == cell).astype(float)

    def certify(self, space: FiniteMetricSpace) -> bool:
        """半径上界を dist から直接確認する。"""
        if len(self.cell_of) != space.size:
            return False
        return all(
            space.dist[p, self.centers[cid]] <= self.radius_bound
            for p, cid in enumerate(self.cell_of)
        )


class ScheduleLevel(BaseModel):
    model_config = ConfigDict(frozen=True)

    lipschitz: float = Field(..., ge=0, description="L_k")
    eps: float = Field(..., gt=0, description="ε_k")
    eps1: float = Field(..., gt=0, description="ε1_k (セル半径上界、+inf 可)")
    K: int = Field(..., ge=1)


class Schedule(BaseModel):
    """
    L_k 狭義増加・ε_k 狭義減少・c/K_k + L_k·ε1_k < ε_k をすべて検証する。
    """

    model_config = ConfigDict(frozen=True)

    levels: tuple[ScheduleLevel, ...] = Field(..., min_length=1)
    mode: Literal["real", "complex"] = "real"

    @model_validator(mode="after")
    def _check_levels(self) -> "Schedule":
        c = grid_constant(self.mode)
        for prev, cur in zip(self.levels, self.levels[1:]):
            if not cur.lipschitz > prev.lipschitz:
                raise ValueError("L_k must be strictly increasing")
            if not cur.eps < prev.eps:
                raise ValueError("eps_k must be strictly decreasing")
        for k, level in enumerate(self.levels, start=1):
            lip_term = level.lipschitz * level.eps1 if level.lipschitz > 0 else 0.0
            if not c / level.K + lip_term < level.eps:
                raise ValueError(f"level {k}: c/K + L*eps1 must stay below eps")
        return self

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, k: int) -> ScheduleLevel:
        """1 始まりのレベル番号で参照する。"""
        if not 1 <= k <= self.depth:
            raise IndexError(k)
        return self.levels[k - 1]


def default_schedule(
    depth: int,
    mode: Literal["real", "complex"] = "real",
    *,
    lipschitz_step: float = 1.0,
    eps_base: float = 0.5,
) -> Schedule:
    """L_k = lipschitz_step·k, ε_k = eps_base^k, (ε1_k, K_k) は max(L_k, 1) で決める。"""
    if depth < 1:
        raise ValueError("depth must be positive")
    levels = []
    for k in range(1, depth + 1):
        lip = lipschitz_step * k
        eps = eps_base ** k
        eps1, K = quantization_params(max(lip, 1.0), eps, mode)
        levels.append(ScheduleLevel(lipschitz=lip, eps=eps, eps1=eps1, K=K))
    return Schedule(levels=tuple(levels), mode=mode)


class PartitionHierarchy(BaseModel):
    """
    入れ子の分割列。projections[j] = (level, cell) は P_{j+1} に対応し、
    位置 I_{k-1} … I_k - 1 が block R_k を列挙する。
    """

    model_config = ConfigDict(frozen=True)

    space_name: str
    levels: tuple[Partition, ...] = Field(..., min_length=1)
    cut_points: tuple[int, ...]
    projections: tuple[tuple[int, int], ...]
    parents: tuple[tuple[int, ...], ...] = Field(
        ..., description="parents[k-1][c] = レベル k+1 のセル c を含むレベル k のセル"
    )
    schedule: Schedule

    @model_validator(mode="after")
    def _check_cuts(self) -> "PartitionHierarchy":
        if len(self.levels) != self.schedule.depth:
            raise ValueError("one partition per schedule level is required")
        expected = [0]
        for part in self.levels:
            expected.append(expected[-1] + part.n_cells)
        if list(self.cut_points) != expected:
            raise ValueError("cut points disagree with level cell counts")
        if len(self.projections) != self.cut_points[-1]:
            raise ValueError("projection list length must equal I_depth")
        return self

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, k: int) -> Partition:
        return self.levels[k - 1]

    def block(self, k: int) -> tuple[tuple[int, int], ...]:
        """R_k を (level, cell) の列で返す。"""
        return self.projections[self.cut_points[k - 1]:self.cut_points[k]]

    def parent_of(self, level: int, cell: int) -> int:
        """レベル level (≥ 2) のセルを含むレベル level-1 のセル番号。"""
        if not 2 <= level <= self.depth:
            raise IndexError(level)
        return self.parents[level - 2][cell]

    def children_of(self, level: int, cell: int) -> tuple[int, ...]:
        """レベル level のセルに含まれるレベル level+1 のセル番号 (昇順)。"""
        if not 1 <= level < self.depth:
            raise IndexError(level)
        return tuple(c for c, p in enumerate(self.parents[level - 1]) if p == cell)

    def radius_ok(self, space: FiniteMetricSpace) -> bool:
        """各レベルの半径上界を検証し、それが ε1_k 以下であることも確認する。"""
        for k, part in enumerate(self.levels, start=1):
            eps1 = self.schedule.level(k).eps1
            if not part.certify(space):
                return False
            if math.isfinite(eps1) and part.radius_bound > eps1:
                return False
        return True
