# engines/operator_model/models.py

"""
engines.operator_model.models
────────────────────────────────────────────────────────────────────────────
  • RepresentationModel : 重複度 m(x) による C(X) の掛け算表現
                          (座標は点ごとに連続したスロット、点番号順)
  • EpsRankResult       : ε-rank と特異値 (降順)、任意で打ち切り SVD の近似子
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from engines.metric_core.models import FiniteMetricSpace

# 行列は素の ndarray で扱う (dense, complex128 または float64)
Operator = np.ndarray


class RepresentationModel(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: FiniteMetricSpace
    multiplicity: tuple[int, ...]

    @model_validator(mode="after")
    def _check_multiplicity(self) -> "RepresentationModel":
        if len(self.multiplicity) != self.space.size:
            raise ValueError("one multiplicity per point is required")
        if any(m < 1 for m in self.multiplicity):
            raise ValueError("multiplicities must be positive (injective representation)")
        return self

    @property
    def dim(self) -> int:
        return int(sum(self.multiplicity))

    @property
    def offsets(self) -> tuple[int, ...]:
        """offsets[x] = 点 x のスロット先頭座標。末尾に dim を持つ。"""
        acc = [0]
        for m in self.multiplicity:
            acc.append(acc[-1] + m)
        return tuple(acc)

    @property
    def is_uniform(self) -> bool:
        return len(set(self.multiplicity)) == 1

    def slot_index(self, point: int) -> range:
        off = self.offsets
        return range(off[point], off[point + 1])

    def coordinate_points(self) -> np.ndarray:
        """各座標が属する点番号。"""
        return np.repeat(np.arange(self.space.size), self.multiplicity)

    def slots_of(self, points: list[int] | tuple[int, ...]) -> np.ndarray:
        off = self.offsets
        return np.concatenate([np.arange(off[p], off[p + 1]) for p in points]) if points else np.zeros(0, dtype=int)

    def restrict(self, indices: list[int] | tuple[int, ...], name: str | None = None) -> "RepresentationModel":
        """部分空間への制限 π(P_i)H に対応する表現。"""
        return RepresentationModel(
            space=self.space.subspace(indices, name=name),
            multiplicity=tuple(self.multiplicity[i] for i in indices),
        )


class EpsRankResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    eps: float = Field(..., gt=0)
    rank: int = Field(..., ge=0)
    singular_values: tuple[float, ...]
    witness: Optional[np.ndarray] = Field(None, exclude=True, description="rank 本で打ち切った SVD")

    @model_validator(mode="after")
    def _rank_matches(self) -> "EpsRankResult":
        if self.rank != sum(1 for s in self.singular_values if s > self.eps):
            raise ValueError("rank must count singular values strictly above eps")
        return self

    def head(self, count: int = 5) -> tuple[float, ...]:
        return self.singular_values[:count]
