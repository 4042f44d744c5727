# engines/metric_core/models.py

"""
engines.metric_core.models
────────────────────────────────────────────────────────────────────────────
有限距離空間まわりの Pydantic モデル定義
  • FiniteMetricSpace      : ラベル付き点集合 + 検証済み距離行列
  • EpsNet                 : ε-net (メンバーと割り当て)
  • SpaceFamily            : 空間の族
  • AdmissibilityProfile   : ε ごとの net サイズ上界 N(ε)
  • 族記述子 (grid_balls / bounded_degree_trees / star_family / rips_sample /
    from_file / path_graph / grid_graph)
"""
from __future__ import annotations

from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class FiniteMetricSpace(BaseModel):
    """
    コンパクト距離空間の有限サロゲート。
    距離公理の検証は services.validate_metric が担当し、ここでは形状のみ確認する。
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str = Field("X", description="空間識別子 (レポートの space id)")
    points: tuple[str, ...] = Field(..., description="点ラベル (順序が座標順)")
    dist: np.ndarray = Field(..., description="n×n 距離行列 (float64)")

    @model_validator(mode="after")
    def _freeze_matrix(self) -> "FiniteMetricSpace":
        if self.dist.ndim != 2 or self.dist.shape[0] != self.dist.shape[1]:
            raise ValueError(f"dist must be square, got shape {self.dist.shape}")
        if self.dist.shape[0] != len(self.points):
            raise ValueError("points and dist disagree in size")
        self.dist.setflags(write=False)
        return self

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def diameter(self) -> float:
        return float(self.dist.max()) if self.size else 0.0

    def subspace(self, indices: list[int] | tuple[int, ...], name: str | None = None) -> "FiniteMetricSpace":
        """誘導距離による部分空間 (閉部分空間は admissible 性を保つ)。"""
        idx = np.asarray(indices, dtype=int)
        sub = np.array(self.dist[np.ix_(idx, idx)], dtype=float)
        return FiniteMetricSpace(
            name=name or f"{self.name}[{len(idx)}]",
            points=tuple(self.points[i] for i in idx),
            dist=sub,
        )


class EpsNet(BaseModel):
    """
    ε-net。assignment[p] は点 p を覆うメンバーの点番号 (d ≤ ε, 閉球)。
    """

    model_config = ConfigDict(frozen=True)

    radius: float = Field(..., gt=0)
    members: tuple[int, ...]
    assignment: tuple[int, ...]
    method: Literal["exact", "greedy"] = "greedy"

    @property
    def size(self) -> int:
        return len(self.members)

    def certify(self, space: FiniteMetricSpace) -> bool:
        """全点が割り当て済みで、割り当て距離 ≤ ε を dist から直接確認する。"""
        if len(set(self.members)) != len(self.members):
            return False
        if len(self.assignment) != space.size:
            return False
        members = set(self.members)
        for p, m in enumerate(self.assignment):
            if m not in members or space.dist[p, m] > self.radius:
                return False
        return True


class SpaceFamily(BaseModel):
    model_config = ConfigDict(frozen=True)

    spaces: tuple[FiniteMetricSpace, ...] = Field(..., min_length=1)
    family_kind: str = "custom"


class AdmissibilityEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    eps: float = Field(..., gt=0)
    N: int = Field(..., ge=0)
    witness_method: Literal["exact", "greedy"]
    witnesses: tuple[EpsNet, ...] = ()


class AdmissibilityProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    family_kind: str
    entries: tuple[AdmissibilityEntry, ...]

    def n_of(self, eps: float) -> int:
        for entry in self.entries:
            if entry.eps == eps:
                return entry.N
        raise KeyError(eps)


# ────────────────────────────────────────────
# 族記述子 (generate_family の入力)
# ────────────────────────────────────────────
class GridBallsSpec(BaseModel):
    """ℤ² の閉 R 球 (グラフ距離)。min_radius 指定時は半径をシードで抽選する。"""

    kind: Literal["grid_balls"] = "grid_balls"
    radius: int = Field(2, ge=0)
    count: int = Field(3, ge=1)
    min_radius: int | None = Field(None, ge=0)


class TreesSpec(BaseModel):
    kind: Literal["bounded_degree_trees"] = "bounded_degree_trees"
    degree: int = Field(3, ge=1)
    depth: int = Field(3, ge=0)
    count: int = Field(3, ge=1)


class StarSpec(BaseModel):
    """中心 + n 本の辺。各辺を subdivision 分割 (辺長 1 は保つ)。"""

    kind: Literal["star_family"] = "star_family"
    n_list: tuple[int, ...] = (2, 4, 8)
    subdivision: int = Field(1, ge=1)


class RipsSpec(BaseModel):
    """有限生成群の Cayley グラフ (語距離) の R 球。群は均質なので全て等長。"""

    kind: Literal["rips_sample"] = "rips_sample"
    group: Literal["Z", "Z2", "Z3", "free2"] = "Z2"
    radius: int = Field(2, ge=0)
    count: int = Field(1, ge=1)


class FileSpec(BaseModel):
    kind: Literal["from_file"] = "from_file"
    path: str


class PathGraphSpec(BaseModel):
    kind: Literal["path_graph"] = "path_graph"
    n: int = Field(10, ge=1)


class GridGraphSpec(BaseModel):
    kind: Literal["grid_graph"] = "grid_graph"
    side: int = Field(12, ge=1)


FamilySpec = Annotated[
    Union[GridBallsSpec, TreesSpec, StarSpec, RipsSpec, FileSpec, PathGraphSpec, GridGraphSpec],
    Field(discriminator="kind"),
]
