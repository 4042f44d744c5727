# engines/metric_core/io.py

"""
engines.metric_core.io
────────────────────────────────────────────────────────────────────────────
空間ファイル (JSON) の読み書き。

* 1 空間:   {"name": ..., "points": [...], "dist": [[...], ...]}
             または "dist" の代わりに "edges": [[i, j, weight], ...]
             (edges の場合は重み付き最短路距離を計算する)
* 族:       {"family_kind": ..., "spaces": [<1 空間>, ...]}
* 距離は 17 有効桁の 10 進表記で書き出す (読み戻しでビット一致)。
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping, Optional

import networkx as nx
import numpy as np
import structlog
from pydantic import BaseModel, Field, ValidationError, model_validator

from common.exceptions import MetricValidationError, SpaceFileError
from common.utils import canonical_json, json_number_row
from .models import FiniteMetricSpace, SpaceFamily
from .services import validate_metric

logger = structlog.get_logger(__name__)


class SpaceDocument(BaseModel):
    """空間ファイル 1 件分のスキーマ。dist と edges はどちらか一方のみ。"""

    name: str = "X"
    points: list[str] = Field(..., min_length=1)
    dist: Optional[list[list[float]]] = None
    edges: Optional[list[tuple[int, int, float]]] = None

    @model_validator(mode="after")
    def _one_source(self) -> "SpaceDocument":
        if (self.dist is None) == (self.edges is None):
            raise ValueError("exactly one of 'dist' or 'edges' must be given")
        return self

    def to_matrix(self) -> np.ndarray:
        if self.dist is not None:
            return np.array(self.dist, dtype=float)
        graph = nx.Graph()
        graph.add_nodes_from(range(len(self.points)))
        for i, j, weight in self.edges or []:
            if not (0 <= i < len(self.points) and 0 <= j < len(self.points)):
                raise ValueError(f"edge ({i}, {j}) refers to an unknown point")
            graph.add_edge(i, j, weight=float(weight))
        # 非連結なら inf が残り、validate_metric が finite 違反として拒否する
        return np.asarray(
            nx.floyd_warshall_numpy(graph, nodelist=list(range(len(self.points))), weight="weight"),
            dtype=float,
        )


class FamilyDocument(BaseModel):
    family_kind: str = "from_file"
    spaces: list[SpaceDocument] = Field(..., min_length=1)


def _space_from_document(doc: SpaceDocument, path: str) -> FiniteMetricSpace:
    try:
        matrix = doc.to_matrix()
        return validate_metric(matrix, doc.points, name=doc.name)
    except MetricValidationError as exc:
        raise SpaceFileError(path, str(exc)) from exc
    except ValueError as exc:
        raise SpaceFileError(path, str(exc)) from exc


def load_family_file(path: str | Path) -> SpaceFamily:
    """1 空間ファイル・族ファイルのどちらも SpaceFamily として読む。"""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise SpaceFileError(str(path), "file not found") from exc
    except OSError as exc:
        raise SpaceFileError(str(path), exc.strerror or str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise SpaceFileError(str(path), f"invalid JSON: {exc}") from exc

    try:
        if isinstance(payload, dict) and "spaces" in payload:
            doc = FamilyDocument.model_validate(payload)
            kind, docs = doc.family_kind, doc.spaces
        else:
            kind, docs = "from_file", [SpaceDocument.model_validate(payload)]
    except ValidationError as exc:
        raise SpaceFileError(str(path), exc.errors()[0]["msg"]) from exc

    spaces = tuple(_space_from_document(d, str(path)) for d in docs)
    logger.info("space file loaded", path=str(path), spaces=len(spaces))
    return SpaceFamily(spaces=spaces, family_kind=kind)


def _space_text(space: FiniteMetricSpace, indent: str) -> str:
    rows = f",\n{indent}    ".join(json_number_row(row) for row in space.dist)
    return (
        f"{indent}{{\n"
        f"{indent}  \"name\": {json.dumps(space.name, ensure_ascii=False)},\n"
        f"{indent}  \"points\": {json.dumps(list(space.points), ensure_ascii=False)},\n"
        f"{indent}  \"dist\": [\n{indent}    {rows}\n{indent}  ]\n"
        f"{indent}}}"
    )


def save_space(space: FiniteMetricSpace, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_space_text(space, "") + "\n", encoding="utf-8")
    return path


def save_family(family: SpaceFamily, path: str | Path, header: Mapping[str, Any] | None = None) -> Path:
    """族ファイルを書く。header を渡すと先頭キーとして 1 行で埋め込む (読み込み時は無視)。"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = ",\n".join(_space_text(space, "    ") for space in family.spaces)
    head = f"  \"header\": {canonical_json(header, indent=None)},\n" if header is not None else ""
    text = (
        "{\n"
        f"{head}"
        f"  \"family_kind\": {json.dumps(family.family_kind)},\n"
        f"  \"spaces\": [\n{body}\n  ]\n"
        "}\n"
    )
    path.write_text(text, encoding="utf-8")
    logger.info("family saved", path=str(path), spaces=len(family.spaces))
    return path
