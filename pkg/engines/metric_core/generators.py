# engines/metric_core/generators.py

"""
engines.metric_core.generators
────────────────────────────────────────────────────────────────────────────
テスト用空間族の生成器。すべてグラフ最短路距離を持ち、(spec, seed) に対して決定的。

  grid_balls            … ℤ² の閉 R 球 (均質なので全て等長、admissible)
  bounded_degree_trees  … 次数・深さ有界のランダム木
  star_family           … 中心 + n 本の辺 (n とともに net サイズが増える非 admissible 例)
  rips_sample           … 有限生成群 (Z, Z2, Z3, free2) の語距離の R 球
  from_file             … 空間ファイル
  path_graph / grid_graph … 一様被覆パイプライン用のアンビエント空間
"""
from __future__ import annotations

from collections import deque
from typing import Any, Callable, Hashable, Mapping

import networkx as nx
import numpy as np
import structlog
from pydantic import TypeAdapter, ValidationError

from common.exceptions import ConfigError, UnknownFamilyError
from common.utils import derive_rng
from .io import load_family_file
from .models import (
    FamilySpec,
    FileSpec,
    FiniteMetricSpace,
    GridBallsSpec,
    RipsSpec,
    SpaceFamily,
    StarSpec,
    TreesSpec,
)
from .services import validate_metric

logger = structlog.get_logger(__name__)

_FAMILY_ADAPTER: TypeAdapter = TypeAdapter(FamilySpec)
FAMILY_KINDS = (
    "grid_balls",
    "bounded_degree_trees",
    "star_family",
    "rips_sample",
    "from_file",
    "path_graph",
    "grid_graph",
)


def graph_space(graph: nx.Graph, order: list[Hashable], name: str, label: Callable[[Any], str] = str) -> FiniteMetricSpace:
    """重み付きグラフの最短路距離を order の点順で FiniteMetricSpace にする。"""
    matrix = nx.floyd_warshall_numpy(graph, nodelist=order, weight="weight")
    return validate_metric(np.asarray(matrix, dtype=float), [label(v) for v in order], name=name)


# ────────────────────────────────────────────
# 個別生成器
# ────────────────────────────────────────────
def grid_ball(center: tuple[int, int], radius: int, name: str) -> FiniteMetricSpace:
    cx, cy = center
    window = nx.grid_2d_graph(range(cx - radius, cx + radius + 1), range(cy - radius, cy + radius + 1))
    ball = nx.ego_graph(window, center, radius=radius)
    # 相対座標順に並べる → 平行移動した球は同じ距離行列になる
    order = sorted(ball.nodes, key=lambda v: (v[0] - cx, v[1] - cy))
    return graph_space(ball, order, name, label=lambda v: f"{v[0]},{v[1]}")


def _grid_balls(spec: GridBallsSpec, seed: int) -> SpaceFamily:
    rng = derive_rng(seed, "grid_balls")
    spaces = []
    for idx in range(spec.count):
        center = (int(rng.integers(-1000, 1001)), int(rng.integers(-1000, 1001)))
        radius = spec.radius
        if spec.min_radius is not None:
            radius = int(rng.integers(min(spec.min_radius, spec.radius), spec.radius + 1))
        spaces.append(grid_ball(center, radius, name=f"ball{idx}"))
    return SpaceFamily(spaces=tuple(spaces), family_kind="grid_balls")


def _trees(spec: TreesSpec, seed: int) -> SpaceFamily:
    rng = derive_rng(seed, "bounded_degree_trees")
    spaces = []
    for idx in range(spec.count):
        tree = nx.Graph()
        tree.add_node(0)
        frontier = [0]
        for level in range(spec.depth):
            nxt = []
            for node in frontier:
                # 根は degree 本まで、それ以外は親への辺を除いた degree-1 本まで
                cap = spec.degree if node == 0 else spec.degree - 1
                low = 1 if (node == 0 and level == 0) else 0
                for _ in range(int(rng.integers(low, cap + 1)) if cap >= low else 0):
                    child = tree.number_of_nodes()
                    tree.add_edge(node, child, weight=1.0)
                    nxt.append(child)
            frontier = nxt
            if not frontier:
                break
        spaces.append(graph_space(tree, sorted(tree.nodes), name=f"tree{idx}"))
    return SpaceFamily(spaces=tuple(spaces), family_kind="bounded_degree_trees")


def star_space(n: int, subdivision: int = 1) -> FiniteMetricSpace:
    """中心 c と n 本の長さ 1 の辺。各辺は subdivision 個の区間に分割する。"""
    star = nx.Graph()
    star.add_node("c")
    order: list[str] = ["c"]
    step = 1.0 / subdivision
    for edge in range(1, n + 1):
        prev = "c"
        for t in range(1, subdivision + 1):
            node = f"e{edge}.{t}"
            star.add_edge(prev, node, weight=step)
            order.append(node)
            prev = node
    return graph_space(star, order, name=f"star{n}")


def _stars(spec: StarSpec, seed: int) -> SpaceFamily:
    del seed  # 構成は決定的
    spaces = tuple(star_space(n, spec.subdivision) for n in spec.n_list)
    return SpaceFamily(spaces=spaces, family_kind="star_family")


# 群プリセット: (単位元, 生成元リスト, 積 g·s)
def _abelian(dim: int):
    gens = []
    for axis in range(dim):
        for sign in (1, -1):
            vec = [0] * dim
            vec[axis] = sign
            gens.append(tuple(vec))
    identity = tuple([0] * dim)
    return identity, gens, lambda g, s: tuple(a + b for a, b in zip(g, s))


def _free2():
    inverse = {"a": "A", "A": "a", "b": "B", "B": "b"}

    def mul(word: str, letter: str) -> str:
        if word and word[-1] == inverse[letter]:
            return word[:-1]
        return word + letter

    return "", ["a", "A", "b", "B"], mul


_GROUPS = {
    "Z": lambda: _abelian(1),
    "Z2": lambda: _abelian(2),
    "Z3": lambda: _abelian(3),
    "free2": _free2,
}


def cayley_ball(group: str, center: Any, radius: int, name: str) -> FiniteMetricSpace:
    _, gens, mul = _GROUPS[group]()
    seen = {center: 0}
    order = [center]
    queue = deque([center])
    graph = nx.Graph()
    graph.add_node(center)
    while queue:
        g = queue.popleft()
        if seen[g] == radius:
            continue
        for s in gens:
            h = mul(g, s)
            if h not in seen:
                seen[h] = seen[g] + 1
                order.append(h)
                queue.append(h)
    members = set(order)
    for g in order:
        for s in gens:
            h = mul(g, s)
            if h in members:
                graph.add_edge(g, h, weight=1.0)
    label = (lambda v: v or "e") if group == "free2" else (lambda v: ",".join(map(str, v)))
    return graph_space(graph, order, name, label=label)


def _rips(spec: RipsSpec, seed: int) -> SpaceFamily:
    rng = derive_rng(seed, "rips_sample", spec.group)
    identity, gens, mul = _GROUPS[spec.group]()
    spaces = []
    for idx in range(spec.count):
        center = identity
        for _ in range(int(rng.integers(0, 6))):
            center = mul(center, gens[int(rng.integers(0, len(gens)))])
        spaces.append(cayley_ball(spec.group, center, spec.radius, name=f"{spec.group}_ball{idx}"))
    return SpaceFamily(spaces=tuple(spaces), family_kind="rips_sample")


def path_space(n: int) -> FiniteMetricSpace:
    return graph_space(nx.path_graph(n), list(range(n)), name=f"path{n}")


def grid_space(side: int) -> FiniteMetricSpace:
    grid = nx.grid_2d_graph(side, side)
    return graph_space(grid, sorted(grid.nodes), name=f"grid{side}", label=lambda v: f"{v[0]},{v[1]}")


def _from_file(spec: FileSpec, seed: int) -> SpaceFamily:
    del seed
    return load_family_file(spec.path)


_BUILDERS: Mapping[str, Callable[[Any, int], SpaceFamily]] = {
    "grid_balls": _grid_balls,
    "bounded_degree_trees": _trees,
    "star_family": _stars,
    "rips_sample": _rips,
    "from_file": _from_file,
    "path_graph": lambda spec, seed: SpaceFamily(spaces=(path_space(spec.n),), family_kind="path_graph"),
    "grid_graph": lambda spec, seed: SpaceFamily(spaces=(grid_space(spec.side),), family_kind="grid_graph"),
}


# ────────────────────────────────────────────
# エントリーポイント
# ────────────────────────────────────────────
def parse_family_spec(spec: Any) -> Any:
    """dict / モデルを FamilySpec に正規化する。kind 不明は UnknownFamilyError。"""
    if isinstance(spec, Mapping):
        kind = spec.get("kind")
        if kind not in FAMILY_KINDS:
            raise UnknownFamilyError(str(kind))
        try:
            return _FAMILY_ADAPTER.validate_python(dict(spec))
        except ValidationError as exc:
            raise ConfigError("invalid family descriptor", kind=kind, errors=exc.errors()) from exc
    kind = getattr(spec, "kind", None)
    if kind not in FAMILY_KINDS:
        raise UnknownFamilyError(str(kind))
    return spec


def generate_family(spec: Any, seed: int = 0) -> SpaceFamily:
    """族記述子とシードから SpaceFamily を生成する (同じ入力なら同じ出力)。"""
    parsed = parse_family_spec(spec)
    family = _BUILDERS[parsed.kind](parsed, seed)
    logger.info(
        "family generated",
        kind=parsed.kind,
        seed=seed,
        spaces=len(family.spaces),
        sizes=[s.size for s in family.spaces],
    )
    return family
