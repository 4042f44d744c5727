# engines/partitions/services.py

"""
engines.partitions.services
────────────────────────────────────────────────────────────────────────────
  1) voronoi_partition  … net メンバーへの最近点割り当て (同距離は点番号の小さいメンバー)
  2) build_hierarchy    … レベル 1 は全体の net、レベル k+1 は各レベル k セル内の net で細分
  3) family_s_bounds    … S_k = max_X I_k
  4) hierarchy_to_dict  … CLI `hierarchy` 用のシリアライズ
"""
from __future__ import annotations

import math
from typing import Any, Iterable, Sequence

import numpy as np
import structlog

from engines.metric_core.models import EpsNet, FiniteMetricSpace, SpaceFamily
from engines.metric_core.services import DEFAULT_EXACT_BUDGET, NetMethod, compute_net
from .models import Partition, PartitionHierarchy, Schedule

logger = structlog.get_logger(__name__)


def voronoi_partition(space: FiniteMetricSpace, net: EpsNet) -> Partition:
    members = np.array(sorted(net.members), dtype=int)
    # argmin は最初の最小値を返す → 点番号の小さいメンバーが勝つ
    nearest = np.argmin(space.dist[:, members], axis=1)
    return Partition(
        cell_of=tuple(int(c) for c in nearest),
        centers=tuple(int(m) for m in members),
        radius_bound=net.radius,
    )


def _level_radius(space: FiniteMetricSpace, eps1: float) -> float:
    # ε1 = +inf はどの分割でもよい → 直径を超える半径で 1 セルにまとめる
    return eps1 if math.isfinite(eps1) else space.diameter + 1.0


def build_hierarchy(
    space: FiniteMetricSpace,
    schedule: Schedule,
    method: NetMethod = "greedy",
    *,
    budget: int = DEFAULT_EXACT_BUDGET,
) -> PartitionHierarchy:
    """
    入れ子の分割階層を作る。細分は親セルの誘導部分空間で net を取り直すので
    入れ子性は構成から成り立つ。セル番号は (親セル番号, 中心の点番号) 順。
    """
    radius = _level_radius(space, schedule.level(1).eps1)
    levels = [voronoi_partition(space, compute_net(space, radius, method, budget=budget))]
    parents: list[tuple[int, ...]] = []

    for k in range(2, schedule.depth + 1):
        radius = _level_radius(space, schedule.level(k).eps1)
        prev = levels[-1]
        cell_of = [-1] * space.size
        centers: list[int] = []
        parent_ids: list[int] = []
        for pid, members in enumerate(prev.cells()):
            sub = space.subspace(members, name=f"{space.name}/L{k - 1}C{pid}")
            local = voronoi_partition(sub, compute_net(sub, radius, method, budget=budget))
            base = len(centers)
            for local_p, local_c in enumerate(local.cell_of):
                cell_of[members[local_p]] = base + local_c
            centers.extend(members[c] for c in local.centers)
            parent_ids.extend([pid] * local.n_cells)
        levels.append(Partition(cell_of=tuple(cell_of), centers=tuple(centers), radius_bound=radius))
        parents.append(tuple(parent_ids))

    cut_points = [0]
    projections: list[tuple[int, int]] = []
    for k, part in enumerate(levels, start=1):
        cut_points.append(cut_points[-1] + part.n_cells)
        projections.extend((k, c) for c in range(part.n_cells))

    hierarchy = PartitionHierarchy(
        space_name=space.name,
        levels=tuple(levels),
        cut_points=tuple(cut_points),
        projections=tuple(projections),
        parents=tuple(parents),
        schedule=schedule,
    )
    logger.info(
        "hierarchy built",
        space=space.name,
        depth=schedule.depth,
        cells=[p.n_cells for p in levels],
        method=method,
    )
    return hierarchy


def build_family_hierarchies(
    family: SpaceFamily,
    schedule: Schedule,
    method: NetMethod = "greedy",
    *,
    budget: int = DEFAULT_EXACT_BUDGET,
) -> tuple[PartitionHierarchy, ...]:
    return tuple(build_hierarchy(space, schedule, method, budget=budget) for space in family.spaces)


def family_s_bounds(hierarchies: Iterable[PartitionHierarchy]) -> list[int]:
    """S_k = 族全体での I_k の最大値 (k = 1..depth)。"""
    hierarchies = list(hierarchies)
    if not hierarchies:
        raise ValueError("at least one hierarchy is required")
    depth = hierarchies[0].depth
    if any(h.depth != depth for h in hierarchies):
        raise ValueError("hierarchies must share the schedule depth")
    return [max(h.cut_points[k] for h in hierarchies) for k in range(1, depth + 1)]


def is_nested(hierarchy: PartitionHierarchy) -> bool:
    """各点について、レベル k+1 のセルがレベル k のセルに含まれるか。"""
    for k in range(1, hierarchy.depth):
        coarse, fine = hierarchy.level(k), hierarchy.level(k + 1)
        for p in range(len(fine.cell_of)):
            if hierarchy.parent_of(k + 1, fine.cell_of[p]) != coarse.cell_of[p]:
                return False
    return True


# ────────────────────────────────────────────
# シリアライズ
# ────────────────────────────────────────────
def _finite_or_tag(value: float) -> float | str:
    return value if math.isfinite(value) else "inf"


def schedule_to_dict(schedule: Schedule) -> dict[str, Any]:
    return {
        "mode": schedule.mode,
        "levels": [
            {
                "k": k,
                "L": lvl.lipschitz,
                "eps": lvl.eps,
                "eps1": _finite_or_tag(lvl.eps1),
                "K": lvl.K,
            }
            for k, lvl in enumerate(schedule.levels, start=1)
        ],
    }


def hierarchy_to_dict(hierarchy: PartitionHierarchy, points: Sequence[str] | None = None) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "space": hierarchy.space_name,
        "depth": hierarchy.depth,
        "cut_points": list(hierarchy.cut_points),
        "schedule": schedule_to_dict(hierarchy.schedule),
        "levels": [
            {
                "k": k,
                "radius_bound": _finite_or_tag(part.radius_bound),
                "cell_of": list(part.cell_of),
                "centers": list(part.centers),
                "parents": list(hierarchy.parents[k - 2]) if k >= 2 else None,
            }
            for k, part in enumerate(hierarchy.levels, start=1)
        ],
    }
    if points is not None:
        payload["points"] = list(points)
    return payload
