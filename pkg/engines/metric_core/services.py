# engines/metric_core/services.py

"""
engines.metric_core.services
────────────────────────────────────────────────────────────────────────────
有限距離空間の検証と ε-net 計算。
  1) validate_metric       … 距離公理の検証 (違反は証拠インデックス付きで全件報告)
  2) min_net_exact         … 部分集合の全探索による最小 ε-net (|X| ≤ budget)
  3) greedy_net            … farthest-point greedy (最小番号から開始、同点は最小番号)
  4) admissibility_profile … 族全体での N(ε) 上界
"""
from __future__ import annotations

from itertools import combinations
from typing import Iterable, Literal, Sequence

import numpy as np
import structlog

from common.exceptions import MetricValidationError, MetricViolation, NetBudgetExceededError
from .models import AdmissibilityEntry, AdmissibilityProfile, EpsNet, FiniteMetricSpace, SpaceFamily

logger = structlog.get_logger(__name__)

TRIANGLE_TOL = 1e-12
DEFAULT_EXACT_BUDGET = 20

NetMethod = Literal["exact", "greedy"]


# ────────────────────────────────────────────
# 距離公理の検証
# ────────────────────────────────────────────
def validate_metric(
    raw_matrix: Sequence[Sequence[float]] | np.ndarray,
    labels: Sequence[str] | None = None,
    *,
    name: str = "X",
) -> FiniteMetricSpace:
    """
    生の行列を検証して FiniteMetricSpace を返す。
    違反があれば MetricValidationError (violations に全件) を送出する。
    """
    dist = np.array(raw_matrix, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise MetricValidationError(
            [MetricViolation("square", tuple(dist.shape), "matrix is not square")]
        )
    n = dist.shape[0]
    if n == 0:
        raise MetricValidationError([MetricViolation("non_empty", (0,), "space has no points")])
    violations: list[MetricViolation] = []

    bad = np.argwhere(~np.isfinite(dist))
    for i, j in bad:
        violations.append(MetricViolation("finite", (int(i), int(j))))
    if violations:
        # 非有限値があると以降の比較が意味を持たない
        raise MetricValidationError(violations)

    for i, j in np.argwhere(dist < 0):
        violations.append(MetricViolation("non_negative", (int(i), int(j)), f"{dist[i, j]!r}"))
    for i in np.flatnonzero(np.diag(dist) != 0):
        violations.append(MetricViolation("zero_diagonal", (int(i), int(i)), f"{dist[i, i]!r}"))

    off = ~np.eye(n, dtype=bool)
    for i, j in np.argwhere(off & (dist == 0)):
        violations.append(MetricViolation("separation", (int(i), int(j))))

    asym = np.argwhere(np.triu(dist != dist.T, k=1))
    for i, j in asym:
        violations.append(
            MetricViolation("symmetry", (int(i), int(j)), f"{dist[i, j]!r} != {dist[j, i]!r}")
        )

    # 三角不等式: 中継点 k ごとにベクトル化して判定
    for k in range(n):
        through = dist[:, [k]] + dist[[k], :]
        hits = np.argwhere(dist > through + TRIANGLE_TOL)
        if hits.size:
            i, j = (int(v) for v in hits[0])
            violations.append(
                MetricViolation(
                    "triangle",
                    (i, j, k),
                    f"d({i},{j})={dist[i, j]!r} > d({i},{k})+d({k},{j})={through[i, j]!r}",
                )
            )

    if violations:
        logger.debug("metric rejected", violations=len(violations))
        raise MetricValidationError(violations)

    points = tuple(labels) if labels is not None else tuple(str(i) for i in range(n))
    if len(points) != n:
        raise MetricValidationError(
            [MetricViolation("labels", (len(points), n), "label count differs from matrix size")]
        )
    return FiniteMetricSpace(name=name, points=points, dist=dist)


# ────────────────────────────────────────────
# ε-net
# ────────────────────────────────────────────
def _assign(space: FiniteMetricSpace, members: Sequence[int]) -> tuple[int, ...]:
    """各点を最近メンバーへ (同距離なら点番号の小さいメンバー)。"""
    ordered = np.array(sorted(members), dtype=int)
    nearest = np.argmin(space.dist[:, ordered], axis=1)
    return tuple(int(ordered[i]) for i in nearest)


def min_net_exact(
    space: FiniteMetricSpace,
    eps: float,
    *,
    budget: int = DEFAULT_EXACT_BUDGET,
) -> EpsNet:
    """
    最小基数の ε-net を全探索で求める。
    サイズ昇順・辞書順に組合せを調べ、最初に全点を覆ったものを返す。
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n = space.size
    if n > budget:
        raise NetBudgetExceededError(n, budget)

    full = (1 << n) - 1
    # cover[i] : 点 i が閉 ε 球で覆う点集合のビットマスク
    cover = []
    for row in space.dist <= eps:
        mask = 0
        for j in np.flatnonzero(row):
            mask |= 1 << int(j)
        cover.append(mask)

    for size in range(1, n + 1):
        for combo in combinations(range(n), size):
            acc = 0
            for i in combo:
                acc |= cover[i]
            if acc == full:
                net = EpsNet(radius=eps, members=combo, assignment=_assign(space, combo), method="exact")
                logger.debug("exact net found", space=space.name, eps=eps, size=size)
                return net
    raise AssertionError("unreachable: the full point set is always a net")


def greedy_net(space: FiniteMetricSpace, eps: float) -> EpsNet:
    """
    farthest-point greedy。メンバーは互いに ε より真に離れる。
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    members = [0]
    reach = np.array(space.dist[0], dtype=float)
    while reach.max() > eps:
        nxt = int(np.argmax(reach))  # argmax は最初の最大値 = 最小番号
        members.append(nxt)
        np.minimum(reach, space.dist[nxt], out=reach)
    return EpsNet(radius=eps, members=tuple(members), assignment=_assign(space, members), method="greedy")


def compute_net(
    space: FiniteMetricSpace,
    eps: float,
    method: NetMethod = "greedy",
    *,
    budget: int = DEFAULT_EXACT_BUDGET,
) -> EpsNet:
    if method == "exact":
        return min_net_exact(space, eps, budget=budget)
    return greedy_net(space, eps)


def admissibility_profile(
    family: SpaceFamily,
    eps_list: Iterable[float],
    method: NetMethod = "greedy",
    *,
    budget: int = DEFAULT_EXACT_BUDGET,
) -> AdmissibilityProfile:
    """各 ε について N = max_X |net_X| を求め、各空間の net を証拠として保持する。"""
    entries = []
    for eps in eps_list:
        witnesses = tuple(compute_net(space, eps, method, budget=budget) for space in family.spaces)
        n_max = max(w.size for w in witnesses)
        entries.append(
            AdmissibilityEntry(eps=eps, N=n_max, witness_method=method, witnesses=witnesses)
        )
        logger.info(
            "admissibility entry",
            family=family.family_kind,
            eps=eps,
            N=n_max,
            method=method,
        )
    return AdmissibilityProfile(family_kind=family.family_kind, entries=tuple(entries))


def is_isometric(left: FiniteMetricSpace, right: FiniteMetricSpace, *, tol: float = 0.0) -> bool:
    """点の並び順を保った等長性 (生成器は相対座標順に点を並べる)。"""
    if left.size != right.size:
        return False
    return bool(np.allclose(left.dist, right.dist, rtol=0.0, atol=tol))
