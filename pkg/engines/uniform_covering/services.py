# engines/uniform_covering/services.py

"""
engines.uniform_covering.services
────────────────────────────────────────────────────────────────────────────
大きな有限空間を直径の揃ったセルに分け、セルごとの等長作用素 V_i を直和
V = ⊕ V_i に組み上げて、一様被覆の上界 M(ε, R, L) = c(R)·2kS_k を検証する。

  1) decompose        … greedy net (半径 target_diam/2) + Voronoi
  2) coarse_profile   … Y = greedy net、R 球内の Y の点数
  3) block_isometry   … セルごとの構成と直和への組み上げ
  4) covering_count / covering_bound … c(R) と M
  5) certify_uniform  … 台の直径 ≤ R の L-Lipschitz 関数で ε-rank ≤ M を確認
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as la
import structlog
from pydantic import BaseModel, ConfigDict

from common.utils import derive_rng
from engines.function_nets.params import Mode
from engines.function_nets.services import lipschitz_constant, sample_lipschitz
from engines.metric_core.models import FiniteMetricSpace, SpaceFamily
from engines.metric_core.services import DEFAULT_EXACT_BUDGET, NetMethod, admissibility_profile, greedy_net
from engines.operator_model.models import RepresentationModel
from engines.operator_model.services import covering_representation, isometry_defect
from engines.partitions.models import PartitionHierarchy, Schedule
from engines.partitions.services import build_family_hierarchies, voronoi_partition
from engines.wvn_isometry.models import RankSchedule
from engines.wvn_isometry.services import IsometryInstance, build_instance, m_lookup, rank_schedule
from .models import (
    CoarseProfile,
    GridPoint,
    SpaceDecomposition,
    UniformCoveringCertificate,
    UniformSample,
)

logger = structlog.get_logger(__name__)

LOCALITY_TOL = 1e-10


# ────────────────────────────────────────────
# 分解と粗い幾何
# ────────────────────────────────────────────
def decompose(ambient: FiniteMetricSpace, target_diam: float) -> SpaceDecomposition:
    if target_diam <= 0:
        raise ValueError("target_diam must be positive")
    if target_diam >= ambient.diameter:
        cells: tuple[tuple[int, ...], ...] = (tuple(range(ambient.size)),)
    else:
        # Voronoi セルの半径 ≤ target_diam/2 なので直径 ≤ target_diam
        cells = voronoi_partition(ambient, greedy_net(ambient, target_diam / 2.0)).cells()
    spaces = tuple(ambient.subspace(c, name=f"{ambient.name}/cell{i}") for i, c in enumerate(cells))
    decomp = SpaceDecomposition(
        ambient=ambient,
        cells=cells,
        R0=max(s.diameter for s in spaces),
        cell_family=SpaceFamily(spaces=spaces, family_kind="decomposition"),
    )
    logger.info("ambient decomposed", ambient=ambient.name, cells=decomp.n_cells, R0=decomp.R0)
    return decomp


def coarse_profile(ambient: FiniteMetricSpace, net_radius: float, radii: Iterable[float]) -> CoarseProfile:
    members = sorted(greedy_net(ambient, net_radius).members)
    covering = float(np.max(np.min(ambient.dist[:, members], axis=1)))
    sub = ambient.dist[np.ix_(members, members)]
    counts = {float(R): int(np.max(np.sum(sub <= R, axis=1))) for R in radii}
    return CoarseProfile(
        net=tuple(members),
        net_radius=net_radius,
        covering_radius=covering,
        ball_counts=counts,
    )


def covering_count(decomp: SpaceDecomposition, R: float) -> int:
    """c(R) = max_x #{i : X_i ∩ B(x, R) ≠ ∅} (閉球)。"""
    onehot = np.zeros((decomp.ambient.size, decomp.n_cells))
    onehot[np.arange(decomp.ambient.size), decomp.cell_of()] = 1.0
    met = (decomp.ambient.dist <= R).astype(float) @ onehot > 0
    return int(np.max(np.sum(met, axis=1)))


def covering_bound(decomp: SpaceDecomposition, ranks: RankSchedule, eps: float, R: float, lipschitz: float) -> int:
    """M(ε, R, L) = c(R)·2kS_k。k は m_lookup(L, ε) による。"""
    return covering_count(decomp, R) * m_lookup(ranks, lipschitz, eps).bound


# ────────────────────────────────────────────
# 直和の等長作用素
# ────────────────────────────────────────────
class BlockIsometry(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    decomposition: SpaceDecomposition
    rep_rho: RepresentationModel
    rep_pi: RepresentationModel
    instances: tuple[IsometryInstance, ...]
    hierarchies: tuple[PartitionHierarchy, ...]
    ranks: RankSchedule
    V: np.ndarray
    truncation: int


def block_isometry(
    decomp: SpaceDecomposition,
    rep_rho: RepresentationModel,
    schedule: Schedule,
    truncation: int,
    *,
    method: NetMethod = "greedy",
    budget: int = DEFAULT_EXACT_BUDGET,
) -> BlockIsometry:
    """
    セル X_i ごとに ρ, π をスロット H_i = π(P_i)H に制限して V_i を作り、
    V = ⊕ V_i を組み上げる。
    """
    rep_pi = covering_representation(decomp.ambient, truncation, rep_rho)
    hierarchies = build_family_hierarchies(decomp.cell_family, schedule, method, budget=budget)
    instances = []
    V = np.zeros((rep_pi.dim, rep_rho.dim))
    for cell, space, hierarchy in zip(decomp.cells, decomp.cell_family.spaces, hierarchies):
        inst = build_instance(
            space,
            hierarchy,
            rep_rho.restrict(cell, name=space.name),
            truncation,
            rep_pi=rep_pi.restrict(cell, name=space.name),
        )
        V[np.ix_(rep_pi.slots_of(cell), rep_rho.slots_of(cell))] = inst.isometry.V
        instances.append(inst)
    logger.info("block isometry assembled", cells=len(instances), shape=V.shape, truncation=truncation)
    return BlockIsometry(
        decomposition=decomp,
        rep_rho=rep_rho,
        rep_pi=rep_pi,
        instances=tuple(instances),
        hierarchies=hierarchies,
        ranks=rank_schedule(schedule, hierarchies),
        V=V,
        truncation=truncation,
    )


def full_defect(block: BlockIsometry, values: np.ndarray) -> np.ndarray:
    """V*π(f)V - ρ(f) をアンビエント全体で組み立てる (局所性の検査用)。"""
    pi_vals = values[block.rep_pi.coordinate_points()]
    V = block.V
    out = (V.conj().T * pi_vals) @ V
    out[np.diag_indices_from(out)] -= values[block.rep_rho.coordinate_points()]
    return out


def cellwise_singular_values(block: BlockIsometry, values: np.ndarray, cells: Iterable[int]) -> np.ndarray:
    """台が触れるセルだけでブロックごとの特異値を集める (直和なので全体の特異値と一致)。"""
    parts = [
        la.svdvals(block.instances[i].kernel.defect(values[list(block.decomposition.cells[i])]))
        for i in cells
    ]
    return np.concatenate(parts) if parts else np.zeros(0)


def _admissibility_recheck(block: BlockIsometry, budget: int) -> tuple[dict, bool]:
    schedule = block.ranks.schedule
    levels = [(k, lvl.eps1) for k, lvl in enumerate(schedule.levels, start=1) if math.isfinite(lvl.eps1)]
    if not levels:
        return {"method": None, "entries": []}, True
    largest = max(s.size for s in block.decomposition.cell_family.spaces)
    method: NetMethod = "exact" if largest <= budget else "greedy"
    profile = admissibility_profile(block.decomposition.cell_family, [e for _, e in levels], method, budget=budget)
    entries = [
        {"k": k, "eps1": eps1, "N": entry.N, "S_k": block.ranks.S[k - 1]}
        for (k, eps1), entry in zip(levels, profile.entries)
    ]
    return {"method": method, "entries": entries}, all(e["N"] <= e["S_k"] for e in entries)


# ────────────────────────────────────────────
# 一様被覆の証明書
# ────────────────────────────────────────────
def _bump(space: FiniteMetricSpace, center: int, R: float) -> np.ndarray:
    # 台は d(x, x0) < R/2 なので直径 < R
    return np.maximum(0.0, 1.0 - 2.0 * space.dist[center] / R)


def certify_uniform(
    block: BlockIsometry,
    grid: Sequence[tuple[float, float, float]],
    *,
    samples: int,
    seed: int,
    mode: Mode = "real",
    locality_checks: int = 2,
    budget: int = DEFAULT_EXACT_BUDGET,
) -> UniformCoveringCertificate:
    """
    grid の各 (ε, R, L) で、L-Lipschitz サンプルに R 球のバンプを掛けた関数について
    eps_rank(V*π(f)V - ρ(f), 2ε_k) ≤ M = c(R)·2kS_k を確認する。
    k は実測 Lipschitz 定数 (と公称 L の大きい方) で引く。
    """
    decomp = block.decomposition
    ambient = decomp.ambient
    cell_of = np.asarray(decomp.cell_of(), dtype=int)
    rho_cell = cell_of[block.rep_rho.coordinate_points()]

    grid_points: list[GridPoint] = []
    rows: list[UniformSample] = []
    locality_residual = 0.0
    locality_ok = True

    for gi, (eps, R, lip) in enumerate(grid):
        c_R = covering_count(decomp, R)
        centers = derive_rng(seed, "bump_centers", repr(float(R)), repr(float(lip)))
        funcs = []
        for g in sample_lipschitz(ambient, lip, samples, seed, mode):
            values = g.values * _bump(ambient, int(centers.integers(ambient.size)), R)
            funcs.append((values, lipschitz_constant(values, ambient)))
        certified = max([lip, *(m for _, m in funcs)])
        lookup = m_lookup(block.ranks, certified, eps)
        M = c_R * lookup.bound

        max_rank = 0
        point_ok = True
        for s, (values, measured) in enumerate(funcs):
            hit = sorted({int(c) for c in cell_of[np.abs(values) > 0]})
            svals = cellwise_singular_values(block, values, hit)
            rank = int(np.count_nonzero(svals > lookup.tolerance))
            if s < locality_checks and hit:
                defect = full_defect(block, values)
                outside = ~np.isin(rho_cell, hit)
                residual = float(
                    max(np.max(np.abs(defect[outside]), initial=0.0), np.max(np.abs(defect[:, outside]), initial=0.0))
                )
                full_rank = int(np.count_nonzero(la.svdvals(defect) > lookup.tolerance))
                locality_residual = max(locality_residual, residual)
                locality_ok = locality_ok and residual <= LOCALITY_TOL and full_rank == rank
            passed = rank <= M
            point_ok = point_ok and passed
            max_rank = max(max_rank, rank)
            rows.append(
                UniformSample(
                    grid_index=gi,
                    sample=s,
                    eps=eps,
                    R=R,
                    lipschitz=lip,
                    measured_lipschitz=measured,
                    k=lookup.k,
                    tolerance=lookup.tolerance,
                    rank=rank,
                    bound=M,
                    c_R=c_R,
                    support_cells=len(hit),
                    cell_bound_ok=len(hit) != 1 or rank <= lookup.bound,
                    passed=passed,
                )
            )
        grid_points.append(
            GridPoint(
                eps=eps,
                R=R,
                lipschitz=lip,
                certified_lipschitz=certified,
                k=lookup.k,
                tolerance=lookup.tolerance,
                c_R=c_R,
                per_cell_bound=lookup.bound,
                M=M,
                samples=len(funcs),
                max_rank=max_rank,
                passed=point_ok,
            )
        )
        log = logger.info if point_ok else logger.warning
        log("grid point certified", eps=eps, R=R, L=lip, c_R=c_R, M=M, max_rank=max_rank)

    admissibility, admissible = _admissibility_recheck(block, budget)
    certificate = UniformCoveringCertificate(
        truncation=block.truncation,
        n_cells=decomp.n_cells,
        R0=decomp.R0,
        S=block.ranks.S,
        grid=tuple(grid_points),
        samples=tuple(rows),
        locality_residual=locality_residual,
        locality_ok=locality_ok,
        admissibility=admissibility,
        admissibility_ok=admissible,
        isometry_defect=isometry_defect(block.V),
    )
    logger.info("uniform certificate finished", all_passed=certificate.all_passed, cells=decomp.n_cells)
    return certificate
