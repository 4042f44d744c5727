# engines/wvn_isometry/services.py

"""
engines.wvn_isometry.services
────────────────────────────────────────────────────────────────────────────
  1) build_isometry      … ρ ブロック (k, P) の i 列目を π ブロック (k, P) の i 列目へ送る V
  2) m_lookup            … 最小の k (L ≤ L_k, 2ε_k ≤ ε) と上界 2kS_k、許容誤差 2ε_k
  3) exact_defect_check  … T ∈ A_k について rank(V*T^πV - T^ρ) ≤ dim E_k^ρ ≤ kS_k
  4) certify_theorem     … f ∈ C_{L_k}(X) のサンプルで eps_rank(V*π(f)V - ρ(f), 2ε_k) ≤ 2kS_k
  5) truncation_sweep    … 打ち切り重複度を変えても判定・ランクが一致するか
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import scipy.linalg as la
import structlog
from pydantic import BaseModel, ConfigDict

from common.exceptions import BlockWidthDeficitError, NotIsometryError, ScheduleExhaustedError
from common.utils import derive_rng, unit_disc
from engines.function_nets.services import quantize, sample_lipschitz
from engines.metric_core.models import FiniteMetricSpace, SpaceFamily
from engines.metric_core.services import DEFAULT_EXACT_BUDGET, NetMethod
from engines.operator_model.kernels import CompressionKernel
from engines.operator_model.models import RepresentationModel
from engines.operator_model.services import (
    ISOMETRY_TOL,
    covering_representation,
    eps_rank,
    isometry_defect,
    numerical_rank,
)
from engines.partitions.models import PartitionHierarchy, Schedule
from engines.partitions.services import build_family_hierarchies, family_s_bounds
from .bases import pi_basis_maximal, rho_basis
from .models import (
    BlockAssignment,
    CertificationRecord,
    CertificationReport,
    CoveringIsometry,
    DefectCheckReport,
    DefectTrial,
    DiagonalizingBasis,
    RankLookup,
    RankSchedule,
    TruncationSweep,
)

logger = structlog.get_logger(__name__)

SUPPORT_TOL = 1e-9
INJECTION_EXCESS = 5
INJECTION_SCALE = 10.0
SV_HEAD = 3

RhoBuilder = Callable[[FiniteMetricSpace], RepresentationModel]


# ────────────────────────────────────────────
# 等長作用素
# ────────────────────────────────────────────
def build_isometry(basis_rho: DiagonalizingBasis, basis_pi: DiagonalizingBasis) -> CoveringIsometry:
    if basis_rho.keys != basis_pi.keys:
        raise ValueError("bases were built on different hierarchies")
    rho_starts, pi_starts = basis_rho.starts, basis_pi.starts
    selected: list[int] = []
    block_map = []
    for key, width in zip(basis_rho.keys, basis_rho.widths):
        pi_width = basis_pi.width_of(key)
        if pi_width < width:
            raise BlockWidthDeficitError(key, width, pi_width)
        rs, ps = rho_starts[key], pi_starts[key]
        selected.extend(range(ps, ps + width))
        block_map.append(
            BlockAssignment(
                key=key,
                rho_columns=tuple(range(rs, rs + width)),
                pi_columns=tuple(range(ps, ps + width)),
            )
        )
    V = basis_pi.matrix[:, selected] @ basis_rho.matrix.conj().T
    defect = isometry_defect(V)
    if defect > ISOMETRY_TOL:
        raise NotIsometryError(defect, ISOMETRY_TOL)
    return CoveringIsometry(V=V, block_map=tuple(block_map), basis_rho=basis_rho, basis_pi=basis_pi)


class IsometryInstance(BaseModel):
    """1 空間分の構成物一式 (階層・表現・基底・V・圧縮カーネル)。"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    space: FiniteMetricSpace
    hierarchy: PartitionHierarchy
    rep_rho: RepresentationModel
    rep_pi: RepresentationModel
    isometry: CoveringIsometry
    kernel: CompressionKernel

    @property
    def isometry_defect(self) -> float:
        return isometry_defect(self.isometry.V)


def build_instance(
    space: FiniteMetricSpace,
    hierarchy: PartitionHierarchy,
    rep_rho: RepresentationModel,
    truncation: int,
    rep_pi: RepresentationModel | None = None,
    *,
    seed_basis: np.ndarray | None = None,
) -> IsometryInstance:
    """seed_basis は rho_basis へそのまま渡す (省略時は標準基底)。"""
    rep_pi = rep_pi or covering_representation(space, truncation, rep_rho)
    iso = build_isometry(
        rho_basis(rep_rho, hierarchy, seed_basis),
        pi_basis_maximal(rep_pi, hierarchy),
    )
    logger.debug(
        "isometry built",
        space=space.name,
        shape=iso.shape,
        e_dims=iso.basis_rho.e_dimensions,
    )
    return IsometryInstance(
        space=space,
        hierarchy=hierarchy,
        rep_rho=rep_rho,
        rep_pi=rep_pi,
        isometry=iso,
        kernel=CompressionKernel(iso.V, rep_pi, rep_rho),
    )


# ────────────────────────────────────────────
# ランク上界の参照
# ────────────────────────────────────────────
def rank_schedule(schedule: Schedule, hierarchies: Sequence[PartitionHierarchy]) -> RankSchedule:
    return RankSchedule(schedule=schedule, S=tuple(family_s_bounds(hierarchies)))


def m_lookup(schedule: RankSchedule, lipschitz: float, eps: float) -> RankLookup:
    for k, level in enumerate(schedule.schedule.levels, start=1):
        if lipschitz <= level.lipschitz and 2.0 * level.eps <= eps:
            return schedule.entry(k)
    raise ScheduleExhaustedError(lipschitz, eps, schedule.schedule.depth)


# ────────────────────────────────────────────
# A_k 上の厳密検査
# ────────────────────────────────────────────
def exact_defect_check(
    instance: IsometryInstance,
    k: int,
    trials: int,
    seed: int,
    *,
    s_bound: int | None = None,
) -> DefectCheckReport:
    """
    T = Σ c_P χ_P (P ∈ R_k, c_P は単位円板上一様) について
    rank(V*T^πV - T^ρ) ≤ dim E_k^ρ ≤ k·S_k と、欠損が E_k^ρ の直交補空間を消すことを確認する。
    """
    part = instance.hierarchy.level(k)
    cell_of = np.asarray(part.cell_of, dtype=int)
    dim_e = instance.isometry.basis_rho.e_dimensions[k - 1]
    bound = k * (s_bound if s_bound is not None else instance.hierarchy.cut_points[k])
    complement = instance.isometry.basis_rho.complement_columns(k)
    rng = derive_rng(seed, "exact_defect", instance.space.name, k)

    out = []
    for t in range(trials):
        coeff = unit_disc(rng, part.n_cells)
        defect = instance.kernel.defect(coeff[cell_of])
        rank = numerical_rank(defect)
        residual = float(la.norm(defect @ complement, 2)) if complement.size else 0.0
        passed = rank <= dim_e <= bound and residual <= SUPPORT_TOL
        if not passed:
            logger.warning(
                "exact defect violation",
                space=instance.space.name,
                k=k,
                trial=t,
                rank=rank,
                dim_e=dim_e,
                residual=residual,
            )
        out.append(DefectTrial(index=t, rank=rank, support_residual=residual, passed=passed))
    return DefectCheckReport(space=instance.space.name, k=k, dim_e=dim_e, bound=bound, trials=tuple(out))


# ────────────────────────────────────────────
# サンプル関数による証明書
# ────────────────────────────────────────────
def _injection(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    q, _ = la.qr(rng.standard_normal((dim, rank)), mode="economic")
    return INJECTION_SCALE * (q @ q.T)


def certify_instance(
    instance: IsometryInstance,
    ranks: RankSchedule,
    *,
    samples: int,
    seed: int,
    inject_defect: bool = False,
) -> list[CertificationRecord]:
    schedule = ranks.schedule
    records = []
    for k, level in enumerate(schedule.levels, start=1):
        lookup = m_lookup(ranks, level.lipschitz, 2.0 * level.eps)
        partition = instance.hierarchy.level(k)
        functions = sample_lipschitz(instance.space, level.lipschitz, samples, seed, schedule.mode)
        inject_rng = derive_rng(seed, "inject_defect", instance.space.name, k)
        for idx, f in enumerate(functions):
            defect = instance.kernel.defect(f.values)
            injected = False
            if inject_defect and lookup.bound + INJECTION_EXCESS <= instance.rep_rho.dim:
                defect = defect + _injection(instance.rep_rho.dim, lookup.bound + INJECTION_EXCESS, inject_rng)
                injected = True
            result = eps_rank(defect, lookup.tolerance)
            q = quantize(f, partition, level.K, schedule.mode)
            quant_ok = q.within_bound and q.sup_error < level.eps
            records.append(
                CertificationRecord(
                    space=instance.space.name,
                    k=k,
                    sample=idx,
                    lipschitz=level.lipschitz,
                    eps=level.eps,
                    tolerance=lookup.tolerance,
                    rank=result.rank,
                    tight_bound=lookup.tight_bound,
                    bound=lookup.bound,
                    passed=result.rank <= lookup.bound,
                    sv_head=result.head(SV_HEAD),
                    quant_error=q.sup_error,
                    quant_bound=q.error_bound,
                    quant_ok=quant_ok,
                    injected=injected,
                )
            )
        level_records = records[-len(functions):] if functions else []
        failed = sum(1 for r in level_records if not r.passed)
        log = logger.warning if failed else logger.info
        log(
            "level certified",
            space=instance.space.name,
            k=k,
            samples=len(functions),
            violations=failed,
            max_rank=max((r.rank for r in level_records), default=0),
            bound=lookup.bound,
        )
    return records


def certify_theorem(
    family: SpaceFamily,
    schedule: Schedule,
    rho_builder: RhoBuilder,
    *,
    truncation: int,
    samples: int,
    seed: int,
    defect_trials: int = 0,
    method: NetMethod = "greedy",
    budget: int = DEFAULT_EXACT_BUDGET,
    inject_defect: bool = False,
    hierarchies: Sequence[PartitionHierarchy] | None = None,
) -> CertificationReport:
    """族の各空間・各レベルで V*π(f)V - ρ(f) の ε-rank を上界 2kS_k と比較する。"""
    hierarchies = tuple(hierarchies or build_family_hierarchies(family, schedule, method, budget=budget))
    ranks = rank_schedule(schedule, hierarchies)
    logger.info("certification started", truncation=truncation, S=list(ranks.S), spaces=len(family.spaces))

    records: list[CertificationRecord] = []
    checks: list[DefectCheckReport] = []
    defects: dict[str, float] = {}
    for space, hierarchy in zip(family.spaces, hierarchies):
        instance = build_instance(space, hierarchy, rho_builder(space), truncation)
        defects[space.name] = instance.isometry_defect
        for k in range(1, schedule.depth + 1):
            if defect_trials:
                checks.append(exact_defect_check(instance, k, defect_trials, seed, s_bound=ranks.S[k - 1]))
        records.extend(
            certify_instance(instance, ranks, samples=samples, seed=seed, inject_defect=inject_defect)
        )

    report = CertificationReport(
        truncation=truncation,
        mode=schedule.mode,
        S=ranks.S,
        records=tuple(records),
        defect_checks=tuple(checks),
        isometry_defects=defects,
    )
    logger.info("certification finished", **{k: v for k, v in report.summary().items() if k != "quantization"})
    return report


def _fingerprint(report: CertificationReport) -> list[tuple]:
    rows: list[tuple] = [(r.space, r.k, r.sample, r.rank, r.passed) for r in report.records]
    rows += [(c.space, c.k, t.index, t.rank, t.passed) for c in report.defect_checks for t in c.trials]
    return rows


def truncation_sweep(
    family: SpaceFamily,
    schedule: Schedule,
    rho_builder: RhoBuilder,
    truncations: Sequence[int],
    **kwargs,
) -> TruncationSweep:
    """各打ち切りで certify_theorem を実行し、ランクと判定が一致するか比べる。"""
    method = kwargs.pop("method", "greedy")
    budget = kwargs.pop("budget", DEFAULT_EXACT_BUDGET)
    hierarchies = kwargs.pop("hierarchies", None) or build_family_hierarchies(
        family, schedule, method, budget=budget
    )
    reports = tuple(
        certify_theorem(family, schedule, rho_builder, truncation=t, hierarchies=hierarchies, **kwargs)
        for t in truncations
    )
    mismatches = []
    if reports:
        base = _fingerprint(reports[0])
        for t, report in zip(truncations[1:], reports[1:]):
            other = _fingerprint(report)
            if len(other) != len(base):
                mismatches.append(f"N={t}: record count {len(other)} != {len(base)}")
                continue
            mismatches.extend(
                f"N={t}: space={a[0]} k={a[1]} index={a[2]} rank {b[3]} != {a[3]}"
                for a, b in zip(base, other)
                if a != b
            )
    if mismatches:
        logger.warning("truncation dependence detected", mismatches=len(mismatches))
    return TruncationSweep(
        truncations=tuple(truncations),
        reports=reports,
        consistent=not mismatches,
        mismatches=tuple(mismatches),
    )
