# backend/services/pipeline_service.py
"""
バッチパイプライン
────────────────────────────────────────────
CLI の各サブコマンドに対応する実行関数。戻り値は終了コード。
  run_gen       … 空間族を生成して family.json に保存
  run_nets      … admissibility プロファイル → nets.csv / nets.json
  run_hierarchy … 分割階層 → hierarchy.json
  run_certify   … 打ち切りスイープ付き証明書 → certification.csv / certification.json
  run_uniform   … 一様被覆証明書 → uniform.csv / uniform_grid.csv / uniform.json
"""
from __future__ import annotations

from itertools import product
from pathlib import Path
from typing import Any, Callable

import structlog

from backend.config.settings import RunConfig, get_settings
from backend.services.report_service import make_header, write_csv, write_json
from common.exceptions import ScheduleError
from engines.metric_core.generators import generate_family, grid_space
from engines.metric_core.io import save_family
from engines.metric_core.models import FiniteMetricSpace
from engines.metric_core.services import admissibility_profile
from engines.operator_model.models import RepresentationModel
from engines.operator_model.services import random_representation, uniform_representation
from engines.partitions.models import Schedule, default_schedule
from engines.partitions.services import build_family_hierarchies, family_s_bounds, hierarchy_to_dict
from engines.uniform_covering.services import block_isometry, certify_uniform, decompose
from engines.wvn_isometry.models import TruncationSweep
from engines.wvn_isometry.services import truncation_sweep

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2

CERTIFY_COLUMNS = (
    "truncation", "space", "k", "sample", "L", "eps", "tolerance", "rank",
    "tight_bound", "bound", "pass", "sv_head", "quant_error", "quant_bound", "quant_ok", "injected",
)
DEFECT_COLUMNS = ("truncation", "space", "k", "trial", "rank", "dim_e", "bound", "support_residual", "pass")
UNIFORM_COLUMNS = (
    "grid_index", "sample", "eps", "R", "L", "L_measured", "k", "tolerance", "rank",
    "bound", "c_R", "support_cells", "pass",
)
GRID_COLUMNS = (
    "eps", "R", "L", "L_certified", "k", "tolerance", "c_R", "per_cell_bound", "M",
    "samples", "max_rank", "pass",
)


def schedule_of(cfg: RunConfig) -> Schedule:
    try:
        return default_schedule(cfg.depth, cfg.mode, lipschitz_step=cfg.lipschitz_step, eps_base=cfg.eps_base)
    except ValueError as exc:
        # pydantic の ValidationError も ValueError の派生
        raise ScheduleError("schedule rule rejected", depth=cfg.depth, reason=str(exc)) from exc


def rho_builder(cfg: RunConfig) -> Callable[[FiniteMetricSpace], RepresentationModel]:
    if cfg.rho_random:
        return lambda space: random_representation(space, cfg.rho_multiplicity, cfg.seed)
    return lambda space: uniform_representation(space, cfg.rho_multiplicity)


def _out(cfg: RunConfig, name: str) -> Path:
    return Path(cfg.out_dir) / name


# ────────────────────────────────────────────
# gen / nets / hierarchy
# ────────────────────────────────────────────
def run_gen(cfg: RunConfig) -> int:
    family = generate_family(cfg.family, cfg.seed)
    save_family(family, _out(cfg, "family.json"), header=make_header("gen", cfg.resolved()))
    return EXIT_OK


def run_nets(cfg: RunConfig) -> int:
    family = generate_family(cfg.family, cfg.seed)
    profile = admissibility_profile(
        family, cfg.eps_list, cfg.net_method, budget=get_settings().exact_net_budget
    )
    header = make_header("nets", cfg.resolved())
    rows = [
        {
            "family": family.family_kind,
            "eps": entry.eps,
            "N": entry.N,
            "method": entry.witness_method,
            "sizes": [w.size for w in entry.witnesses],
        }
        for entry in profile.entries
    ]
    write_csv(_out(cfg, "nets.csv"), header, ("family", "eps", "N", "method", "sizes"), rows)
    write_json(
        _out(cfg, "nets.json"),
        header,
        {
            "family": family.family_kind,
            "spaces": [s.name for s in family.spaces],
            "entries": [
                {
                    "eps": e.eps,
                    "N": e.N,
                    "method": e.witness_method,
                    "members": [list(w.members) for w in e.witnesses],
                }
                for e in profile.entries
            ],
        },
    )
    return EXIT_OK


def run_hierarchy(cfg: RunConfig) -> int:
    family = generate_family(cfg.family, cfg.seed)
    hierarchies = build_family_hierarchies(
        family, schedule_of(cfg), cfg.net_method, budget=get_settings().exact_net_budget
    )
    write_json(
        _out(cfg, "hierarchy.json"),
        make_header("hierarchy", cfg.resolved()),
        {
            "S": family_s_bounds(hierarchies),
            "hierarchies": [hierarchy_to_dict(h, s.points) for h, s in zip(hierarchies, family.spaces)],
        },
    )
    return EXIT_OK


# ────────────────────────────────────────────
# certify
# ────────────────────────────────────────────
def _certify_rows(sweep: TruncationSweep) -> tuple[list[dict[str, Any]], list[dict[str, Any]]]:
    rows, defect_rows = [], []
    for report in sweep.reports:
        for r in report.records:
            rows.append(
                {
                    "truncation": report.truncation, "space": r.space, "k": r.k, "sample": r.sample,
                    "L": r.lipschitz, "eps": r.eps, "tolerance": r.tolerance, "rank": r.rank,
                    "tight_bound": r.tight_bound, "bound": r.bound, "pass": r.passed,
                    "sv_head": r.sv_head, "quant_error": r.quant_error, "quant_bound": r.quant_bound,
                    "quant_ok": r.quant_ok, "injected": r.injected,
                }
            )
        for check in report.defect_checks:
            for t in check.trials:
                defect_rows.append(
                    {
                        "truncation": report.truncation, "space": check.space, "k": check.k,
                        "trial": t.index, "rank": t.rank, "dim_e": check.dim_e, "bound": check.bound,
                        "support_residual": t.support_residual, "pass": t.passed,
                    }
                )
    return rows, defect_rows


def run_certify(cfg: RunConfig) -> int:
    family = generate_family(cfg.family, cfg.seed)
    sweep = truncation_sweep(
        family,
        schedule_of(cfg),
        rho_builder(cfg),
        cfg.truncations,
        samples=cfg.samples,
        seed=cfg.seed,
        defect_trials=cfg.defect_trials,
        method=cfg.net_method,
        budget=get_settings().exact_net_budget,
        inject_defect=cfg.inject_defect,
    )
    header = make_header("certify", cfg.resolved())
    rows, defect_rows = _certify_rows(sweep)
    write_csv(_out(cfg, "certification.csv"), header, CERTIFY_COLUMNS, rows)
    write_csv(_out(cfg, "defect_checks.csv"), header, DEFECT_COLUMNS, defect_rows)
    passed = all(r.all_passed for r in sweep.reports) and sweep.consistent
    write_json(
        _out(cfg, "certification.json"),
        header,
        {
            "S": list(sweep.reports[0].S) if sweep.reports else [],
            "truncation_consistent": sweep.consistent,
            "truncation_mismatches": list(sweep.mismatches),
            "summaries": [r.summary() for r in sweep.reports],
            "violations": [
                {"truncation": rep.truncation, **v.model_dump(mode="json")}
                for rep in sweep.reports
                for v in rep.violations
            ],
            "all_passed": passed,
        },
    )
    if not passed:
        logger.warning("certification found violations", truncations=list(sweep.truncations))
    return EXIT_OK if passed else EXIT_VIOLATION


# ────────────────────────────────────────────
# uniform
# ────────────────────────────────────────────
def run_uniform(cfg: RunConfig) -> int:
    ambient = grid_space(cfg.ambient_side)
    decomp = decompose(ambient, cfg.target_diam)
    rep_rho = rho_builder(cfg)(ambient)
    budget = get_settings().exact_net_budget
    block = block_isometry(
        decomp, rep_rho, schedule_of(cfg), cfg.truncations[0], method=cfg.net_method, budget=budget
    )
    grid = list(product(cfg.uniform_eps, cfg.uniform_radii, cfg.uniform_lipschitz))
    cert = certify_uniform(
        block, grid, samples=cfg.uniform_samples, seed=cfg.seed, mode=cfg.mode, budget=budget
    )
    header = make_header("uniform", cfg.resolved())
    write_csv(
        _out(cfg, "uniform.csv"),
        header,
        UNIFORM_COLUMNS,
        (
            {
                "grid_index": s.grid_index, "sample": s.sample, "eps": s.eps, "R": s.R, "L": s.lipschitz,
                "L_measured": s.measured_lipschitz, "k": s.k, "tolerance": s.tolerance, "rank": s.rank,
                "bound": s.bound, "c_R": s.c_R, "support_cells": s.support_cells, "pass": s.passed,
            }
            for s in cert.samples
        ),
    )
    write_csv(
        _out(cfg, "uniform_grid.csv"),
        header,
        GRID_COLUMNS,
        (
            {
                "eps": g.eps, "R": g.R, "L": g.lipschitz, "L_certified": g.certified_lipschitz, "k": g.k,
                "tolerance": g.tolerance, "c_R": g.c_R, "per_cell_bound": g.per_cell_bound, "M": g.M,
                "samples": g.samples, "max_rank": g.max_rank, "pass": g.passed,
            }
            for g in cert.grid
        ),
    )
    write_json(
        _out(cfg, "uniform.json"),
        header,
        {
            "summary": cert.summary(),
            "grid": [g.model_dump(mode="json") for g in cert.grid],
            "admissibility": cert.admissibility,
            "cells": [list(c) for c in decomp.cells],
        },
    )
    return EXIT_OK if cert.all_passed else EXIT_VIOLATION
