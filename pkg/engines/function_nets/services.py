# engines/function_nets/services.py

"""
engines.function_nets.services
────────────────────────────────────────────────────────────────────────────
Lipschitz 球 C_L(X) の操作。
  1) lipschitz_constant … max_{x≠y} |f(x) - f(y)| / d(x, y)
  2) make_function      … 不変条件 (Lipschitz, sup) を検証して ScalarFunction を作る
  3) quantize           … セル中心の値に最も近い格子値へ丸める
  4) net_size           … 格子値単関数の個数 (厳密な多倍長整数)
  5) sample_lipschitz   … クランプ付き min 拡張によるテスト関数サンプラ
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
import structlog

from common.utils import derive_rng
from engines.metric_core.models import FiniteMetricSpace
from engines.partitions.models import Partition
from .models import LIPSCHITZ_SLACK, NetSizeReport, QuantizationResult, ScalarFunction, SimpleFunction
from .params import Mode, grid_constant, quantization_params

logger = structlog.get_logger(__name__)

__all__ = [
    "lipschitz_constant",
    "make_function",
    "quantize",
    "quantization_params",
    "net_size",
    "sample_lipschitz",
]


def lipschitz_constant(values: Sequence[complex] | np.ndarray, space: FiniteMetricSpace) -> float:
    vals = np.asarray(values, dtype=complex)
    if space.size < 2:
        return 0.0
    diff = np.abs(vals[:, None] - vals[None, :])
    off = ~np.eye(space.size, dtype=bool)
    return float(np.max(diff[off] / space.dist[off]))


def make_function(
    values: Sequence[complex] | np.ndarray,
    space: FiniteMetricSpace,
    *,
    claimed_lipschitz: float | None = None,
    sup_bound: float = 1.0,
) -> ScalarFunction:
    """
    点ごとの値から ScalarFunction を作る。claimed_lipschitz を省略すると実測値を使う。
    主張値・sup 上界を破る場合は ValueError。
    """
    vals = np.array(values, dtype=complex)
    if vals.shape != (space.size,):
        raise ValueError(f"expected {space.size} values, got shape {vals.shape}")
    measured = lipschitz_constant(vals, space)
    claimed = measured if claimed_lipschitz is None else float(claimed_lipschitz)
    if measured > claimed + LIPSCHITZ_SLACK:
        raise ValueError(f"function is {measured!r}-Lipschitz, claimed {claimed!r}")
    if vals.size and float(np.max(np.abs(vals))) > sup_bound + LIPSCHITZ_SLACK:
        raise ValueError("sup norm exceeds sup_bound")
    return ScalarFunction(values=vals, claimed_lipschitz=claimed, sup_bound=sup_bound)


# ────────────────────────────────────────────
# 量子化
# ────────────────────────────────────────────
def _grid_index(x: np.ndarray, K: int) -> np.ndarray:
    # 最近格子点。ちょうど中間なら小さい方 (ceil(Kx - 1/2))
    return np.clip(np.ceil(K * x - 0.5), -K, K).astype(int)


def quantize(f: ScalarFunction, partition: Partition, K: int, mode: Mode = "real") -> QuantizationResult:
    if K < 1:
        raise ValueError("K must be positive")
    if mode == "real" and not f.is_real:
        raise ValueError("real mode quantization needs a real-valued function")
    at_centers = f.values[np.asarray(partition.centers, dtype=int)]
    re = _grid_index(at_centers.real, K)
    im = _grid_index(at_centers.imag, K) if mode == "complex" else np.zeros_like(re)
    simple = SimpleFunction(
        partition=partition,
        level_of=tuple((int(a), int(b)) for a, b in zip(re, im)),
        K=K,
        mode=mode,
    )
    sup_error = float(np.max(np.abs(f.values - simple.values()))) if f.values.size else 0.0
    bound = grid_constant(mode) / K + f.claimed_lipschitz * partition.radius_bound
    return QuantizationResult(simple=simple, error_bound=bound, sup_error=sup_error)


def net_size(cells: int, K: int, mode: Mode = "real") -> NetSizeReport:
    """
    M セル・格子 {-K..K}/K 上の単関数の個数。
    比較用に非負格子 {0..K}/K の個数 (K+1)^M と M^(K+1) も返す。
    """
    if cells < 0 or K < 1:
        raise ValueError("cells must be >= 0 and K >= 1")
    per_cell = (2 * K + 1) ** 2 if mode == "complex" else 2 * K + 1
    return NetSizeReport(
        cells=cells,
        K=K,
        mode=mode,
        exact=per_cell ** cells,
        nonnegative_grid=(K + 1) ** cells,
        stated_formula=cells ** (K + 1),
    )


# ────────────────────────────────────────────
# サンプラ
# ────────────────────────────────────────────
def _min_extension(space: FiniteMetricSpace, lipschitz: float, rng: np.random.Generator) -> np.ndarray:
    n = space.size
    n_anchor = int(rng.integers(1, n + 1))
    anchors = np.sort(rng.choice(n, size=n_anchor, replace=False))
    v = rng.uniform(-1.0, 1.0, size=n_anchor)
    ext = np.min(v[None, :] + lipschitz * space.dist[:, anchors], axis=1)
    return np.clip(ext, -1.0, 1.0)


def sample_lipschitz(
    space: FiniteMetricSpace,
    lipschitz: float,
    count: int,
    seed: int,
    mode: Mode = "real",
) -> list[ScalarFunction]:
    """
    f(x) = clamp(min_p (v_p + L·d(x, p)), -1, 1) を count 個生成する。
    complex モードは独立な 2 本を (f1 + i f2)/√2 で組み合わせる。
    """
    if lipschitz < 0:
        raise ValueError("lipschitz must be non-negative")
    rng = derive_rng(seed, "sample_lipschitz", space.name, repr(float(lipschitz)), mode)
    out = []
    for _ in range(count):
        if mode == "complex":
            re = _min_extension(space, lipschitz, rng)
            im = _min_extension(space, lipschitz, rng)
            values = (re + 1j * im) / math.sqrt(2.0)
        else:
            values = _min_extension(space, lipschitz, rng).astype(complex)
        out.append(make_function(values, space, claimed_lipschitz=lipschitz))
    logger.debug("lipschitz sample drawn", space=space.name, L=lipschitz, count=count, mode=mode)
    return out
