# engines/operator_model/services.py

"""
engines.operator_model.services
────────────────────────────────────────────────────────────────────────────
有限次元の掛け算表現と特異値による ε-rank。
有限集合 X 上の C(X) の表現はすべて重複度付き掛け算表現とユニタリ同値なので、
このサロゲートで一般性は失われない。

  1) uniform / random / covering_representation … 表現の構成
  2) mult_operator, spectral_projection          … f^ρ と χ_cell^ρ
  3) eps_rank, eps_rank_profile                  … #{σ > ε} (打ち切り SVD が最良近似)
  4) compress                                    … V* A V (V の等長性を検証)
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as la
import structlog

from common.exceptions import DimensionMismatchError, NotIsometryError
from common.utils import derive_rng
from engines.metric_core.models import FiniteMetricSpace
from .models import EpsRankResult, Operator, RepresentationModel

logger = structlog.get_logger(__name__)

ISOMETRY_TOL = 1e-9
RANK_CUTOFF = 1e-8


# ────────────────────────────────────────────
# 表現
# ────────────────────────────────────────────
def uniform_representation(space: FiniteMetricSpace, multiplicity: int) -> RepresentationModel:
    return RepresentationModel(space=space, multiplicity=(int(multiplicity),) * space.size)


def random_representation(space: FiniteMetricSpace, max_multiplicity: int, seed: int) -> RepresentationModel:
    rng = derive_rng(seed, "random_representation", space.name)
    mult = rng.integers(1, max_multiplicity + 1, size=space.size)
    return RepresentationModel(space=space, multiplicity=tuple(int(m) for m in mult))


def covering_representation(
    space: FiniteMetricSpace,
    truncation: int,
    rho: RepresentationModel,
) -> RepresentationModel:
    """
    π の有限サロゲート。重複度 truncation + max m_ρ の一様表現。
    先頭 truncation 方向が E_k^π を、残りが ρ の残差ブロックを受け持つ。
    """
    if truncation < 1:
        raise ValueError("truncation must be positive")
    rep = uniform_representation(space, truncation + max(rho.multiplicity))
    logger.debug("covering representation", space=space.name, truncation=truncation, dim=rep.dim)
    return rep


# ────────────────────────────────────────────
# 演算子
# ────────────────────────────────────────────
def mult_operator(rep: RepresentationModel, values: Sequence[complex] | np.ndarray) -> Operator:
    vals = np.asarray(values, dtype=complex)
    if vals.shape != (rep.space.size,):
        raise DimensionMismatchError((rep.space.size,), tuple(vals.shape))
    return np.diag(vals[rep.coordinate_points()])


def spectral_projection(rep: RepresentationModel, cell: Iterable[int]) -> Operator:
    mask = np.zeros(rep.space.size)
    mask[list(cell)] = 1.0
    return np.diag(mask[rep.coordinate_points()])


def isometry_defect(V: Operator) -> float:
    gram = V.conj().T @ V
    return float(la.norm(gram - np.eye(gram.shape[0]), 2)) if gram.size else 0.0


def compress(V: Operator, A: Operator, *, tol: float = ISOMETRY_TOL) -> Operator:
    """V* A V。V は H_ρ → H_π の等長作用素 (‖V*V - I‖ ≤ tol) でなければならない。"""
    if A.ndim != 2 or A.shape[0] != A.shape[1] or V.shape[0] != A.shape[0]:
        raise DimensionMismatchError((V.shape[0], V.shape[0]), tuple(A.shape))
    defect = isometry_defect(V)
    if defect > tol:
        raise NotIsometryError(defect, tol)
    return V.conj().T @ A @ V


# ────────────────────────────────────────────
# ε-rank
# ────────────────────────────────────────────
def _singular_values(A: Operator) -> np.ndarray:
    if A.size == 0:
        return np.zeros(0)
    return la.svdvals(A)


def eps_rank(A: Operator, eps: float, *, with_witness: bool = False) -> EpsRankResult:
    """
    rank = #{σ_i > eps} = min{rank B : ‖A - B‖ ≤ eps}。
    with_witness=True で打ち切り SVD (最良近似子) を添付する。
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if with_witness and A.size:
        u, s, vh = la.svd(A)
        rank = int(np.count_nonzero(s > eps))
        witness = (u[:, :rank] * s[:rank]) @ vh[:rank]
    else:
        s = _singular_values(A)
        rank = int(np.count_nonzero(s > eps))
        witness = np.zeros_like(A) if with_witness else None
    return EpsRankResult(
        eps=eps,
        rank=rank,
        singular_values=tuple(float(v) for v in s),
        witness=witness,
    )


def eps_rank_profile(A: Operator, eps_list: Iterable[float]) -> list[EpsRankResult]:
    """同じ特異値で複数の許容誤差を評価する (ε について非増加)。"""
    s = tuple(float(v) for v in _singular_values(A))
    return [
        EpsRankResult(eps=eps, rank=sum(1 for v in s if v > eps), singular_values=s)
        for eps in eps_list
    ]


def numerical_rank(A: Operator, cutoff: float = RANK_CUTOFF) -> int:
    return int(np.count_nonzero(_singular_values(A) > cutoff))
