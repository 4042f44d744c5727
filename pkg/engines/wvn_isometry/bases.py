# engines/wvn_isometry/bases.py

"""
engines.wvn_isometry.bases
────────────────────────────────────────────────────────────────────────────
E_k = span{P e_j | P ∈ R_k, j ≤ k} を分割セルごとに直交分解して基底を作る。

E_k も E_{k+1} も A_k (R_k の指示関数の張る代数) で不変なので、
P(E_{k+1} ⊖ E_k) = P·E_{k+1} ⊖ P·E_k をセル P のスロット上だけで計算できる。

  ブロック (m, P) のラベル P はレベル max(m, 1) のセル。
  m = 0        : 旧張る空間 なし、候補 {P e_1}
  1 ≤ m < D    : 旧 {P e_j | j ≤ m}、候補 {Q e_j | Q ∈ R_{m+1}, Q ⊆ P, j ≤ m+1} (j 優先, 次に Q)
  m = D        : 旧 {P e_j | j ≤ D}、候補 P のスロットの標準基底 (重複度番号優先, 次に点)

セル内の局所座標は (重複度番号, 点) の順に並べる。π の打ち切りを増やしても
追加座標は末尾の 0 になるだけなので、先頭側の列は打ち切りに依存しない。
"""
from __future__ import annotations

import numpy as np
import structlog
from numpy.linalg import norm

from common.exceptions import InsufficientMultiplicityError, SeedBasisError
from engines.operator_model.models import RepresentationModel
from engines.partitions.models import PartitionHierarchy
from .models import BlockKey, DiagonalizingBasis

logger = structlog.get_logger(__name__)

DROP_TOL = 1e-10
SEED_TOL = 1e-10


# ────────────────────────────────────────────
# 修正 Gram-Schmidt (再直交化つき)
# ────────────────────────────────────────────
def _orthogonalize(x: np.ndarray, Y: np.ndarray) -> np.ndarray:
    for q in Y.T:
        x = x - (q.conj() @ x) * q
    return x


def mgs_extend(old: list[np.ndarray], candidates: list[np.ndarray], length: int, dtype) -> np.ndarray:
    """
    old の張る空間に直交する候補方向を順に正規直交化して返す (length × 新規本数)。
    候補は先に正規化し、直交化後のノルムが DROP_TOL 未満なら従属として捨てる。
    """
    Y = np.zeros((length, length), dtype=dtype)
    count = 0

    def push(v: np.ndarray) -> None:
        nonlocal count
        n0 = norm(v)
        if count == length or n0 == 0.0:
            return
        x = v.astype(dtype) / n0
        x = _orthogonalize(x, Y[:, :count])
        x = _orthogonalize(x, Y[:, :count])  # 再直交化
        nrm = norm(x)
        if nrm < DROP_TOL:
            return
        Y[:, count] = x / nrm
        count += 1

    for v in old:
        push(v)
    n_old = count
    for v in candidates:
        push(v)
    return Y[:, n_old:count]


# ────────────────────────────────────────────
# ブロック分解
# ────────────────────────────────────────────
def _local_slots(rep: RepresentationModel, points: tuple[int, ...]) -> np.ndarray:
    """セル内の座標を (重複度番号, 点) 順に並べた大域座標番号。"""
    off = rep.offsets
    top = max(rep.multiplicity[p] for p in points)
    return np.array(
        [off[p] + a for a in range(top) for p in points if a < rep.multiplicity[p]],
        dtype=int,
    )


def _diagonalize(
    rep: RepresentationModel,
    hierarchy: PartitionHierarchy,
    seeds: np.ndarray,
    side: str,
) -> DiagonalizingBasis:
    depth = hierarchy.depth
    n_seed = seeds.shape[1]
    dtype = np.result_type(seeds.dtype, np.float64)
    coord_points = rep.coordinate_points()

    keys: list[BlockKey] = []
    widths: list[int] = []
    pieces: list[np.ndarray] = []

    for m in range(depth + 1):
        level = max(m, 1)
        part = hierarchy.level(level)
        for cid, points in enumerate(part.cells()):
            idx = _local_slots(rep, points)
            local = seeds[idx]  # 列 j が P e_{j+1} の局所表示
            if m == 0:
                old: list[np.ndarray] = []
                cand = [local[:, 0]]
            elif m < depth:
                old = [local[:, j] for j in range(min(m, n_seed))]
                fine = np.asarray(hierarchy.level(m + 1).cell_of)[coord_points[idx]]
                cand = [
                    local[:, j] * (fine == q)
                    for j in range(min(m + 1, n_seed))
                    for q in hierarchy.children_of(m, cid)
                ]
            else:
                old = [local[:, j] for j in range(min(depth, n_seed))]
                cand = list(np.eye(len(idx), dtype=dtype))
            new = mgs_extend(old, cand, len(idx), dtype)
            cols = np.zeros((rep.dim, new.shape[1]), dtype=dtype)
            cols[idx] = new
            keys.append((m, cid))
            widths.append(new.shape[1])
            pieces.append(cols)

    matrix = np.concatenate(pieces, axis=1)
    e_dims = tuple(sum(w for (m, _), w in zip(keys, widths) if m < k) for k in range(1, depth + 1))
    if matrix.shape[1] != rep.dim:
        # 各ブロックがセルのスロットを使い切るので本来起こらない
        raise AssertionError(f"basis has {matrix.shape[1]} columns for dimension {rep.dim}")
    logger.debug("diagonalizing basis", side=side, space=rep.space.name, dim=rep.dim, e_dims=e_dims)
    return DiagonalizingBasis(
        side=side,  # type: ignore[arg-type]
        depth=depth,
        keys=tuple(keys),
        widths=tuple(widths),
        matrix=matrix,
        e_dimensions=e_dims,
    )


def rho_basis(
    rep: RepresentationModel,
    hierarchy: PartitionHierarchy,
    seed_basis: np.ndarray | None = None,
) -> DiagonalizingBasis:
    """
    ρ 側の対角化基底。seed_basis (dim × r、正規直交列) を省略すると標準基底を使い、
    そのとき E_k^ρ = span{e_1, …, e_k}。
    """
    seeds = np.eye(rep.dim) if seed_basis is None else np.asarray(seed_basis)
    if seeds.ndim != 2 or seeds.shape[0] != rep.dim or seeds.shape[1] < 1:
        raise SeedBasisError(float("nan"))
    gram = seeds.conj().T @ seeds
    defect = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    if defect > SEED_TOL:
        raise SeedBasisError(defect)
    return _diagonalize(rep, hierarchy, seeds, "rho")


def pi_seed_vectors(rep: RepresentationModel, count: int) -> np.ndarray:
    """e_j = Σ_x (点 x のスロットの重複度番号 j-1 の座標) / √|X|。"""
    off = rep.offsets
    seeds = np.zeros((rep.dim, count))
    scale = 1.0 / np.sqrt(rep.space.size)
    for j in range(count):
        for x in range(rep.space.size):
            seeds[off[x] + j, j] = scale
    return seeds


def pi_basis_maximal(rep: RepresentationModel, hierarchy: PartitionHierarchy) -> DiagonalizingBasis:
    """
    π 側の極大基底。各セル P と j ≤ depth について P e_j は互いに直交な非零ベクトルなので
    dim E_k^π = k·|R_k| を達成する。
    """
    if not rep.is_uniform:
        raise ValueError("pi representation must have uniform multiplicity")
    multiplicity = rep.multiplicity[0]
    if multiplicity < hierarchy.depth:
        raise InsufficientMultiplicityError(multiplicity, hierarchy.depth)
    return _diagonalize(rep, hierarchy, pi_seed_vectors(rep, hierarchy.depth), "pi")
