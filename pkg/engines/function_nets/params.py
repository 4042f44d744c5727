# engines/function_nets/params.py

"""
engines.function_nets.params
────────────────────────────────────────────────────────────────────────────
量子化パラメータ (ε1, K) の決定規則。partitions のスケジュール生成からも
参照されるため services から分離している。

  K  = ceil(2c/ε)            c = 1 (real) / √2 (complex)
  ε1 = ε / (2L)              L = 0 のときは +inf (どの分割でもよい)
  c/K + L·ε1 < ε を厳密に再確認し、等号なら K を増やす
"""
from __future__ import annotations

import math
from typing import Literal

Mode = Literal["real", "complex"]


def grid_constant(mode: Mode) -> float:
    """格子の誤差定数 c。complex は実部・虚部を独立に量子化するため √2。"""
    return math.sqrt(2.0) if mode == "complex" else 1.0


def quantization_params(lipschitz: float, eps: float, mode: Mode = "real") -> tuple[float, int]:
    if lipschitz < 0:
        raise ValueError("lipschitz must be non-negative")
    if not 0 < eps <= 2:
        raise ValueError(f"eps must lie in (0, 2], got {eps}")
    c = grid_constant(mode)
    k = math.ceil(2.0 * c / eps)
    eps1 = eps / (2.0 * lipschitz) if lipschitz > 0 else math.inf
    lip_term = lipschitz * eps1 if lipschitz > 0 else 0.0
    while c / k + lip_term >= eps:
        k += 1
    return eps1, k
