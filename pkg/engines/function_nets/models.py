# engines/function_nets/models.py

"""
engines.function_nets.models
────────────────────────────────────────────────────────────────────────────
  • ScalarFunction     : 点番号順の複素値 + 主張する Lipschitz 定数 + sup 上界
  • SimpleFunction     : 分割セル上で定数の格子値関数 s = Σ (格子値)·χ_cell
  • QuantizationResult : quantize の出力 (保証誤差と実測 sup 誤差)
  • NetSizeReport      : 格子値単関数の個数 (厳密な整数)
"""
from __future__ import annotations

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from engines.partitions.models import Partition

LIPSCHITZ_SLACK = 1e-12


class ScalarFunction(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray = Field(..., description="点番号順の complex128 配列")
    claimed_lipschitz: float = Field(..., ge=0)
    sup_bound: float = 1.0

    @model_validator(mode="after")
    def _freeze(self) -> "ScalarFunction":
        if self.values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        self.values.setflags(write=False)
        return self

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.imag(self.values) == 0))


class SimpleFunction(BaseModel):
    """
    level_of[c] = (a, b) は格子値 (a + ib)/K を表す (real モードでは b = 0)。
    """

    model_config = ConfigDict(frozen=True)

    partition: Partition
    level_of: tuple[tuple[int, int], ...]
    K: int = Field(..., ge=1)
    mode: Literal["real", "complex"] = "real"

    @model_validator(mode="after")
    def _on_grid(self) -> "SimpleFunction":
        if len(self.level_of) != self.partition.n_cells:
            raise ValueError("one grid value per cell is required")
        for a, b in self.level_of:
            if abs(a) > self.K or abs(b) > self.K:
                raise ValueError("grid index outside [-K, K]")
            if self.mode == "real" and b != 0:
                raise ValueError("real mode grid values have no imaginary part")
        return self

    def cell_values(self) -> np.ndarray:
        return np.array([complex(a, b) / self.K for a, b in self.level_of], dtype=complex)

    def values(self) -> np.ndarray:
        """点番号順の評価値。"""
        return self.cell_values()[np.asarray(self.partition.cell_of, dtype=int)]


class QuantizationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    simple: SimpleFunction
    error_bound: float = Field(..., description="c/K + L·radius_bound")
    sup_error: float = Field(..., ge=0, description="max_x |f(x) - s(x)| (実測)")

    @property
    def within_bound(self) -> bool:
        return self.sup_error <= self.error_bound


class NetSizeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    cells: int = Field(..., ge=0, description="M")
    K: int = Field(..., ge=1)
    mode: Literal["real", "complex"]
    exact: int = Field(..., description="(2K+1)^M または ((2K+1)^2)^M")
    nonnegative_grid: int = Field(..., description="格子 {0..K}/K での個数 (K+1)^M")
    stated_formula: int = Field(..., description="比較用の M^(K+1)")
