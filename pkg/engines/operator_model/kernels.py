# engines/operator_model/kernels.py

"""
engines.operator_model.kernels
────────────────────────────────────────────────────────────────────────────
CompressionKernel: π が掛け算表現なので V*π(f)V = Σ_x f(x)·G_x (G_x = V_x* V_x)。
点ごとの Gram を先に作っておけば、多数の f に対する圧縮が点数に線形なコストで済む。
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from common.exceptions import DimensionMismatchError
from .models import Operator, RepresentationModel


class CompressionKernel:
    """V (dim_π × dim_ρ) と π から G_x を前計算する。"""

    def __init__(self, V: Operator, rep_pi: RepresentationModel, rep_rho: RepresentationModel) -> None:
        if V.shape != (rep_pi.dim, rep_rho.dim):
            raise DimensionMismatchError((rep_pi.dim, rep_rho.dim), tuple(V.shape))
        self.rep_pi = rep_pi
        self.rep_rho = rep_rho
        off = rep_pi.offsets
        grams = []
        for x in range(rep_pi.space.size):
            block = V[off[x]:off[x + 1]]
            grams.append(block.conj().T @ block)
        self.grams = np.stack(grams) if grams else np.zeros((0, rep_rho.dim, rep_rho.dim))
        self._rho_points = rep_rho.coordinate_points()

    def compress(self, values: Sequence[complex] | np.ndarray) -> Operator:
        vals = np.asarray(values, dtype=complex)
        if vals.shape != (self.rep_pi.space.size,):
            raise DimensionMismatchError((self.rep_pi.space.size,), tuple(vals.shape))
        return np.tensordot(vals, self.grams, axes=1)

    def defect(self, values: Sequence[complex] | np.ndarray) -> Operator:
        """V*π(f)V - ρ(f)。"""
        out = self.compress(values)
        vals = np.asarray(values, dtype=complex)
        out[np.diag_indices_from(out)] -= vals[self._rho_points]
        return out
