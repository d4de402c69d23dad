from dataclasses import dataclass

import numpy as np

from schemas.kernel import GridSpec, KernelSpec


@dataclass(frozen=True, eq=False)
class KernelTable:
    """
    Quadrature of one operator on one lattice.

    stencil holds the weight of every offset y = h*(k - m) of the window
    (centre entry 0); offsets/weights list the nonzero entries. tail_sectors
    are the exterior weights int_{|y|>window} K per angular sector (1D: the two
    half-lines) and tail_weight is their sum.
    """
    spec: KernelSpec
    grid: GridSpec
    window_radius: float
    quadrature: str
    stencil: np.ndarray
    offsets: np.ndarray
    weights: np.ndarray
    tail_sectors: np.ndarray
    tail_weight: float

    @property
    def m(self) -> int:
        return (self.stencil.shape[0] - 1) // 2

    @property
    def diag_coeff(self) -> float:
        return float(self.weights.sum() + self.tail_weight)

    def weight_at(self, offset) -> float:
        return float(self.stencil[tuple(int(k) + self.m for k in offset)])
