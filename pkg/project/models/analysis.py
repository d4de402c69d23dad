from dataclasses import dataclass

import numpy as np

from models.grid import GridFunction
from schemas.analysis import BlowupSummary


@dataclass(eq=False)
class BlowupProfile:
    """
    v(z) = w(x0 + r z) / d on the reference window, with the fitted K (e.z)_+^(1+s)
    """
    r: float
    d: float
    v: GridFunction
    K: float
    e: np.ndarray
    c1_distance: float
    grad_sup_unit: float

    def summary(self) -> BlowupSummary:
        return BlowupSummary(r=self.r, K=self.K, e=tuple(float(x) for x in self.e),
                             c1_distance=self.c1_distance, grad_sup_unit=self.grad_sup_unit)


@dataclass(eq=False)
class BoundaryQuotient:
    # w / d^power on the band, NaN elsewhere
    quotient: GridFunction
    power: float
    band: tuple
    nodes: int
    minimum: float
    maximum: float

    @property
    def oscillation(self) -> float:
        return self.maximum - self.minimum
