from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from models.grid import GridFunction
from schemas.kernel import GridSpec, KernelSpec


@dataclass(frozen=True, eq=False)
class FamilyMember:
    spec: KernelSpec
    # c_a: constant or a field on the grid
    drift: Union[float, GridFunction] = 0.0

    def drift_values(self, grid: GridSpec) -> np.ndarray:
        if isinstance(self.drift, GridFunction):
            self.drift.check_grid(grid, 'drift')
            return self.drift.values
        return np.full(grid.shape, float(self.drift))


@dataclass(frozen=True, eq=False)
class FullyNonlinearSpec:
    """
    I u = max_a (L_a u + c_a); normalization asserts I 0 <= 0, i.e. every c_a <= 0
    """
    members: Tuple[FamilyMember, ...]
    normalization: bool = False
