from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

from models.grid import GridFunction, node_point

RAY_STEPS = 4


@dataclass(eq=False)
class FreeBoundaryData:
    contact_mask: np.ndarray
    # lattice indices, one row per boundary cell
    boundary_cells: np.ndarray
    distance: GridFunction
    normals: Dict[Tuple[int, ...], np.ndarray] = field(default_factory=dict)

    @property
    def grid(self):
        return self.distance.grid

    def boundary_points(self):
        return [node_point(self.grid, idx) for idx in self.boundary_cells]

    def ray_distance(self, idx: Sequence[int], steps: int = RAY_STEPS) -> float:
        """
        d at the node nearest to x0 + steps * h * n; NaN without a normal or past the box
        """
        normal = self.normals.get(tuple(int(i) for i in idx))
        if normal is None:
            return float('nan')
        target = np.rint(np.asarray(idx, dtype=float) + steps * np.asarray(normal)).astype(int)
        if np.any(target < 0) or np.any(target >= np.array(self.grid.shape)):
            return float('nan')
        return float(self.distance.values[tuple(target)])
