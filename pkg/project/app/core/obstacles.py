from typing import Callable, Optional

import numpy as np

from models.grid import ZERO_EXTERIOR, Exterior, GridFunction
from schemas.experiment import ObstacleSpec
from schemas.kernel import GridSpec

# Lipschitz only, outside the C^{2,1} hypothesis on obstacles
OUT_OF_HYPOTHESIS = frozenset({'tent'})


def _radius(x) -> np.ndarray:
    return np.sqrt(sum(c * c for c in x))


def obstacle_function(spec: ObstacleSpec) -> Optional[Callable[..., np.ndarray]]:
    a, b = spec.a, spec.b
    if spec.catalog == 'bump':
        return lambda *x: b * np.clip(1 - (_radius(x) / a) ** 2, 0.0, None) ** 2
    if spec.catalog == 'cosine_bump':
        return lambda *x: b * np.where(_radius(x) < a, np.cos(np.pi * _radius(x) / (2 * a)) ** 2, 0.0)
    if spec.catalog == 'tent':
        return lambda *x: b * np.clip(1 - _radius(x) / a, 0.0, None)
    return None


def in_hypothesis(spec: ObstacleSpec) -> bool:
    return spec.catalog not in OUT_OF_HYPOTHESIS


def make_obstacle(spec: ObstacleSpec, grid: GridSpec) -> GridFunction:
    fn = obstacle_function(spec)
    if fn is None:
        return GridFunction(grid, np.asarray(spec.values, dtype=float).reshape(grid.shape))
    return GridFunction.from_callable(grid, fn)


def obstacle_exterior(spec: ObstacleSpec, grid: GridSpec) -> Exterior:
    """
    zero rule: u = 0 outside the box; obstacle rule: u = phi there
    """
    fn = obstacle_function(spec)
    if grid.exterior_rule == 'zero' or fn is None:
        return ZERO_EXTERIOR
    far = float(fn(*[np.array(1e6 * grid.R)] * grid.dim))
    return Exterior(far_value=far, pad=fn)
