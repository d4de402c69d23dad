from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from app.core.exception import grid_mismatch_exception, structural_exception
from schemas.kernel import GridSpec

Coords = Tuple[np.ndarray, ...]


def axis(grid: GridSpec) -> np.ndarray:
    return grid.h * np.arange(-grid.n, grid.n + 1, dtype=float)


def coordinates(grid: GridSpec, pad: int = 0) -> Coords:
    """
    node coordinates (ij indexing); pad adds that many nodes on every side
    """
    k = np.arange(-grid.n - pad, grid.n + pad + 1, dtype=float)
    return tuple(np.meshgrid(*([grid.h * k] * grid.dim), indexing='ij'))


def radius(grid: GridSpec, x0: Sequence[float]) -> np.ndarray:
    coords = coordinates(grid)
    return np.sqrt(sum((c - x) ** 2 for c, x in zip(coords, x0)))


def ball_mask(grid: GridSpec, x0: Sequence[float], r: float) -> np.ndarray:
    return radius(grid, x0) <= r + 1e-9 * grid.h


def node_index(grid: GridSpec, x: Sequence[float]) -> Tuple[int, ...]:
    idx = tuple(int(round(xi / grid.h)) + grid.n for xi in x)
    if any(i < 0 or i > 2 * grid.n for i in idx):
        structural_exception(f'point {tuple(x)} lies outside the box of half-width {grid.R}')
    return idx


def node_point(grid: GridSpec, idx: Sequence[int]) -> Tuple[float, ...]:
    return tuple(grid.h * (int(i) - grid.n) for i in idx)


@dataclass(eq=False)
class GridFunction:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            structural_exception(f'values of shape {self.values.shape} do not fit grid shape {self.grid.shape}')

    @classmethod
    def zeros(cls, grid: GridSpec) -> 'GridFunction':
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_callable(cls, grid: GridSpec, fn: Callable[..., np.ndarray]) -> 'GridFunction':
        return cls(grid, np.broadcast_to(fn(*coordinates(grid)), grid.shape).astype(float))

    def check_grid(self, other: GridSpec, what: str = 'grid function') -> None:
        if other != self.grid:
            grid_mismatch_exception(what)

    def at(self, x: Sequence[float]) -> float:
        return float(self.values[node_index(self.grid, x)])

    def __sub__(self, other: 'GridFunction') -> 'GridFunction':
        other.check_grid(self.grid)
        return GridFunction(self.grid, self.values - other.values)

    def __neg__(self) -> 'GridFunction':
        return GridFunction(self.grid, -self.values)

    def copy(self) -> 'GridFunction':
        return GridFunction(self.grid, self.values.copy())


@dataclass(frozen=True)
class Exterior:
    """
    Values of a field outside the box.

    pad: closed form used on the padded ring inside the interaction window,
         called with coordinate arrays; None means the constant far_value.
    far_field: callable(coords) returning the exterior integral
         int_{|y|>window} g(x+y) K(y) dy at the box nodes; None means tail * far_value.
    """
    far_value: float = 0.0
    pad: Optional[Callable[..., np.ndarray]] = None
    far_field: Optional[Callable[..., np.ndarray]] = None

    def pad_values(self, coords: Coords) -> np.ndarray:
        if self.pad is None:
            return np.full(coords[0].shape, self.far_value)
        return np.broadcast_to(self.pad(*coords), coords[0].shape).astype(float)


ZERO_EXTERIOR = Exterior()
