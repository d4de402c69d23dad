from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import toeplitz
from scipy.signal import fftconvolve

from app.core.exception import configuration_exception, grid_mismatch_exception, structural_exception
from models.grid import ZERO_EXTERIOR, Exterior, GridFunction, coordinates
from models.kernel_table import KernelTable
from models.operator import FullyNonlinearSpec
from schemas.kernel import GridSpec

SIGNS = ('plus', 'minus')


def padded_values(table: KernelTable, u: GridFunction, exterior: Optional[Exterior] = None) -> np.ndarray:
    """
    u on the box surrounded by the exterior values of the interaction window
    """
    exterior = exterior or ZERO_EXTERIOR
    m = table.m
    if exterior.pad is None:
        return np.pad(u.values, m, constant_values=exterior.far_value)

    padded = exterior.pad_values(coordinates(u.grid, pad=m))
    padded[(slice(m, -m),) * u.grid.dim] = u.values
    return padded


def far_term(table: KernelTable, exterior: Optional[Exterior] = None) -> np.ndarray:
    """
    int_{|y| > window} u(x+y) K(y) dy at every box node
    """
    exterior = exterior or ZERO_EXTERIOR
    if exterior.far_field is None:
        return np.full(table.grid.shape, table.tail_weight * exterior.far_value)
    return np.broadcast_to(exterior.far_field(*coordinates(table.grid)), table.grid.shape).astype(float)


def _masked(grid: GridSpec, values: np.ndarray, where: Optional[np.ndarray]) -> GridFunction:
    if where is not None:
        where = np.asarray(where, dtype=bool)
        if where.shape != grid.shape:
            grid_mismatch_exception('node set')
        values = np.where(where, values, np.nan)
    return GridFunction(grid, values)


def apply_linear(table: KernelTable,
                 u: GridFunction,
                 where: Optional[np.ndarray] = None,
                 exterior: Optional[Exterior] = None) -> GridFunction:
    """
    L_h u = sum_j w_j (u(x+y_j) - u(x)) + int_{|y|>window} (u(x+y) - u(x)) K dy

    Nodes outside `where` are NaN.
    """
    u.check_grid(table.grid, 'u')
    conv = fftconvolve(padded_values(table, u, exterior), table.stencil, mode='valid')
    values = conv - table.diag_coeff * u.values + far_term(table, exterior)
    return _masked(u.grid, values, where)


def isotropic_weights(table: KernelTable) -> Tuple[np.ndarray, float]:
    """
    stencil and tail of the unit-density kernel of the table's lattice
    """
    mu = np.asarray(table.spec.mu, dtype=float)
    if np.any(mu != mu[0]):
        configuration_exception('extremal operators need an isotropic reference table')
    return table.stencil / mu[0], table.tail_weight / mu[0]


def apply_extremal(sign: str,
                   lam: float,
                   Lam: float,
                   u: GridFunction,
                   table: KernelTable,
                   where: Optional[np.ndarray] = None,
                   exterior: Optional[Exterior] = None) -> GridFunction:
    """
    M+ weighs positive second differences by Lambda and negative ones by lambda; M- swaps them
    """
    if sign not in SIGNS:
        configuration_exception(f'unknown extremal sign {sign!r}')
    if not 0 < lam <= Lam:
        configuration_exception(f'extremal bounds need 0 < lambda <= Lambda, got {lam}, {Lam}')
    u.check_grid(table.grid, 'u')

    up, down = (Lam, lam) if sign == 'plus' else (lam, Lam)
    stencil, tail = isotropic_weights(table)
    padded = padded_values(table, u, exterior)
    m, shape = table.m, u.grid.shape

    out = np.zeros(shape)
    for offset in table.offsets:
        # one representative per pair +-y
        nonzero = offset[np.nonzero(offset)[0][0]]
        if nonzero < 0:
            continue
        weight = stencil[tuple(m + k for k in offset)]
        plus = padded[tuple(slice(m + k, m + k + n) for k, n in zip(offset, shape))]
        minus = padded[tuple(slice(m - k, m - k + n) for k, n in zip(offset, shape))]
        delta = plus + minus - 2 * u.values
        out += weight * (up * np.maximum(delta, 0) - down * np.maximum(-delta, 0))

    mu0 = float(table.spec.mu[0])
    exterior_delta = far_term(table, exterior) / mu0 - tail * u.values
    out += up * np.maximum(exterior_delta, 0) - down * np.maximum(-exterior_delta, 0)
    return _masked(u.grid, out, where)


def check_family(spec: FullyNonlinearSpec, tables: Sequence[KernelTable]) -> GridSpec:
    if not spec.members:
        structural_exception('fully nonlinear operator has no members')
    if len(tables) != len(spec.members):
        structural_exception(f'{len(spec.members)} members but {len(tables)} kernel tables')

    grid = tables[0].grid
    if any(t.grid != grid for t in tables):
        grid_mismatch_exception('kernel table of a family member')
    if len({m.spec.s for m in spec.members}) != 1:
        configuration_exception('family members must share the order s')

    if spec.normalization:
        drifts = np.stack([m.drift_values(grid) for m in spec.members])
        if drifts.max() > 0:
            configuration_exception(f'normalized family has a positive drift (max c_a = {drifts.max()})')
    return grid


def member_values(spec: FullyNonlinearSpec,
                  tables: Sequence[KernelTable],
                  u: GridFunction,
                  exterior: Optional[Exterior] = None) -> np.ndarray:
    """
    stacked L_a u + c_a, member index first
    """
    grid = check_family(spec, tables)
    return np.stack([apply_linear(t, u, exterior=exterior).values + m.drift_values(grid)
                     for m, t in zip(spec.members, tables)])


def apply_fully_nonlinear(spec: FullyNonlinearSpec,
                          tables: Sequence[KernelTable],
                          u: GridFunction,
                          where: Optional[np.ndarray] = None,
                          exterior: Optional[Exterior] = None) -> Tuple[GridFunction, np.ndarray]:
    stack = member_values(spec, tables, u, exterior)
    # argmax picks the lowest index among ties
    argmax = np.argmax(stack, axis=0)
    values = np.take_along_axis(stack, argmax[None], axis=0)[0]
    return _masked(u.grid, values, where), argmax


class LatticeOperator:
    """
    -L_h written as A u - b on the box nodes.

    A acts on values with zero exterior, b = L_h 0 carries the exterior data
    (plus the drift c_a for families). With a policy, node x uses the row of
    member policy[x].
    """

    def __init__(self,
                 tables: Sequence[KernelTable],
                 policy: Optional[np.ndarray] = None,
                 exterior: Optional[Exterior] = None,
                 drifts: Optional[Sequence[np.ndarray]] = None):
        self.tables = tuple(tables)
        self.grid = self.tables[0].grid
        if any(t.grid != self.grid for t in self.tables):
            grid_mismatch_exception('kernel table')
        self.exterior = exterior or ZERO_EXTERIOR
        self.policy = np.zeros(self.grid.shape, dtype=int) if policy is None else np.asarray(policy, dtype=int)
        self.active = [int(a) for a in np.unique(self.policy)]

        zero = GridFunction.zeros(self.grid)
        self.diagonal = np.zeros(self.grid.shape)
        self.b = np.zeros(self.grid.shape)
        for a in self.active:
            rows = self.policy == a
            self.diagonal[rows] = self.tables[a].diag_coeff
            b = apply_linear(self.tables[a], zero, exterior=self.exterior).values
            if drifts is not None:
                b = b + drifts[a]
            self.b[rows] = b[rows]
        self._dense: Optional[np.ndarray] = None

    @property
    def symmetric(self) -> bool:
        return len(self.active) == 1

    def matvec(self, values: np.ndarray) -> np.ndarray:
        values = values.reshape(self.grid.shape)
        out = np.empty(self.grid.shape)
        for a in self.active:
            table = self.tables[a]
            rows = self.policy == a
            conv = fftconvolve(np.pad(values, table.m), table.stencil, mode='valid')
            out[rows] = table.diag_coeff * values[rows] - conv[rows]
        return out

    def residual(self, values: np.ndarray) -> np.ndarray:
        """
        A u - b, i.e. -L_h u (minus the drift)
        """
        return self.matvec(values) - self.b

    def dense(self) -> np.ndarray:
        """
        assembled matrix, 1D only
        """
        if self.grid.dim != 1:
            structural_exception('dense assembly is only available in 1D')
        if self._dense is None:
            size = self.grid.shape[0]
            matrix = np.empty((size, size))
            for a in self.active:
                table = self.tables[a]
                column = np.zeros(size)
                column[0] = table.diag_coeff
                reach = min(table.m, size - 1)
                column[1:reach + 1] = -table.stencil[table.m + 1:table.m + reach + 1]
                rows = self.policy == a
                matrix[rows] = toeplitz(column)[rows]
            self._dense = matrix
        return self._dense
