import math
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from app.core.exception import configuration_exception, structural_exception
from internal.logging import app_logger
from models.kernel_table import KernelTable
from schemas.kernel import GridSpec, KernelSpec, ValidationCheck, ValidationReport

QUADRATURES = ('moment', 'cell')
MIN_ANGLES_2D = 64
EVENNESS_RTOL = 1e-12

_CELL_GAUSS_ORDER = 6
_CORE_GAUSS_ORDER = 8
# lattice neighbours of the origin, counter-clockwise from the first axis
_NEIGHBOURS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def isotropic_spec(dim: int, s: float, mu: float = 1.0, samples: Optional[int] = None) -> KernelSpec:
    if samples is None:
        samples = 2 if dim == 1 else MIN_ANGLES_2D
    return KernelSpec(dim=dim, s=s, lam=mu, Lam=mu, mu=(float(mu),) * samples)


def sample_angles(spec: KernelSpec) -> np.ndarray:
    """
    2D sample angles of mu; in 1D the two directions +1, -1 (as angles 0, pi)
    """
    count = len(spec.mu)
    return 2 * np.pi * np.arange(count) / count


def angular_density(spec: KernelSpec, theta: np.ndarray) -> np.ndarray:
    """
    mu(theta) by periodic linear interpolation of the samples
    """
    return np.interp(np.mod(theta, 2 * np.pi), sample_angles(spec), np.asarray(spec.mu, dtype=float),
                     period=2 * np.pi)


def validate_kernel_spec(spec: KernelSpec) -> ValidationReport:
    """
    Check order, sampling, evenness and ellipticity of mu.
    Structural problems become failed checks, nothing is raised.
    """
    mu = np.asarray(spec.mu, dtype=float)
    checks = [ValidationCheck(name='order', passed=0 < spec.s < 1, detail=f's={spec.s}'),
              ValidationCheck(name='mu_nonempty', passed=mu.size > 0, detail=f'{mu.size} samples')]

    if spec.dim == 1:
        sampled = mu.size == 2
        expected = 'exactly 2 samples (mu(+1), mu(-1))'
    else:
        sampled = mu.size >= MIN_ANGLES_2D and mu.size % 2 == 0
        expected = f'an even number of at least {MIN_ANGLES_2D} samples'
    checks.append(ValidationCheck(name='mu_samples', passed=sampled, detail=f'{mu.size} samples, need {expected}'))

    finite = mu.size > 0 and bool(np.all(np.isfinite(mu)))
    checks.append(ValidationCheck(name='mu_finite', passed=finite))

    if sampled and finite:
        # mu(theta + pi); in 1D this swaps the two half-lines
        partner = np.roll(mu, mu.size // 2)
        deviation = float(np.abs(mu - partner).max())
        even = deviation <= EVENNESS_RTOL * max(1.0, float(np.abs(mu).max()))
        checks.append(ValidationCheck(name='evenness', passed=even, detail=f'max |mu(t) - mu(-t)| = {deviation}'))
    else:
        checks.append(ValidationCheck(name='evenness', passed=False, detail='not checked: bad samples'))

    checks.append(ValidationCheck(name='ellipticity', passed=0 < spec.lam <= spec.Lam,
                                  detail=f'lambda={spec.lam}, Lambda={spec.Lam}'))
    if finite:
        checks.append(ValidationCheck(name='lower_bound', passed=float(mu.min()) >= spec.lam,
                                      detail=f'min mu = {mu.min()}'))
        checks.append(ValidationCheck(name='upper_bound', passed=float(mu.max()) <= spec.Lam,
                                      detail=f'max mu = {mu.max()}'))
    else:
        checks.append(ValidationCheck(name='lower_bound', passed=False, detail='not checked'))
        checks.append(ValidationCheck(name='upper_bound', passed=False, detail='not checked'))

    return ValidationReport(passed=all(c.passed for c in checks), checks=checks)


def tail_sectors(spec: KernelSpec, window_radius: float) -> np.ndarray:
    """
    int_{|y| > window} mu(y/|y|) |y|^(-n-2s) dy, split by sector
    """
    s = spec.s
    radial = window_radius ** (-2 * s) / (2 * s)
    mu = np.asarray(spec.mu, dtype=float)
    if spec.dim == 1:
        return mu * radial
    return mu * (2 * np.pi / mu.size) * radial


def build_kernel_table(spec: KernelSpec,
                       grid: GridSpec,
                       window_radius: Optional[float] = None,
                       quadrature: str = 'moment') -> KernelTable:
    """
    Tabulate the second-difference quadrature of the operator.

    moment: w_j = int_cell |y|^2 K / |y_j|^2 (exact on quadratics)
    cell:   w_j = int_cell K
    The cell of the origin is folded into the nearest offsets by its second moment.
    """
    report = validate_kernel_spec(spec)
    if not report.passed:
        configuration_exception('invalid kernel spec: ' + '; '.join(report.failures()))
    if spec.dim != grid.dim:
        structural_exception(f'kernel of dimension {spec.dim} on a {grid.dim}D grid')
    if quadrature not in QUADRATURES:
        configuration_exception(f'unknown quadrature {quadrature!r}, expected one of {QUADRATURES}')

    wr = 2 * grid.R if window_radius is None else float(window_radius)
    if wr < 2 * grid.h * (1 - 1e-12):
        configuration_exception(f'window radius {wr} is smaller than 2h = {2 * grid.h}')
    if wr > 2 * grid.R * (1 + 1e-12):
        configuration_exception(f'window radius {wr} exceeds 2R = {2 * grid.R}')

    m = int(math.floor(wr / grid.h + 1e-9))
    if spec.dim == 1:
        stencil = _stencil_1d(spec, grid.h, wr, m, quadrature)
    else:
        stencil = _stencil_2d(spec, grid.h, wr, m, quadrature)

    # exact y -> -y symmetry
    stencil = 0.5 * (stencil + np.flip(stencil))
    positive = stencil > 0
    offsets = np.argwhere(positive) - m
    weights = stencil[positive]
    sectors = tail_sectors(spec, wr)

    app_logger.debug(f'kernel table: dim={spec.dim} s={spec.s} h={grid.h} window={wr} '
                     f'offsets={len(weights)} quadrature={quadrature}')

    return KernelTable(spec=spec, grid=grid, window_radius=wr, quadrature=quadrature, stencil=stencil,
                       offsets=offsets, weights=weights, tail_sectors=sectors, tail_weight=float(sectors.sum()))


def _stencil_1d(spec: KernelSpec, h: float, wr: float, m: int, quadrature: str) -> np.ndarray:
    s = spec.s
    mu_plus, mu_minus = (float(v) for v in spec.mu)
    j = np.arange(1, m + 1, dtype=float)
    a = (j - 0.5) * h
    b = (j + 0.5) * h
    # the last cell ends exactly at the window
    b[-1] = wr

    if quadrature == 'moment':
        cell = (b ** (2 - 2 * s) - a ** (2 - 2 * s)) / ((2 - 2 * s) * (j * h) ** 2)
    else:
        cell = (a ** (-2 * s) - b ** (-2 * s)) / (2 * s)

    stencil = np.zeros(2 * m + 1)
    stencil[m + 1:] = mu_plus * cell
    stencil[m - 1::-1] = mu_minus * cell

    core = (mu_plus + mu_minus) * (h / 2) ** (2 - 2 * s) / (2 - 2 * s)
    stencil[m + 1] += core / (2 * h ** 2)
    stencil[m - 1] += core / (2 * h ** 2)
    return stencil


def _stencil_2d(spec: KernelSpec, h: float, wr: float, m: int, quadrature: str) -> np.ndarray:
    s = spec.s
    power = 2 * s if quadrature == 'moment' else 2 + 2 * s
    k = np.arange(-m, m + 1)
    ki, kj = np.meshgrid(k, k, indexing='ij')
    inside = (ki ** 2 + kj ** 2) * h * h <= wr * wr * (1 + 1e-12)
    inside[m, m] = False

    nodes, gw = leggauss(_CELL_GAUSS_ORDER)
    dx = 0.5 * h * nodes
    cell_weights = np.outer(gw, gw) * (0.5 * h) ** 2

    stencil = np.zeros((2 * m + 1, 2 * m + 1))
    for row in range(2 * m + 1):
        cols = np.nonzero(inside[row])[0]
        if cols.size == 0:
            continue
        y1 = h * k[row] + dx[None, :, None]
        y2 = h * k[cols][:, None, None] + dx[None, None, :]
        r2 = y1 ** 2 + y2 ** 2
        density = angular_density(spec, np.arctan2(y2, y1)) * r2 ** (-power / 2)
        integral = (density * cell_weights[None]).sum(axis=(1, 2))
        if quadrature == 'moment':
            integral = integral / (h * h * (k[row] ** 2 + k[cols] ** 2))
        stencil[row, cols] = integral

    for (v1, v2), weight in zip(_NEIGHBOURS, _core_weights_2d(spec, h)):
        stencil[m + v1, m + v2] += weight
    return stencil


def _core_weights_2d(spec: KernelSpec, h: float) -> np.ndarray:
    """
    Second moment of the origin cell [-h/2, h/2]^2 split onto the 8 neighbours
    by angular hat functions, divided by |v|^2.
    """
    s = spec.s
    breaks = np.union1d(np.append(sample_angles(spec), 2 * np.pi), np.pi / 4 * np.arange(9))
    g, gw = leggauss(_CORE_GAUSS_ORDER)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    theta = (half[:, None] * g[None, :] + (0.5 * (hi + lo))[:, None]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()

    rho = (0.5 * h) / np.maximum(np.abs(np.cos(theta)), np.abs(np.sin(theta)))
    moment = angular_density(spec, theta) * rho ** (2 - 2 * s) / (2 - 2 * s) * weights

    out = np.empty(len(_NEIGHBOURS))
    for idx, (v1, v2) in enumerate(_NEIGHBOURS):
        centre = idx * np.pi / 4
        distance = np.abs(np.mod(theta - centre + np.pi, 2 * np.pi) - np.pi)
        hat = np.clip(1 - distance / (np.pi / 4), 0.0, None)
        out[idx] = (moment * hat).sum() / (h * h * (v1 * v1 + v2 * v2))
    return out
