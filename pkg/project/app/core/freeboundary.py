from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import distance_transform_edt

from app.core.exception import FreeBoundaryError, configuration_exception, free_boundary_exception
from internal.config import default_tolerance, settings
from internal.logging import app_logger
from models.free_boundary import FreeBoundaryData
from models.grid import GridFunction, coordinates
from schemas.kernel import GridSpec


def default_contact_tol(dim: int) -> float:
    return settings.contact_tol_factor * default_tolerance(dim)


def boundary_cells(contact_mask: np.ndarray) -> np.ndarray:
    """
    contact nodes with a non-contact 2n-neighbour; nodes past the box edge count as non-contact
    """
    padded = np.pad(contact_mask, 1, constant_values=False)
    inner = (slice(1, -1),) * contact_mask.ndim
    open_neighbour = np.zeros(contact_mask.shape, dtype=bool)
    for ax in range(contact_mask.ndim):
        for step in (-1, 1):
            shifted = np.roll(padded, step, axis=ax)[inner]
            open_neighbour |= ~shifted
    return np.argwhere(contact_mask & open_neighbour)


def extract_contact_set(u: GridFunction,
                        phi: GridFunction,
                        tol: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    phi.check_grid(u.grid, 'obstacle')
    if tol is None:
        tol = default_contact_tol(u.grid.dim)
    mask = (u.values - phi.values) <= tol
    return mask, boundary_cells(mask)


def distance_function(contact_mask: np.ndarray, grid: GridSpec) -> GridFunction:
    """
    Exact Euclidean distance to the contact set
    """
    mask = np.asarray(contact_mask, dtype=bool)
    if not mask.any():
        free_boundary_exception('distance to an empty contact set is undefined')

    if grid.dim == 1:
        nodes = np.nonzero(mask)[0]
        idx = np.arange(mask.size)
        pos = np.searchsorted(nodes, idx)
        left = nodes[np.clip(pos - 1, 0, nodes.size - 1)]
        right = nodes[np.clip(pos, 0, nodes.size - 1)]
        steps = np.minimum(np.abs(idx - left), np.abs(idx - right))
        return GridFunction(grid, grid.h * steps.astype(float))

    # lattice units keep sqrt(i^2 + j^2) exact before scaling
    return GridFunction(grid, grid.h * distance_transform_edt(~mask))


def estimate_normal(contact_mask: np.ndarray, grid: GridSpec, x0: Sequence[int], window: float) -> np.ndarray:
    """
    Least-squares plane fit of the non-contact indicator over the window ball;
    the unit normal points into {u > phi}.
    """
    if window < 3 * grid.h * (1 - 1e-12):
        configuration_exception(f'normal window {window} is smaller than 3h = {3 * grid.h}')

    x0 = tuple(int(i) for i in x0)
    coords = coordinates(grid)
    centre = [c[x0] for c in coords]
    offsets = np.stack([(c - x).ravel() for c, x in zip(coords, centre)], axis=1)
    inside = np.sqrt((offsets ** 2).sum(axis=1)) <= window + 1e-9 * grid.h

    indicator = (~np.asarray(contact_mask, dtype=bool)).ravel()[inside].astype(float)
    if indicator.min() == indicator.max():
        free_boundary_exception(f'degenerate normal window at {x0}: indicator is constant')

    design = np.hstack([np.ones((int(inside.sum()), 1)), offsets[inside]])
    coef, *_ = np.linalg.lstsq(design, indicator, rcond=None)
    gradient = coef[1:]
    norm = np.linalg.norm(gradient)
    if norm == 0:
        free_boundary_exception(f'degenerate normal window at {x0}: no transition direction')
    return gradient / norm


def free_boundary_data(u: GridFunction,
                       phi: GridFunction,
                       tol: Optional[float] = None,
                       window: Optional[float] = None) -> FreeBoundaryData:
    mask, cells = extract_contact_set(u, phi, tol)
    distance = distance_function(mask, u.grid)
    window = 6 * u.grid.h if window is None else window

    normals = {}
    for idx in cells:
        key = tuple(int(i) for i in idx)
        try:
            normals[key] = estimate_normal(mask, u.grid, key, window)
        except FreeBoundaryError as e:
            app_logger.warning(f'no normal at boundary cell {key}: {e}')
    return FreeBoundaryData(contact_mask=mask, boundary_cells=cells, distance=distance, normals=normals)
