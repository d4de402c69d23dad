from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.analysis import blowup_profiles, boundary_quotient, collapse_trend, contact_density, \
    fit_boundary_exponent, growth_monitor, holder_probe, monotonicity_cone, resolve_radii
from app.core.exception import AnalysisError, NonlocalObstacleError
from app.core.freeboundary import free_boundary_data
from app.stages.router import StageOutcome, StageRouter
from app.stages.solve import solve
from dependencies.context import StageContext
from internal.logging import app_logger
from models.free_boundary import FreeBoundaryData
from models.grid import GridFunction, ball_mask, node_point
from schemas.analysis import AnalysisConfig

router = StageRouter()


def representative_cells(fb: FreeBoundaryData) -> List[Tuple[int, ...]]:
    """
    1D: every boundary cell; 2D: the extreme cells along +-x1 and +-x2
    """
    cells = [tuple(int(i) for i in idx) for idx in fb.boundary_cells]
    if fb.grid.dim == 1 or not cells:
        return cells
    picked = []
    for ax in range(fb.grid.dim):
        for pick in (min, max):
            cell = pick(cells, key=lambda c: (c[ax], c))
            if cell not in picked:
                picked.append(cell)
    return picked


def _analyze_point(context: StageContext, u: GridFunction, w: GridFunction, fb: FreeBoundaryData,
                   idx: Sequence[int], cfg: AnalysisConfig, k: int) -> dict:
    """
    Every diagnostic writes a radius-indexed CSV table and a JSON summary
    """
    grid = w.grid
    settings = context.config.analysis
    diagnostics = context.diagnostics
    x0 = node_point(grid, idx)
    radii = resolve_radii(cfg, grid)

    growth = growth_monitor(w, x0, cfg)
    diagnostics.save_table(f'growth_p{k}', {'radius': growth.radii, 'theta': growth.theta})
    context.reports.save(f'growth_p{k}', growth)

    fit = fit_boundary_exponent(w, x0, cfg)
    diagnostics.save_table(f'exponent_fit_p{k}', {
        'radius': fit.radii_used, 'sup_w': fit.sups,
        'fitted': [fit.c * r ** fit.beta for r in fit.radii_used],
    })
    context.reports.save(f'exponent_fit_p{k}', fit, x0=list(x0))

    profiles = blowup_profiles(w, x0, cfg, settings.blowup_window)
    summaries = [p.summary() for p in profiles]
    blowup = {'radius': [p.r for p in summaries], 'K': [p.K for p in summaries],
              'c1_distance': [p.c1_distance for p in summaries],
              'grad_sup_unit': [p.grad_sup_unit for p in summaries]}
    for ax in range(grid.dim):
        blowup[f'e{ax + 1}'] = [p.e[ax] for p in summaries]
    diagnostics.save_table(f'blowup_p{k}', blowup)
    try:
        collapse: Optional[dict] = collapse_trend(profiles, grid.h, settings.collapse_cells).dict()
    except AnalysisError as e:
        app_logger.warning(f'no collapse trend at {x0}: {e}')
        collapse = None
    diagnostics.save_summary(f'blowup_p{k}', {
        'x0': list(x0), 'profiles': [p.dict() for p in summaries], 'collapse': collapse,
        'grad_sup_unit': summaries[-1].grad_sup_unit if summaries else None,
    })

    point = {'x0': list(x0), 'beta': fit.beta, 'regular_candidate': growth.regular_candidate,
             'collapse_decreasing': collapse['decreasing'] if collapse else None}
    normal = fb.normals.get(tuple(idx))
    if normal is None:
        app_logger.warning(f'no normal at {x0}; monotonicity cone skipped')
    else:
        r = settings.cone_radius or float(radii.min())
        cone = monotonicity_cone(w, x0, normal, r, settings.ell_grid)
        diagnostics.save_table(f'monotonicity_p{k}', {'ell': cone.ell_grid, 'cone_min_derivative': cone.cone_minima})
        context.reports.save(f'monotonicity_p{k}', cone)
        point['cone_ell'] = cone.ell

    band = settings.quotient_band or (4 * grid.h, float(radii.max()))
    quotient = boundary_quotient(w, fb, 1 + cfg.s, band, x0)
    sampled = ~np.isnan(quotient.quotient.values)
    order = np.argsort(fb.distance.values[sampled], kind='stable')
    diagnostics.save_table(f'quotient_p{k}', {
        'distance': fb.distance.values[sampled][order], 'quotient': quotient.quotient.values[sampled][order],
    })
    diagnostics.save_summary(f'quotient_p{k}', {
        'power': quotient.power, 'band': list(quotient.band), 'nodes': quotient.nodes,
        'minimum': quotient.minimum, 'maximum': quotient.maximum, 'oscillation': quotient.oscillation,
    })

    density = contact_density(fb.contact_mask, grid, x0, radii)
    diagnostics.save_table(f'density_p{k}', {'radius': density.radii, 'density': density.density})
    min_density = float(np.min(density.density))
    diagnostics.save_summary(f'density_p{k}', {**density.dict(), 'min_density': min_density,
                                               'density_positive': min_density > 0})

    region = ball_mask(grid, x0, float(radii.max()))
    exponents = [cfg.gamma_probe, cfg.tau_probe]
    seminorms = [holder_probe(u, region, exponent) for exponent in exponents]
    diagnostics.save_table(f'holder_p{k}', {'exponent': exponents, 'seminorm': seminorms})
    diagnostics.save_summary(f'holder_p{k}', {'x0': list(x0), 'radius': float(radii.max()),
                                              'gamma': seminorms[0], 'tau': seminorms[1]})
    point['holder_gamma'], point['holder_tau'] = seminorms
    point['min_density'] = min_density
    return point


@router.stage('analyze')
def analyze(context: StageContext) -> StageOutcome:
    """
    Free boundary diagnostics at representative boundary points; solves first when needed
    """
    if context.solution() is None:
        outcome = solve(context)
        if not outcome.passed:
            app_logger.warning(f'analyzing an unconverged solution: {outcome.message}')
    u, phi = context.solution(), context.obstacle()
    settings = context.config.analysis
    cfg = settings.config(context.config.s)

    fb = free_boundary_data(u, phi, cfg.contact_tol, settings.normal_window)
    context.diagnostics.save_free_boundary('free_boundary', fb)
    context.solutions.save('distance', fb.distance, field='d', contact=fb.contact_mask.astype(float))
    cells = representative_cells(fb)
    if not cells:
        return StageOutcome('analyze', False, 'the contact set has no free boundary')

    w = u - phi
    points, failures = [], []
    for k, idx in enumerate(cells):
        try:
            points.append(_analyze_point(context, u, w, fb, idx, cfg, k))
        except NonlocalObstacleError as e:
            app_logger.error(f'analysis at {node_point(u.grid, idx)} failed: {e}')
            failures.append(f'{node_point(u.grid, idx)}: {e}')
    context.diagnostics.save_summary('analysis_summary', {'points': points, 'failures': failures})
    return StageOutcome('analyze', not failures, '; '.join(failures))
