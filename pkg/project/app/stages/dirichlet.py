import numpy as np

from app.core.solver import solve_dirichlet, torsion_profile
from app.stages.router import StageOutcome, StageRouter
from dependencies.context import StageContext
from models.grid import ZERO_EXTERIOR, Exterior, GridFunction, axis, radius

router = StageRouter()


@router.stage('dirichlet')
def dirichlet(context: StageContext) -> StageOutcome:
    """
    L u = rhs in the ball of radius domain_radius, u = exterior_value elsewhere
    """
    table = context.kernel_table()
    grid = table.grid
    cfg = context.config.dirichlet

    domain = radius(grid, (0.0,) * grid.dim) < cfg.domain_radius - 1e-9 * grid.h
    rhs = GridFunction(grid, np.full(grid.shape, cfg.rhs))
    exterior_data = GridFunction(grid, np.full(grid.shape, cfg.exterior_value))
    exterior = Exterior(far_value=cfg.exterior_value) if cfg.exterior_value else ZERO_EXTERIOR

    u, report = solve_dirichlet(table, domain, rhs, exterior_data, context.config.solver, exterior)
    context.state['u_dirichlet'] = u

    extra = {}
    mu = table.spec.mu
    if grid.dim == 1 and mu[0] == mu[1] and not cfg.exterior_value:
        # rescaled torsion function of the isotropic kernel
        rho = cfg.domain_radius
        oracle = -cfg.rhs * rho ** (2 * table.spec.s) * torsion_profile(axis(grid) / rho, table.spec.s, mu[0])
        extra['oracle_sup_error'] = float(np.abs(u.values - oracle)[domain].max())
        context.solutions.save('dirichlet', u, oracle=oracle)
    else:
        context.solutions.save('dirichlet', u)
    context.reports.save('dirichlet_report', report, **extra)
    return StageOutcome('dirichlet', report.converged, report.message)
