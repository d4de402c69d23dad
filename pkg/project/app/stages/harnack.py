from app.core.analysis import harnack_cone_pair, harnack_ratio
from app.stages.router import StageOutcome, StageRouter
from dependencies.context import StageContext
from internal.logging import app_logger

router = StageRouter()


@router.stage('harnack')
def harnack(context: StageContext) -> StageOutcome:
    """
    Boundary Harnack quotient of the two cone solutions, optionally at h and h/2
    """
    settings = context.config.harnack
    grids = [context.grid] + ([context.grid.refined()] if settings.refine else [])
    rows, converged = [], True
    for k, grid in enumerate(grids):
        table = context.kernel_table(grid)
        u1, u2, region, reports = harnack_cone_pair(table, cfg=context.config.solver)
        converged = converged and all(r.converged for r in reports)
        report = harnack_ratio(u1, u2, region, table.spec.s)
        app_logger.info(f'harnack h={grid.h}: quotient {report.quotient:.6g} on {report.nodes} nodes')
        rows.append({'h': grid.h, **report.dict()})
        if k == 0:
            context.solutions.save('harnack', u1, field='u1', u2=u2, region=region.astype(float))

    bounded = len(rows) == 1 or rows[1]['quotient'] <= rows[0]['quotient'] * (1 + settings.slack)
    context.reports.save('harnack', {'levels': rows, 'bounded_under_refinement': bounded, 'converged': converged})
    message = '' if converged else 'Dirichlet solves did not converge'
    if not bounded:
        message = f'quotient grew from {rows[0]["quotient"]:.6g} to {rows[1]["quotient"]:.6g} under refinement'
    return StageOutcome('harnack', converged and bounded, message)
