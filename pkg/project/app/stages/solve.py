from app.core.obstacles import in_hypothesis
from app.core.operator import apply_linear
from app.core.solver import apriori_suite, solve_obstacle
from app.stages.router import StageOutcome, StageRouter
from dependencies.context import StageContext
from internal.logging import app_logger
from models.problem import ObstacleProblem

router = StageRouter()


@router.stage('solve')
def solve(context: StageContext) -> StageOutcome:
    """
    Obstacle problem for the single kernel; snapshot, SolveReport and a-priori checks
    """
    table = context.kernel_table()
    phi = context.obstacle()
    exterior = context.exterior()
    hypothesis = in_hypothesis(context.config.obstacle)
    if not hypothesis:
        app_logger.warning(f'obstacle {context.config.obstacle.catalog!r} is outside the C^(2,1) hypothesis')

    u, report = solve_obstacle(ObstacleProblem(phi=phi, table=table, exterior=exterior), context.config.solver)
    context.state['u'] = u
    context.solutions.save('solution', u, phi=phi, Lu=apply_linear(table, u, exterior=exterior))
    context.reports.save('solve_report', report, obstacle_in_hypothesis=hypothesis)

    apriori = apriori_suite(u, phi, table, exterior)
    context.reports.save('apriori', {**apriori.dict(), 'passed': apriori.passed})

    passed = report.converged and (apriori.passed or not hypothesis)
    message = report.message or ('' if apriori.passed else 'a-priori checks failed')
    return StageOutcome('solve', passed, message)
