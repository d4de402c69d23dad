from app.core.operator import apply_fully_nonlinear
from app.core.solver import solve_obstacle_fully_nonlinear
from app.stages.router import StageOutcome, StageRouter
from dependencies.context import StageContext
from models.operator import FamilyMember, FullyNonlinearSpec
from models.problem import ObstacleProblem

router = StageRouter()


@router.stage('solve-fnl')
def solve_fnl(context: StageContext) -> StageOutcome:
    family = context.config.family
    spec = FullyNonlinearSpec(members=tuple(FamilyMember(spec=m.kernel, drift=m.drift) for m in family.members),
                              normalization=family.normalization)
    tables = context.family_tables()
    phi = context.obstacle()
    exterior = context.exterior()

    problem = ObstacleProblem(phi=phi, family=spec, tables=tables, exterior=exterior)
    u, report, policy = solve_obstacle_fully_nonlinear(problem, context.config.solver)
    context.state['u_fnl'] = u

    iu, _ = apply_fully_nonlinear(spec, tables, u, exterior=exterior)
    context.solutions.save('solution_fnl', u, phi=phi, Iu=iu, policy=policy)
    context.reports.save('solve_fnl_report', report)
    return StageOutcome('solve-fnl', report.converged, report.message)
