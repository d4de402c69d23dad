from app.core.barriers import box_region, cone_region, halfspace_region, search_cone_eta, verify_inequality
from app.stages.router import StageOutcome, StageRouter
from dependencies.context import StageContext
from schemas.barriers import ProfileSpec
from schemas.experiment import BarrierCheck
from schemas.kernel import GridSpec

router = StageRouter()


def _cone_radii(check: BarrierCheck, grid: GridSpec):
    r_min = check.region.r_min if check.region.r_min is not None else 8 * grid.h
    r_max = check.region.r_max if check.region.r_max is not None else grid.R / 2
    return r_min, r_max


def make_region(check: BarrierCheck, spec: ProfileSpec, grid: GridSpec):
    region = check.region
    hi = region.hi if region.hi is not None else grid.R / 2
    if region.kind == 'halfspace':
        return halfspace_region(spec.e, region.lo, hi)
    if region.kind == 'box':
        return box_region(hi)
    return cone_region(spec, *_cone_radii(check, grid))


@router.stage('barrier-check')
def barrier_check(context: StageContext) -> StageOutcome:
    """
    Evaluate L_h of each configured profile on its region against the declared sense
    """
    table = context.kernel_table()
    s = table.spec.s
    failures = []
    for k, check in enumerate(context.config.barriers):
        name = f'barrier_{k}_{check.kind}'
        eta = check.eta
        if check.kind == 'cone_subsolution' and eta is None:
            eta, report = search_cone_eta(s, check.epsilon, table, check.e, *_cone_radii(check, table.grid),
                                          tol=check.tolerance, refine=check.refine)
            if eta is None:
                context.reports.save(name, report)
                failures.append(f'{name}: no admissible eta')
                continue

        spec = ProfileSpec(kind=check.kind, s=s, e=check.e, K=check.K, epsilon=check.epsilon, eta=eta)
        report = verify_inequality(spec, table, make_region(check, spec, table.grid), check.sense,
                                   check.tolerance, check.bound, check.refine)
        context.reports.save(name, report)
        if not report.passed:
            failures.append(f'{name}: violation {report.violation}')
    return StageOutcome('barrier-check', not failures, '; '.join(failures))
