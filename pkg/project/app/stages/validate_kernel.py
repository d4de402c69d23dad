from app.core.kernels import validate_kernel_spec
from app.stages.router import StageOutcome, StageRouter
from dependencies.context import StageContext
from internal.logging import app_logger

router = StageRouter()


@router.stage('validate-kernel')
def validate_kernel(context: StageContext) -> StageOutcome:
    failures = []
    for label, spec in context.kernel_specs():
        report = validate_kernel_spec(spec)
        context.reports.save(f'validation_{label}', report)
        if not report.passed:
            app_logger.error(f'{label} fails {report.failures()}')
            failures.append(f'{label}: {", ".join(report.failures())}')
    return StageOutcome('validate-kernel', not failures, '; '.join(failures))
