import pathlib
import sys
from typing import Dict, List, NoReturn, Optional, Sequence, Tuple

import click
from pydantic import ValidationError
from scipy import fft

from app.core.exception import NonlocalObstacleError
from app.stages import analyze, barrier_check, dirichlet, harnack, solve, solve_fnl, validate_kernel
from app.stages.router import StageOutcome, StageRouter
from dependencies.context import StageContext
from dependencies.session import get_session
from internal.config import settings
from internal.logging import app_logger, setup_logging
from schemas.experiment import STAGE_NAMES, ExperimentConfig

stages = StageRouter()
stages.include_router(validate_kernel.router)
stages.include_router(solve.router)
stages.include_router(solve_fnl.router)
stages.include_router(dirichlet.router)
stages.include_router(analyze.router)
stages.include_router(barrier_check.router)
stages.include_router(harnack.router)


def fail(message: str) -> NoReturn:
    click.echo(f'nonlocal-obstacle: {message}', err=True)
    sys.exit(2)


def _first_error(e: ValidationError) -> str:
    error = e.errors()[0]
    where = '.'.join(str(loc) for loc in error['loc'])
    return f'{where}: {error["msg"]}' if where else error['msg']


def load_config(path: pathlib.Path) -> ExperimentConfig:
    if not path.is_file():
        fail(f'config file not found: {path}')
    try:
        return ExperimentConfig.parse_file(path)
    except ValidationError as e:
        fail(f'invalid config {path}: {_first_error(e)}')
    except ValueError as e:
        fail(f'invalid config {path}: {str(e).splitlines()[0]}')


def run_stages(context: StageContext, names: Sequence[str]) -> List[StageOutcome]:
    outcomes = []
    for name in names:
        app_logger.info(f'stage {name} started')
        try:
            outcome = stages[name](context)
        except (NonlocalObstacleError, ValidationError) as e:
            app_logger.error(f'stage {name} failed: {e}')
            outcome = StageOutcome(name, False, str(e).splitlines()[0])
        app_logger.info(f'stage {name} {"passed" if outcome.passed else "FAILED"} {outcome.message}')
        outcomes.append(outcome)
    return outcomes


@click.group(name='nonlocal-obstacle')
def cli():
    setup_logging()


@cli.command()
@click.argument('config_path', metavar='CONFIG', type=click.Path(path_type=pathlib.Path))
@click.option('--out', 'out_dir', type=click.Path(file_okay=False, path_type=pathlib.Path), default=None,
              help='output directory (default: the config outputs field, then NLOBS_OUTPUT_DIR)')
@click.option('--threads', type=click.IntRange(min=1), default=settings.threads, envvar='NLOBS_THREADS',
              show_default=True, help='FFT worker threads')
@click.option('--stage', 'stage_names', type=click.Choice(STAGE_NAMES), multiple=True,
              help='stage to run, repeatable (default: the config stages)')
def run(config_path: pathlib.Path, out_dir: Optional[pathlib.Path], threads: int, stage_names: Tuple[str, ...]):
    """
    Run the pipeline stages of an experiment config
    """
    config = load_config(config_path)
    names = list(stage_names) or config.stages
    if 'solve-fnl' in names and config.family is None:
        fail("stage 'solve-fnl' needs a kernel family in the config")
    out_dir = out_dir or pathlib.Path(config.outputs or settings.output_dir)

    try:
        with get_session(out_dir) as session, fft.set_workers(threads):
            outcomes = run_stages(StageContext(config, session), names)
    except NonlocalObstacleError as e:
        fail(str(e))

    summary: Dict[str, bool] = {o.name: o.passed for o in outcomes}
    for outcome in outcomes:
        click.echo(f'{outcome.name}: {"ok" if outcome.passed else "FAILED"} {outcome.message}'.rstrip())
    sys.exit(0 if all(summary.values()) else 1)


if __name__ == '__main__':
    cli()
