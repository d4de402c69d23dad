import json

import numpy as np
import pytest
from click.testing import CliRunner

from app import main
from app.main import cli

KERNEL_1D = {'dim': 1, 's': 0.5, 'lambda': 1.0, 'Lambda': 1.0, 'mu': [1.0, 1.0]}


@pytest.fixture(autouse=True)
def quiet(monkeypatch):
    monkeypatch.setattr(main, 'setup_logging', lambda: None)


@pytest.fixture
def runner():
    return CliRunner()


def write_config(path, **overrides):
    config = {
        'name': 'bump-1d',
        'kernel': KERNEL_1D,
        'grid': {'dim': 1, 'h': 1 / 128, 'R': 4.0},
        'obstacle': {'catalog': 'bump', 'a': 1.0, 'b': 1.0},
        'stages': ['validate-kernel', 'solve', 'analyze'],
        **overrides,
    }
    path.write_text(json.dumps(config))
    return path


def test_missing_config(runner, tmp_path):
    missing = tmp_path / 'missing.json'
    result = runner.invoke(cli, ['run', str(missing)])
    assert result.exit_code == 2
    assert str(missing) in result.output


def test_invalid_config(runner, tmp_path):
    path = write_config(tmp_path / 'bad.json', grid={'dim': 1, 'h': 0.3, 'R': 1.0})
    result = runner.invoke(cli, ['run', str(path), '--out', str(tmp_path / 'out')])
    assert result.exit_code == 2
    assert 'invalid config' in result.output
    assert len(result.output.strip().splitlines()) == 1
    assert not (tmp_path / 'out').exists()


def test_unknown_stage_option(runner, tmp_path):
    path = write_config(tmp_path / 'bump.json')
    result = runner.invoke(cli, ['run', str(path), '--stage', 'plot'])
    assert result.exit_code == 2


def test_fully_nonlinear_stage_needs_family(runner, tmp_path):
    path = write_config(tmp_path / 'bump.json')
    result = runner.invoke(cli, ['run', str(path), '--out', str(tmp_path / 'out'), '--stage', 'solve-fnl'])
    assert result.exit_code == 2
    assert 'family' in result.output


def test_validate_kernel(runner, tmp_path):
    path = write_config(tmp_path / 'bump.json')
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['run', str(path), '--out', str(out), '--stage', 'validate-kernel'])
    assert result.exit_code == 0, result.output
    assert 'validate-kernel: ok' in result.output

    document = json.loads((out / 'validation_kernel.json').read_text())
    assert document['report']['passed'] is True
    assert document['config']['name'] == 'bump-1d'
    assert document['config']['solver']['tolerance'] == 1e-8


def test_invalid_kernel_fails_the_stage(runner, tmp_path):
    path = write_config(tmp_path / 'bump.json', kernel={**KERNEL_1D, 'mu': [1.0, 2.0], 'Lambda': 2.0})
    result = runner.invoke(cli, ['run', str(path), '--out', str(tmp_path / 'out'), '--stage', 'validate-kernel'])
    assert result.exit_code == 1
    assert 'validate-kernel: FAILED' in result.output


def test_pipeline(runner, tmp_path):
    path = write_config(tmp_path / 'bump.json')
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['run', str(path), '--out', str(out), '--threads', '2'])
    assert result.exit_code == 0, result.output

    for name in ('solution.csv', 'solution.f64', 'solution.json', 'solve_report.json', 'apriori.json',
                 'free_boundary.csv', 'distance.csv', 'growth_p0.csv', 'blowup_p0.csv', 'analysis_summary.json'):
        assert (out / name).exists(), name
    assert (out / 'solution.csv').read_text().splitlines()[0] == 'x,u,phi,Lu'
    assert (out / 'free_boundary.csv').read_text().splitlines()[0] == 'x,nx,d_ray'
    for diagnostic in ('growth', 'exponent_fit', 'blowup', 'monotonicity', 'quotient', 'density', 'holder'):
        for suffix in ('csv', 'json'):
            assert (out / f'{diagnostic}_p0.{suffix}').exists(), f'{diagnostic}_p0.{suffix}'
    assert (out / 'monotonicity_p0.csv').read_text().splitlines()[0] == 'ell,cone_min_derivative'
    holder = json.loads((out / 'holder_p0.json').read_text())
    assert holder['gamma'] >= 0 and holder['tau'] >= 0

    report = json.loads((out / 'solve_report.json').read_text())
    assert report['report']['converged'] is True
    assert report['obstacle_in_hypothesis'] is True

    fit = json.loads((out / 'exponent_fit_p0.json').read_text())
    assert 0.5 < fit['report']['beta'] < 2
    assert len(fit['x0']) == 1

    summary = json.loads((out / 'analysis_summary.json').read_text())
    assert len(summary['points']) == 2
    assert summary['failures'] == []
    assert not (out / '.nlobs.lock').exists()


def test_runs_are_reproducible(runner, tmp_path):
    path = write_config(tmp_path / 'bump.json', stages=['solve'])
    outputs = []
    for k in range(2):
        out = tmp_path / f'out{k}'
        result = runner.invoke(cli, ['run', str(path), '--out', str(out)])
        assert result.exit_code == 0, result.output
        outputs.append((out / 'solution.csv').read_bytes())
    assert outputs[0] == outputs[1]


def test_locked_output_directory(runner, tmp_path):
    path = write_config(tmp_path / 'bump.json')
    out = tmp_path / 'out'
    out.mkdir()
    (out / '.nlobs.lock').write_text('1')
    result = runner.invoke(cli, ['run', str(path), '--out', str(out), '--stage', 'validate-kernel'])
    assert result.exit_code == 2
    assert 'in use' in result.output


def test_kernel_file_reference(runner, tmp_path):
    kernel_path = tmp_path / 'kernel.json'
    kernel_path.write_text(json.dumps({**KERNEL_1D, 'Lambda': 2.0, 'mu': [1.5, 1.5]}))
    path = write_config(tmp_path / 'bump.json', kernel=str(kernel_path))
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['run', str(path), '--out', str(out), '--stage', 'validate-kernel'])
    assert result.exit_code == 0, result.output

    document = json.loads((out / 'validation_kernel.json').read_text())
    assert document['report']['passed'] is True
    assert document['config']['kernel']['mu'] == [1.5, 1.5]


def test_missing_kernel_file(runner, tmp_path):
    path = write_config(tmp_path / 'bump.json', kernel=str(tmp_path / 'missing.json'))
    result = runner.invoke(cli, ['run', str(path), '--out', str(tmp_path / 'out')])
    assert result.exit_code == 2
    assert 'cannot read kernel file' in result.output


def test_default_output_directory(runner, tmp_path, monkeypatch):
    monkeypatch.setattr(main.settings, 'output_dir', str(tmp_path / 'default'))
    path = write_config(tmp_path / 'bump.json')
    result = runner.invoke(cli, ['run', str(path), '--stage', 'validate-kernel'])
    assert result.exit_code == 0, result.output
    assert (tmp_path / 'default' / 'validation_kernel.json').exists()


def test_dirichlet_stage(runner, tmp_path):
    path = write_config(tmp_path / 'torsion.json', grid={'dim': 1, 'h': 1 / 64, 'R': 2.0}, stages=['dirichlet'])
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['run', str(path), '--out', str(out)])
    assert result.exit_code == 0, result.output

    report = json.loads((out / 'dirichlet_report.json').read_text())
    assert report['report']['converged'] is True
    assert 0 <= report['oracle_sup_error'] < 1 / np.pi
    assert (out / 'dirichlet.csv').read_text().splitlines()[0] == 'x,u,oracle'


def test_barrier_check_stage(runner, tmp_path):
    barrier = {'kind': 'halfspace_s', 'e': [1.0], 'region': {'kind': 'halfspace', 'lo': 0.25, 'hi': 1.0}}
    path = write_config(tmp_path / 'barrier.json', grid={'dim': 1, 'h': 1 / 64, 'R': 2.0}, barriers=[barrier],
                        stages=['barrier-check'])
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['run', str(path), '--out', str(out)])
    assert result.exit_code == 0, result.output

    report = json.loads((out / 'barrier_0_halfspace_s.json').read_text())['report']
    assert report['sense'] == 'harmonic'
    assert report['passed'] is True


def test_fully_nonlinear_stage(runner, tmp_path):
    family = {'members': [{'kernel': KERNEL_1D},
                          {'kernel': {**KERNEL_1D, 'lambda': 2.0, 'Lambda': 2.0, 'mu': [2.0, 2.0]}, 'drift': -0.05}],
              'normalization': True}
    config = {
        'name': 'family-1d',
        'family': family,
        'grid': {'dim': 1, 'h': 1 / 16, 'R': 2.0},
        'obstacle': {'catalog': 'bump', 'a': 0.5},
        'stages': ['validate-kernel', 'solve-fnl'],
    }
    path = tmp_path / 'family.json'
    path.write_text(json.dumps(config))
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['run', str(path), '--out', str(out)])
    assert result.exit_code == 0, result.output

    assert (out / 'validation_member0.json').exists()
    assert (out / 'validation_member1.json').exists()
    assert (out / 'solution_fnl.csv').read_text().splitlines()[0] == 'x,u,phi,Iu,policy'
    report = json.loads((out / 'solve_fnl_report.json').read_text())['report']
    assert report['converged'] is True


@pytest.mark.slow
def test_harnack_stage(runner, tmp_path):
    kernel = {'dim': 2, 's': 0.5, 'lambda': 1.0, 'Lambda': 1.0, 'mu': [1.0] * 64}
    path = write_config(tmp_path / 'cone.json', kernel=kernel, grid={'dim': 2, 'h': 1 / 16, 'R': 1.5},
                        stages=['harnack'])
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['run', str(path), '--out', str(out)])
    assert result.exit_code in (0, 1), result.output

    report = json.loads((out / 'harnack.json').read_text())['report']
    assert [level['h'] for level in report['levels']] == [1 / 16, 1 / 32]
    assert report['converged'] is True
    assert (result.exit_code == 0) == report['bounded_under_refinement']
