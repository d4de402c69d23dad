import numpy as np
import pytest
from scipy.integrate import quad

from app.core.exception import ConfigurationError, StructuralError
from app.core.kernels import angular_density, build_kernel_table, isotropic_spec, sample_angles, tail_sectors, \
    validate_kernel_spec
from schemas.kernel import GridSpec, KernelSpec


def anisotropic_2d(s=0.3, samples=64, amplitude=0.5):
    theta = 2 * np.pi * np.arange(samples) / samples
    mu = tuple((1 + amplitude * np.cos(2 * theta)).tolist())
    return KernelSpec(dim=2, s=s, lam=1 - amplitude, Lam=1 + amplitude, mu=mu)


class TestValidateKernelSpec:
    def test_isotropic_specs_pass(self):
        for dim in (1, 2):
            report = validate_kernel_spec(isotropic_spec(dim, 0.5))
            assert report.passed
            assert report.failures() == []

    def test_check_names(self):
        names = [c.name for c in validate_kernel_spec(isotropic_spec(1, 0.5)).checks]
        assert names == ['order', 'mu_nonempty', 'mu_samples', 'mu_finite', 'evenness', 'ellipticity',
                         'lower_bound', 'upper_bound']

    def test_even_anisotropic_density_passes(self):
        assert validate_kernel_spec(anisotropic_2d()).passed

    @pytest.mark.parametrize('spec, failing', [
        (KernelSpec(dim=1, s=1.0, lam=1, Lam=1, mu=(1.0, 1.0)), 'order'),
        (KernelSpec(dim=1, s=0.5, lam=1, Lam=2, mu=(1.0, 2.0)), 'evenness'),
        (KernelSpec(dim=1, s=0.5, lam=1, Lam=1, mu=(1.0, 1.0, 1.0)), 'mu_samples'),
        (KernelSpec(dim=2, s=0.5, lam=1, Lam=1, mu=(1.0,) * 32), 'mu_samples'),
        (KernelSpec(dim=1, s=0.5, lam=2, Lam=1, mu=(1.5, 1.5)), 'ellipticity'),
        (KernelSpec(dim=1, s=0.5, lam=1, Lam=2, mu=(0.5, 0.5)), 'lower_bound'),
        (KernelSpec(dim=1, s=0.5, lam=1, Lam=2, mu=(3.0, 3.0)), 'upper_bound'),
        (KernelSpec(dim=1, s=0.5, lam=1, Lam=2, mu=(float('nan'), 1.0)), 'mu_finite'),
    ])
    def test_failures(self, spec, failing):
        report = validate_kernel_spec(spec)
        assert not report.passed
        assert failing in [c.name for c in report.checks if not c.passed]

    def test_odd_density_fails_evenness(self):
        theta = sample_angles(isotropic_spec(2, 0.5))
        spec = KernelSpec(dim=2, s=0.5, lam=0.5, Lam=1.5, mu=tuple((1 + 0.5 * np.cos(theta)).tolist()))
        report = validate_kernel_spec(spec)
        assert [c.name for c in report.checks if not c.passed] == ['evenness']

    def test_aliases(self):
        spec = KernelSpec.parse_obj({'dim': 1, 's': 0.5, 'lambda': 1, 'Lambda': 2, 'mu': [1.5, 1.5]})
        assert (spec.lam, spec.Lam) == (1, 2)
        assert spec.document()['lambda'] == 1


class TestBuildKernelTable:
    def test_invalid_spec(self, grid_1d):
        with pytest.raises(ConfigurationError):
            build_kernel_table(KernelSpec(dim=1, s=1.2, lam=1, Lam=1, mu=(1.0, 1.0)), grid_1d)

    def test_dimension_mismatch(self, grid_2d):
        with pytest.raises(StructuralError):
            build_kernel_table(isotropic_spec(1, 0.5), grid_2d)

    @pytest.mark.parametrize('window', [1 / 32, 4.5])
    def test_window_out_of_range(self, grid_1d, window):
        with pytest.raises(ConfigurationError):
            build_kernel_table(isotropic_spec(1, 0.5), grid_1d, window_radius=window)

    def test_unknown_quadrature(self, grid_1d):
        with pytest.raises(ConfigurationError):
            build_kernel_table(isotropic_spec(1, 0.5), grid_1d, quadrature='trapezoid')

    def test_default_window(self, table_1d, grid_1d):
        assert table_1d.window_radius == 2 * grid_1d.R
        assert table_1d.m == 64
        assert table_1d.stencil.shape == (129,)
        assert table_1d.stencil[table_1d.m] == 0

    @pytest.mark.parametrize('quadrature', ['moment', 'cell'])
    def test_stencil_is_even(self, grid_2d, quadrature):
        table = build_kernel_table(anisotropic_2d(), grid_2d, quadrature=quadrature)
        assert np.array_equal(table.stencil, np.flip(table.stencil))
        assert np.all(table.weights > 0)

    def test_diag_and_weight_at(self, table_1d):
        assert table_1d.diag_coeff == pytest.approx(table_1d.weights.sum() + table_1d.tail_weight)
        assert table_1d.weight_at((1,)) == table_1d.stencil[table_1d.m + 1]
        assert len(table_1d.offsets) == len(table_1d.weights) == 128


class TestQuadratureOracles:
    @pytest.mark.parametrize('s', [0.25, 0.5, 0.75])
    def test_moment_1d_second_moment_exact(self, grid_1d, s):
        mu = 1.5
        table = build_kernel_table(KernelSpec(dim=1, s=s, lam=1, Lam=2, mu=(mu, mu)), grid_1d)
        y = grid_1d.h * np.arange(-table.m, table.m + 1)
        wr = table.window_radius
        assert (table.stencil * y ** 2).sum() == pytest.approx(2 * mu * wr ** (2 - 2 * s) / (2 - 2 * s), rel=1e-12)

    def test_cell_1d_mass(self, grid_1d):
        s, mu, h = 0.4, 1.0, grid_1d.h
        table = build_kernel_table(isotropic_spec(1, s, mu), grid_1d, quadrature='cell')
        wr = table.window_radius
        cells = 2 * mu * ((h / 2) ** (-2 * s) - wr ** (-2 * s)) / (2 * s)
        core = 2 * mu * (h / 2) ** (2 - 2 * s) / ((2 - 2 * s) * h * h)
        assert table.stencil.sum() == pytest.approx(cells + core, rel=1e-12)

    def test_moment_2d_against_subdivided_midpoint(self):
        s, h, wr = 0.3, 1 / 32, 1.0
        spec = anisotropic_2d(s=s)
        table = build_kernel_table(spec, GridSpec(dim=2, h=h, R=1.0), window_radius=wr)
        m = table.m
        k = np.arange(-m, m + 1)
        ki, kj = np.meshgrid(k, k, indexing='ij')
        moment = float((table.stencil * (ki ** 2 + kj ** 2) * h * h).sum())

        inside = (ki ** 2 + kj ** 2) * h * h <= wr * wr * (1 + 1e-12)
        inside[m, m] = False
        sub = (np.arange(10) + 0.5) / 10 - 0.5
        y1 = (ki[inside][:, None, None] + sub[None, :, None]) * h
        y2 = (kj[inside][:, None, None] + sub[None, None, :]) * h
        cells = float((angular_density(spec, np.arctan2(y2, y1)) * (y1 ** 2 + y2 ** 2) ** (-s)).sum()) * (h / 10) ** 2

        def core_density(theta):
            rho = (h / 2) / max(abs(np.cos(theta)), abs(np.sin(theta)))
            return float(angular_density(spec, np.array(theta))) * rho ** (2 - 2 * s) / (2 - 2 * s)

        breaks = np.union1d(sample_angles(spec), np.pi / 4 * np.arange(9))
        core = sum(quad(core_density, a, b)[0] for a, b in zip(breaks[:-1], breaks[1:]))
        assert moment == pytest.approx(cells + core, rel=1e-3)

    def test_tail_weights(self, grid_1d, grid_2d):
        s = 0.5
        t1 = build_kernel_table(isotropic_spec(1, s, 2.0), grid_1d)
        assert t1.tail_weight == pytest.approx(2 * 2.0 * t1.window_radius ** (-2 * s) / (2 * s))
        t2 = build_kernel_table(isotropic_spec(2, s), grid_2d)
        assert t2.tail_weight == pytest.approx(2 * np.pi * t2.window_radius ** (-2 * s) / (2 * s))
        assert tail_sectors(isotropic_spec(2, s), 1.0).shape == (64,)

    @pytest.mark.parametrize('dim, s', [(1, 0.3), (2, 0.5), (2, 0.8)])
    def test_tail_homogeneity(self, dim, s):
        spec = isotropic_spec(dim, s) if dim == 1 else anisotropic_2d(s=s)
        unit = tail_sectors(spec, 1.0).sum()
        for radius in (0.25, 1.5, 4.0):
            assert tail_sectors(spec, radius).sum() == pytest.approx(radius ** (-2 * s) * unit, rel=1e-10)

    def test_table_tail_scales_with_the_window(self, grid_1d):
        spec = isotropic_spec(1, 0.4)
        narrow = build_kernel_table(spec, grid_1d, window_radius=0.5)
        wide = build_kernel_table(spec, grid_1d, window_radius=2.0)
        assert wide.tail_weight / narrow.tail_weight == pytest.approx(4.0 ** -0.8, rel=1e-10)

    def test_refinement_grows_the_diagonal(self, grid_1d):
        spec = isotropic_spec(1, 0.5)
        coarse = build_kernel_table(spec, grid_1d)
        fine = build_kernel_table(spec, grid_1d.refined())
        # order 2s: the diagonal scales like h^(-2s)
        assert fine.diag_coeff / coarse.diag_coeff == pytest.approx(2.0, rel=0.05)
