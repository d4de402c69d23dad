import warnings

import numpy as np
import pytest

from app.core.analysis import blowup_profiles, boundary_quotient, collapse_trend, contact_density, default_radii, \
    fit_boundary_exponent, growth_monitor, harnack_cone_pair, harnack_ratio, holder_probe, monotonicity_cone, \
    tilted_data, unit_data
from app.core.exception import AnalysisError, ConfigurationError, FreeBoundaryError, StructuralError
from app.core.freeboundary import boundary_cells, distance_function
from app.core.kernels import build_kernel_table, isotropic_spec
from models.analysis import BlowupProfile
from models.free_boundary import FreeBoundaryData
from models.grid import GridFunction, coordinates, radius
from schemas.analysis import AnalysisConfig
from schemas.kernel import GridSpec


@pytest.fixture
def fine_grid():
    return GridSpec(dim=1, h=1 / 256, R=4)


@pytest.fixture
def power_law(fine_grid):
    return GridFunction.from_callable(fine_grid, lambda x: np.clip(x, 0.0, None) ** 1.5)


@pytest.fixture
def cfg():
    return AnalysisConfig(s=0.5)


class TestConfig:
    def test_defaults(self, cfg):
        assert cfg.alpha == pytest.approx(0.4)
        assert cfg.gamma_probe == pytest.approx(0.25)

    def test_default_radii_stop_at_lattice_scale(self, fine_grid):
        radii = default_radii(fine_grid)
        assert radii[0] == 0.5
        assert radii[-1] == pytest.approx(4 * fine_grid.h)
        assert len(radii) == 6


class TestGrowth:
    def test_theta_is_monotone(self, power_law, cfg):
        report = growth_monitor(power_law, (0.0,), cfg)
        assert np.all(np.diff(report.theta) >= 0)
        assert report.ratio > 1

    def test_power_law_exponent(self, power_law, cfg):
        fit = fit_boundary_exponent(power_law, (0.0,), cfg)
        assert fit.beta == pytest.approx(1.5, abs=1e-10)
        assert fit.c == pytest.approx(1.0, rel=1e-9)
        assert fit.residual < 1e-10

    def test_too_few_radii(self, power_law):
        with pytest.raises(AnalysisError):
            fit_boundary_exponent(power_law, (0.0,), AnalysisConfig(s=0.5, radii=[0.5, 0.25]))

    def test_radius_below_lattice_scale(self, power_law, fine_grid):
        with pytest.raises(AnalysisError):
            growth_monitor(power_law, (0.0,), AnalysisConfig(s=0.5, radii=[0.5, fine_grid.h]))

    @pytest.mark.parametrize('x0', [(1.0,), (-1.0,)])
    def test_not_a_boundary_point(self, power_law, cfg, x0):
        with pytest.raises(FreeBoundaryError):
            fit_boundary_exponent(power_law, x0, cfg)


class TestBlowup:
    def test_halfspace_profile_is_recovered(self, power_law, cfg):
        profiles = blowup_profiles(power_law, (0.0,), cfg)
        assert profiles
        first = profiles[0]
        assert first.r == 0.5
        assert first.K == pytest.approx(1 / 1.5, rel=1e-2)
        assert first.e.tolist() == [1.0]
        assert first.v.grid.shape == (129,)
        assert first.summary().K == first.K

    @staticmethod
    def profiles(grid, radii, c1):
        return [BlowupProfile(r=r, d=1.0, v=GridFunction.zeros(grid), K=1.0, e=np.array([1.0]), c1_distance=c,
                              grad_sup_unit=1.0) for r, c in zip(radii, c1)]

    def test_collapse_uses_the_finest_resolved_scales(self, fine_grid):
        profiles = self.profiles(fine_grid, [2.0, 1.0, 0.5, 0.25, 0.125], [0.5, 0.3, 0.2, 0.1, 0.4])
        collapse = collapse_trend(profiles, fine_grid.h)
        assert collapse.radii == [1.0, 0.5, 0.25]
        assert collapse.c1_distance == [0.3, 0.2, 0.1]
        assert collapse.resolved_cells == 64
        assert collapse.decreasing

    def test_collapse_that_grows(self, fine_grid):
        profiles = self.profiles(fine_grid, [1.0, 0.5, 0.25], [0.1, 0.2, 0.15])
        assert not collapse_trend(profiles, fine_grid.h).decreasing

    def test_collapse_needs_three_resolved_scales(self, fine_grid):
        profiles = self.profiles(fine_grid, [1.0, 0.5, 0.125], [0.3, 0.2, 0.1])
        with pytest.raises(AnalysisError):
            collapse_trend(profiles, fine_grid.h)
        assert collapse_trend(profiles, fine_grid.h, resolved_cells=32).decreasing


class TestMonotonicity:
    @pytest.fixture
    def grid(self):
        return GridSpec(dim=2, h=1 / 32, R=1)

    def test_one_sided_profile_passes(self, grid):
        w = GridFunction.from_callable(grid, lambda x1, x2: np.clip(x1, 0.0, None) ** 1.5)
        report = monotonicity_cone(w, (0.0, 0.0), (1.0, 0.0), 0.25, [0.125, 0.5, 2.0])
        assert report.passed
        assert report.ell == 0.125
        assert report.kick_positive

    def test_two_sided_profile_fails(self, grid):
        w = GridFunction.from_callable(grid, lambda x1, x2: np.abs(x1) ** 1.5)
        report = monotonicity_cone(w, (0.0, 0.0), (1.0, 0.0), 0.25, [0.125, 0.5, 2.0, 8.0])
        assert not report.passed
        assert report.ell is None
        assert report.min_derivative < 0


class TestHarnack:
    def test_proportional_fields(self, grid_2d):
        u2 = GridFunction.from_callable(grid_2d, lambda x1, x2: 1 + x1 ** 2)
        u1 = GridFunction(grid_2d, 2 * u2.values)
        report = harnack_ratio(u1, u2, radius(grid_2d, (0.0, 0.0)) <= 0.5, 0.5)
        assert report.quotient == pytest.approx(1.0)
        assert report.nodes > 0

    def test_empty_region(self, grid_2d):
        u = GridFunction.from_callable(grid_2d, lambda x1, x2: 1 + x1 ** 2)
        with pytest.raises(AnalysisError):
            harnack_ratio(u, u, np.zeros(grid_2d.shape, dtype=bool), 0.5)

    def test_vanishing_denominator(self, grid_2d):
        u1 = GridFunction.from_callable(grid_2d, lambda x1, x2: 1 + x1 ** 2)
        u2 = GridFunction.from_callable(grid_2d, lambda x1, x2: x1 ** 2)
        with pytest.raises(AnalysisError):
            harnack_ratio(u1, u2, radius(grid_2d, (0.0, 0.0)) <= 0.5, 0.5)

    def test_grid_mismatch(self, grid_2d):
        u1 = GridFunction.zeros(grid_2d)
        u2 = GridFunction.zeros(GridSpec(dim=2, h=1 / 16, R=1))
        with pytest.raises(StructuralError):
            harnack_ratio(u1, u2, np.ones(grid_2d.shape, dtype=bool), 0.5)

    def test_cone_pair_needs_2d(self, table_1d):
        with pytest.raises(ConfigurationError):
            harnack_cone_pair(table_1d)

    def test_cone_pair_needs_room_outside_the_ball(self, table_2d):
        with pytest.raises(ConfigurationError):
            harnack_cone_pair(table_2d)

    def test_cone_pair_samples_data_outside_the_ball(self):
        table = build_kernel_table(isotropic_spec(2, 0.5), GridSpec(dim=2, h=1 / 8, R=1.5))
        radii = []

        def recorded(x1, x2):
            radii.append(float(np.hypot(x1, x2).min()))
            return tilted_data(x1, x2)

        with warnings.catch_warnings():
            warnings.simplefilter('error', RuntimeWarning)
            u1, u2, _, _ = harnack_cone_pair(table, data=(unit_data, recorded))
        assert min(radii) >= 1
        assert np.all(np.isfinite(u1.values)) and np.all(np.isfinite(u2.values))

    @pytest.mark.slow
    def test_cone_pair(self):
        table = build_kernel_table(isotropic_spec(2, 0.5), GridSpec(dim=2, h=1 / 16, R=1.5))
        u1, u2, region, reports = harnack_cone_pair(table)
        assert all(report.converged for report in reports)
        report = harnack_ratio(u1, u2, region, 0.5)
        assert 1 <= report.quotient < np.inf


class TestBoundaryQuotient:
    @pytest.fixture
    def halfline(self):
        grid = GridSpec(dim=1, h=1 / 64, R=1)
        (x,) = coordinates(grid)
        mask = x <= 1e-12
        fb = FreeBoundaryData(contact_mask=mask, boundary_cells=boundary_cells(mask),
                              distance=distance_function(mask, grid))
        return GridFunction(grid, 3 * np.sqrt(np.clip(x, 0.0, None))), fb

    def test_exact_power_is_constant(self, halfline):
        w, fb = halfline
        q = boundary_quotient(w, fb, 0.5, (2 * w.grid.h, 0.5))
        assert q.minimum == pytest.approx(3.0)
        assert q.maximum == pytest.approx(3.0)
        assert q.oscillation < 1e-12
        assert q.nodes == 31
        assert np.isnan(q.quotient.values[0])

    def test_band_below_lattice_scale(self, halfline):
        w, fb = halfline
        with pytest.raises(AnalysisError):
            boundary_quotient(w, fb, 0.5, (w.grid.h, 0.5))

    def test_empty_band(self, halfline):
        w, fb = halfline
        with pytest.raises(AnalysisError):
            boundary_quotient(w, fb, 0.5, (1.5, 2.0))

    def test_power_must_be_positive(self, halfline):
        w, fb = halfline
        with pytest.raises(ConfigurationError):
            boundary_quotient(w, fb, 0.0, (2 * w.grid.h, 0.5))


class TestContactDensity:
    @pytest.fixture
    def grid(self):
        return GridSpec(dim=2, h=1 / 64, R=1)

    def test_halfspace(self, grid):
        x1, _ = coordinates(grid)
        radii = [0.25, 0.125]
        report = contact_density(x1 <= 1e-12, grid, (0.0, 0.0), radii)
        for r, density in zip(radii, report.density):
            assert abs(density - 0.5) <= 2 * grid.h / r

    def test_full_contact(self, grid):
        report = contact_density(np.ones(grid.shape, dtype=bool), grid, (0.0, 0.0), [0.25])
        assert report.density == [1.0]


class TestHolderProbe:
    def test_affine_has_no_oscillation(self, grid_2d):
        u = GridFunction.from_callable(grid_2d, lambda x1, x2: 2 * x1 - x2)
        assert holder_probe(u, radius(grid_2d, (0.0, 0.0)) <= 0.5, 0.25) < 1e-9

    @pytest.mark.parametrize('exponent', [0.0, 1.0])
    def test_exponent_range(self, grid_2d, exponent):
        with pytest.raises(ConfigurationError):
            holder_probe(GridFunction.zeros(grid_2d), np.ones(grid_2d.shape, dtype=bool), exponent)

    def test_single_node(self, grid_2d):
        region = np.zeros(grid_2d.shape, dtype=bool)
        region[grid_2d.n, grid_2d.n] = True
        assert holder_probe(GridFunction.zeros(grid_2d), region, 0.5) == 0.0

    def test_sampling_is_deterministic(self, grid_2d):
        u = GridFunction.from_callable(grid_2d, lambda x1, x2: x1 ** 2)
        region = radius(grid_2d, (0.0, 0.0)) <= 0.5
        full = holder_probe(u, region, 0.5)
        sampled = holder_probe(u, region, 0.5, max_pairs=100)
        assert sampled == holder_probe(u, region, 0.5, max_pairs=100)
        assert 0 < sampled <= full + 1e-12


class TestExponentOracles:
    def test_amplitude(self, fine_grid, cfg):
        w = GridFunction.from_callable(fine_grid, lambda x: 3 * np.clip(x, 0.0, None) ** 1.5)
        fit = fit_boundary_exponent(w, (0.0,), cfg)
        assert fit.beta == pytest.approx(1.5, abs=1e-3)
        assert fit.c == pytest.approx(3.0, rel=1e-2)

    def test_multiplicative_noise(self, power_law, cfg):
        noise = 1 + 0.01 * np.random.default_rng(11).uniform(-1, 1, power_law.values.shape)
        noisy = GridFunction(power_law.grid, power_law.values * noise)
        clean = fit_boundary_exponent(power_law, (0.0,), cfg)
        assert abs(fit_boundary_exponent(noisy, (0.0,), cfg).beta - clean.beta) <= 0.05
