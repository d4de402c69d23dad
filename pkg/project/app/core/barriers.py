from typing import Callable, Optional, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad_vec

from app.core.exception import configuration_exception, structural_exception
from app.core.kernels import build_kernel_table, sample_angles
from app.core.operator import apply_linear
from internal.logging import app_logger
from models.grid import Exterior, GridFunction, coordinates
from models.kernel_table import KernelTable
from schemas.barriers import ProfileSpec, VerificationReport
from schemas.kernel import GridSpec

KINDS = ('halfspace_s', 'halfspace_1ps', 'exp_barrier', 'cone_subsolution')
SENSES = ('subsolution', 'supersolution', 'harmonic')
_RING_GAUSS_ORDER = 24

Region = Callable[..., np.ndarray]
Schedule = Union[float, Callable[[float], float]]


def _along(e, coords) -> np.ndarray:
    return sum(ei * c for ei, c in zip(e, coords))


def profile_function(spec: ProfileSpec) -> Callable[..., np.ndarray]:
    """
    closed form of the profile over coordinate arrays
    """
    s, K, e = spec.s, spec.K, spec.e

    if spec.kind == 'halfspace_s':
        return lambda *x: K * np.clip(_along(e, x), 0.0, None) ** s
    if spec.kind == 'halfspace_1ps':
        return lambda *x: K * np.clip(_along(e, x), 0.0, None) ** (1 + s)
    if spec.kind == 'exp_barrier':
        return lambda *x: K * np.exp(-np.abs(_along(e, x)))
    if spec.kind == 'cone_subsolution':
        eta, power = spec.eta, s + spec.epsilon

        def cone(*x):
            ex = _along(e, x)
            r2 = sum(c * c for c in x)
            r = np.sqrt(r2)
            safe = np.where(r2 > 0, r2, 1.0)
            bracket = ex - eta / 4 * r * (1 - np.where(r2 > 0, ex * ex / safe, 1.0))
            return K * np.clip(bracket, 0.0, None) ** power
        return cone

    structural_exception(f'unknown profile kind {spec.kind!r}, expected one of {KINDS}')


def growth_exponent(spec: ProfileSpec) -> float:
    return {
        'halfspace_s': spec.s,
        'halfspace_1ps': 1 + spec.s,
        'exp_barrier': 0.0,
        'cone_subsolution': spec.s + (spec.epsilon or 0.0),
    }[spec.kind]


def make_profile(spec: ProfileSpec, grid: GridSpec) -> GridFunction:
    if len(spec.e) != grid.dim:
        structural_exception(f'direction of dimension {len(spec.e)} on a {grid.dim}D grid')
    return GridFunction.from_callable(grid, profile_function(spec))


def far_field(spec: ProfileSpec, table: KernelTable) -> Callable[..., np.ndarray]:
    """
    int_{|y| > window} g(x+y) K(y) dy for the closed-form profile g.

    Radially y = window * t^(-q/2s) turns the integral into
    window^(-2s)/(2s) int_0^1 q t^(q-1) g(x + y e) dt; q absorbs the growth of g.
    """
    g = profile_function(spec)
    s = table.spec.s
    p = growth_exponent(spec)
    if p >= 2 * s:
        configuration_exception(f'profile grows like |x|^{p}; the tail diverges unless the growth '
                                f'is below 2s = {2 * s}')

    wr = table.window_radius
    q = 2.0 / (1 - p / (2 * s))
    scale = wr ** (-2 * s) / (2 * s)

    def radial(tau):
        return wr * tau ** (-q / (2 * s)), q * tau ** (q - 1)

    if table.grid.dim == 1:
        mu_plus, mu_minus = (float(v) for v in table.spec.mu)

        def far_1d(x):
            def integrand(tau):
                y, jac = radial(tau)
                return jac * (mu_plus * g(x + y) + mu_minus * g(x - y))
            value, _ = quad_vec(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-10)
            return scale * value
        return far_1d

    nodes, weights = leggauss(_RING_GAUSS_ORDER)
    tau_nodes, tau_weights = 0.5 * (nodes + 1), 0.5 * weights
    angles = sample_angles(table.spec)
    mu = np.asarray(table.spec.mu, dtype=float)
    dtheta = 2 * np.pi / mu.size

    def far_2d(x1, x2):
        out = np.zeros(np.shape(x1))
        for theta, m in zip(angles, mu):
            c, sn = np.cos(theta), np.sin(theta)
            for tau, wt in zip(tau_nodes, tau_weights):
                y, jac = radial(tau)
                out += m * dtheta * wt * jac * g(x1 + y * c, x2 + y * sn)
        return scale * out
    return far_2d


def profile_exterior(spec: ProfileSpec, table: KernelTable) -> Exterior:
    return Exterior(pad=profile_function(spec), far_field=far_field(spec, table))


def halfspace_region(e, lo: float, hi: float) -> Region:
    """
    {e.x >= lo} inside the cube of half-width hi
    """
    return lambda *x: (_along(e, x) >= lo - 1e-12) & (np.max(np.abs(np.stack(x)), axis=0) <= hi + 1e-12)


def box_region(hi: float) -> Region:
    return lambda *x: np.max(np.abs(np.stack(x)), axis=0) <= hi + 1e-12


def cone_region(spec: ProfileSpec, r_min: float, r_max: float) -> Region:
    """
    positivity cone of the profile with r_min <= |x| <= r_max
    """
    g = profile_function(spec)

    def region(*x):
        r = np.sqrt(sum(c * c for c in x))
        return (g(*x) > 0) & (r >= r_min - 1e-12) & (r <= r_max + 1e-12)
    return region


def default_schedule(s: float) -> Callable[[float], float]:
    return lambda h: h ** min(s, 2 - 2 * s)


def _singular_exclusion(spec: ProfileSpec, grid: GridSpec) -> np.ndarray:
    coords = coordinates(grid)
    if spec.kind in ('halfspace_s', 'halfspace_1ps'):
        return np.abs(_along(spec.e, coords)) < 2 * grid.h - 1e-12
    if spec.kind == 'cone_subsolution':
        return np.sqrt(sum(c * c for c in coords)) < 2 * grid.h - 1e-12
    # the exp kink is Lipschitz
    return np.zeros(grid.shape, dtype=bool)


def _evaluate(spec: ProfileSpec, table: KernelTable, region: Region) -> Tuple[np.ndarray, int]:
    grid = table.grid
    mask = np.asarray(region(*coordinates(grid)), dtype=bool) & ~_singular_exclusion(spec, grid)
    if not mask.any():
        configuration_exception(f'verification region is empty at h={grid.h} after excluding singular nodes')
    lu = apply_linear(table, make_profile(spec, grid), exterior=profile_exterior(spec, table)).values
    return lu[mask], int(mask.sum())


def _violation(values: np.ndarray, sense: str, bound: Optional[float]) -> float:
    if sense == 'harmonic':
        return float(np.abs(values).max())
    if sense == 'subsolution':
        return max(0.0, float(-values.min()))
    if bound is None:
        return float(values.max())
    return max(0.0, float(values.max()) - bound)


def verify_inequality(spec: ProfileSpec,
                      table: KernelTable,
                      region: Region,
                      sense: str,
                      tol: Optional[Schedule] = None,
                      bound: Optional[float] = None,
                      refine: bool = True) -> VerificationReport:
    """
    Evaluate L_h of the profile over the region and check the declared sense.

    subsolution: L >= -tol; harmonic: |L| <= tol; supersolution: L <= bound + tol,
    or without a bound, sup L finite and at most doubled by refinement.
    With refine, the same check at h/2 must not get worse.
    """
    if sense not in SENSES:
        configuration_exception(f'unknown sense {sense!r}, expected one of {SENSES}')
    schedule = tol if tol is not None else default_schedule(table.spec.s)
    tolerance = float(schedule(table.grid.h) if callable(schedule) else schedule)

    tables = [table]
    if refine:
        tables.append(build_kernel_table(table.spec, table.grid.refined(), table.window_radius, table.quadrature))

    hs, sizes, violations, sups, infs = [], [], [], [], []
    for t in tables:
        values, size = _evaluate(spec, t, region)
        hs.append(t.grid.h)
        sizes.append(size)
        violations.append(_violation(values, sense, bound))
        sups.append(float(values.max()))
        infs.append(float(values.min()))
        app_logger.info(f'{spec.kind} {sense}: h={t.grid.h} nodes={size} violation={violations[-1]:.3e}')

    if sense == 'supersolution' and bound is None:
        passed = all(np.isfinite(sups))
        if refine:
            passed = passed and sups[1] <= 2 * max(abs(sups[0]), tolerance)
    else:
        passed = violations[0] <= tolerance
        if refine:
            passed = passed and violations[1] <= violations[0]

    return VerificationReport(profile=spec.kind, sense=sense, h=hs, region_size=sizes, violation=violations,
                              sup=sups, inf=infs, tolerance=tolerance, bound=bound, eta=spec.eta, passed=passed)


def search_cone_eta(s: float,
                    epsilon: float,
                    table: KernelTable,
                    e: Tuple[float, ...],
                    r_min: Optional[float] = None,
                    r_max: Optional[float] = None,
                    max_k: int = 8,
                    tol: Optional[Schedule] = None,
                    refine: bool = False) -> Tuple[Optional[float], VerificationReport]:
    """
    First eta in 1, 1/2, 1/4, ... for which the cone profile passes the subsolution check
    """
    grid = table.grid
    r_min = 8 * grid.h if r_min is None else r_min
    r_max = grid.R / 2 if r_max is None else r_max

    report = None
    for k in range(max_k + 1):
        spec = ProfileSpec(kind='cone_subsolution', s=s, e=e, epsilon=epsilon, eta=2.0 ** -k)
        report = verify_inequality(spec, table, cone_region(spec, r_min, r_max), 'subsolution', tol, refine=refine)
        if report.passed:
            return spec.eta, report
    app_logger.warning(f'no eta down to 2^-{max_k} passes the cone subsolution check')
    return None, report
