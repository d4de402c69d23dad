from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize_scalar
from scipy.spatial.distance import pdist

from app.core.exception import analysis_exception, configuration_exception, free_boundary_exception
from app.core.freeboundary import default_contact_tol
from app.core.solver import solve_dirichlet
from internal.logging import app_logger
from models.analysis import BlowupProfile, BoundaryQuotient
from models.free_boundary import FreeBoundaryData
from models.grid import GridFunction, axis, ball_mask, coordinates, node_index, radius
from models.kernel_table import KernelTable
from schemas.analysis import AnalysisConfig, CollapseReport, DensityReport, ExponentFit, GrowthReport, HarnackReport, \
    MonotonicityReport
from schemas.kernel import GridSpec
from schemas.solver import SolveReport, SolverSettings

MIN_FIT_RADII = 5
REFERENCE_NODES = 129
CONE_DIRECTIONS_2D = 64
_DIRECTION_SCAN = 72
# below this many cells the interpolation error, of order h/r, dominates c1_distance
RESOLVED_CELLS = 64
COLLAPSE_SCALES = 3


def default_radii(grid: GridSpec) -> List[float]:
    """
    r_k = R/8 * 2^-k, k = 0..6, stopping at 4h
    """
    radii = [grid.R / 8 * 2.0 ** -k for k in range(7)]
    return [r for r in radii if r >= 4 * grid.h * (1 - 1e-12)]


def resolve_radii(cfg: AnalysisConfig, grid: GridSpec) -> np.ndarray:
    radii = np.asarray(cfg.radii if cfg.radii else default_radii(grid), dtype=float)
    if radii.size == 0:
        analysis_exception(f'no resolvable radius on a grid with h={grid.h}, R={grid.R}')
    if radii.min() < 4 * grid.h * (1 - 1e-12):
        analysis_exception(f'radius {radii.min()} is below the lattice scale 4h = {4 * grid.h}')
    if radii.max() > grid.R / 4 * (1 + 1e-12):
        analysis_exception(f'radius {radii.max()} exceeds R/4 = {grid.R / 4}')
    return radii


def gradient(w: GridFunction) -> List[np.ndarray]:
    """
    centered differences inside, one-sided at the box edge
    """
    grads = np.gradient(w.values, w.grid.h)
    return [grads] if w.grid.dim == 1 else list(grads)


def gradient_norm(w: GridFunction) -> np.ndarray:
    return np.sqrt(sum(g ** 2 for g in gradient(w)))


def _check_boundary_node(w: GridFunction, x0: Sequence[float], tol: float) -> Tuple[int, ...]:
    idx = node_index(w.grid, x0)
    if abs(w.values[idx]) > tol:
        free_boundary_exception(f'{tuple(x0)} is not a contact node (w = {w.values[idx]})')
    for ax in range(w.grid.dim):
        for step in (-1, 1):
            nb = list(idx)
            nb[ax] += step
            if 0 <= nb[ax] < w.grid.shape[ax] and w.values[tuple(nb)] > tol:
                return idx
    free_boundary_exception(f'{tuple(x0)} has no non-contact neighbour')


def _contact_tol(cfg: AnalysisConfig, grid: GridSpec) -> float:
    return cfg.contact_tol if cfg.contact_tol is not None else default_contact_tol(grid.dim)


def growth_monitor(w: GridFunction, x0: Sequence[float], cfg: AnalysisConfig) -> GrowthReport:
    """
    theta(r) = sup_{r' >= r} r'^(-s-alpha) sup_{B_r'(x0)} |grad w|
    """
    _check_boundary_node(w, x0, _contact_tol(cfg, w.grid))
    radii = resolve_radii(cfg, w.grid)
    norm = gradient_norm(w)
    dist = radius(w.grid, x0)

    scaled = np.array([r ** (-cfg.s - cfg.alpha) * norm[dist <= r + 1e-9 * w.grid.h].max() for r in radii])
    # radii decrease, so the running max is the sup over r' >= r
    theta = np.maximum.accumulate(scaled)
    ratio = float(theta[-1] / theta[0]) if theta[0] > 0 else float('inf')
    return GrowthReport(x0=tuple(float(x) for x in x0), radii=radii.tolist(), theta=theta.tolist(), alpha=cfg.alpha,
                        ratio=ratio, regular_candidate=ratio >= cfg.regular_ratio)


def fit_boundary_exponent(w: GridFunction, x0: Sequence[float], cfg: AnalysisConfig) -> ExponentFit:
    """
    least-squares slope of log sup_{B_r(x0)} w against log r
    """
    _check_boundary_node(w, x0, _contact_tol(cfg, w.grid))
    radii = resolve_radii(cfg, w.grid)
    dist = radius(w.grid, x0)
    sups = np.array([w.values[dist <= r + 1e-9 * w.grid.h].max() for r in radii])

    usable = sups > 0
    if usable.sum() < MIN_FIT_RADII:
        analysis_exception(f'{int(usable.sum())} usable radii, need at least {MIN_FIT_RADII}')
    r, sup = radii[usable], sups[usable]
    if r.max() / r.min() < 10 * (1 - 1e-12):
        analysis_exception(f'radii span {r.max() / r.min():.3g}, need at least one decade')

    beta, log_c = np.polyfit(np.log(r), np.log(sup), 1)
    residual = float(np.abs(np.log(sup) - (log_c + beta * np.log(r))).max())
    return ExponentFit(beta=float(beta), c=float(np.exp(log_c)), residual=residual, radii_used=r.tolist(),
                       sups=sup.tolist())


def reference_window(dim: int, R0: float) -> GridSpec:
    return GridSpec(dim=dim, h=2 * R0 / (REFERENCE_NODES - 1), R=R0)


def _resample(w: GridFunction, x0: Sequence[float], r: float, window: GridSpec) -> np.ndarray:
    points = [x + r * c for x, c in zip(x0, coordinates(window))]
    if w.grid.dim == 1:
        return np.interp(points[0], axis(w.grid), w.values)
    ax = axis(w.grid)
    interpolator = RegularGridInterpolator((ax, ax), w.values, method='linear')
    return interpolator(np.stack([p.ravel() for p in points], axis=1)).reshape(window.shape)


def _halfspace_fit(v: np.ndarray, z: Sequence[np.ndarray], e: np.ndarray, p: float) -> Tuple[float, float]:
    model = np.clip(sum(ei * zi for ei, zi in zip(e, z)), 0.0, None) ** p
    denom = float((model * model).sum())
    if denom == 0:
        return 0.0, float('inf')
    K = float((v * model).sum()) / denom
    return K, float(((v - K * model) ** 2).sum())


def _fit_direction(v: np.ndarray, window: GridSpec, p: float) -> Tuple[float, np.ndarray]:
    z = coordinates(window)
    if window.dim == 1:
        fits = [(_halfspace_fit(v, z, np.array([e]), p), e) for e in (1.0, -1.0)]
        (K, _), e = min(fits, key=lambda f: f[0][1])
        return K, np.array([e])

    def error(angle: float) -> float:
        return _halfspace_fit(v, z, np.array([np.cos(angle), np.sin(angle)]), p)[1]

    angles = 2 * np.pi * np.arange(_DIRECTION_SCAN) / _DIRECTION_SCAN
    best = angles[int(np.argmin([error(a) for a in angles]))]
    step = 2 * np.pi / _DIRECTION_SCAN
    angle = minimize_scalar(error, bounds=(best - step, best + step), method='bounded',
                            options={'xatol': 1e-8}).x
    e = np.array([np.cos(angle), np.sin(angle)])
    K, _ = _halfspace_fit(v, z, e, p)
    return K, e


def blowup_profiles(w: GridFunction, x0: Sequence[float], cfg: AnalysisConfig, R0: float = 1.0) -> List[BlowupProfile]:
    """
    Rescale w(x0 + r .) by d = r^(1+s+alpha) theta(r) onto the reference
    window and fit K (e.x)_+^(1+s) at every radius.
    """
    growth = growth_monitor(w, x0, cfg)
    if not growth.regular_candidate:
        app_logger.warning(f'blow-ups at {tuple(x0)} which is not a regular candidate (ratio {growth.ratio:.3g})')

    s, p = cfg.s, 1 + cfg.s
    window = reference_window(w.grid.dim, R0)
    z = coordinates(window)
    unit = np.sqrt(sum(c ** 2 for c in z)) <= 1 + 1e-12
    profiles = []
    for r, theta in zip(growth.radii, growth.theta):
        if theta <= 0:
            app_logger.warning(f'theta vanishes at r={r}; scale skipped')
            continue
        if any(abs(x) + r * R0 > w.grid.R * (1 + 1e-12) for x in x0):
            app_logger.warning(f'window of radius {r * R0} around {tuple(x0)} leaves the box; scale skipped')
            continue

        d = r ** (1 + s + cfg.alpha) * theta
        v = GridFunction(window, _resample(w, x0, r, window) / d)
        K, e = _fit_direction(v.values, window, p)

        ez = sum(ei * zi for ei, zi in zip(e, z))
        model = K * np.clip(ez, 0.0, None) ** p
        model_grad = [K * p * np.clip(ez, 0.0, None) ** s * ei for ei in e]
        grads = gradient(v)
        grad_gap = np.sqrt(sum((g - mg) ** 2 for g, mg in zip(grads, model_grad)))
        c1 = float((np.abs(v.values - model) + grad_gap).max())
        grad_sup = float(np.sqrt(sum(g ** 2 for g in grads))[unit].max())
        profiles.append(BlowupProfile(r=float(r), d=float(d), v=v, K=K, e=e, c1_distance=c1, grad_sup_unit=grad_sup))
    return profiles


def collapse_trend(profiles: Sequence[BlowupProfile],
                   h: float,
                   resolved_cells: float = RESOLVED_CELLS,
                   scales: int = COLLAPSE_SCALES) -> CollapseReport:
    """
    c1_distance over the `scales` finest radii with r >= resolved_cells * h
    """
    resolved = sorted((p for p in profiles if p.r >= resolved_cells * h * (1 - 1e-12)), key=lambda p: -p.r)
    if len(resolved) < scales:
        analysis_exception(f'{len(resolved)} blow-up scales at or above {resolved_cells}h, need {scales}')
    finest = resolved[-scales:]
    c1 = [p.c1_distance for p in finest]
    return CollapseReport(radii=[p.r for p in finest], c1_distance=c1, resolved_cells=resolved_cells,
                          decreasing=all(b < a for a, b in zip(c1, c1[1:])))


def sample_directions(dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    angles = 2 * np.pi * np.arange(CONE_DIRECTIONS_2D) / CONE_DIRECTIONS_2D
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


def monotonicity_cone(w: GridFunction,
                      x0: Sequence[float],
                      e: Sequence[float],
                      r: float,
                      ell_grid: Sequence[float],
                      tol: float = 1e-8) -> MonotonicityReport:
    """
    Smallest l in ell_grid with d_e' w >= -tol on B_r(x0) for every sampled
    e' with e'.e >= l / sqrt(1 + l^2), plus min d_e w on B_r(x0 + 2 r e).
    """
    e = np.asarray(e, dtype=float)
    e = e / np.linalg.norm(e)
    grads = np.stack([g for g in gradient(w)])
    ball = ball_mask(w.grid, x0, r)

    def derivative(direction: np.ndarray, nodes: np.ndarray) -> float:
        return float(np.tensordot(direction, grads, axes=1)[nodes].min())

    directions = np.vstack([sample_directions(w.grid.dim), e[None]])
    min_along_e = derivative(e, ball)
    ells = sorted(float(ell) for ell in ell_grid)
    minima = []
    for ell in ells:
        threshold = ell / np.sqrt(1 + ell * ell)
        cone = directions[directions @ e >= threshold - 1e-12]
        minima.append(min(derivative(d, ball) for d in cone))
    passed_ell = next((ell for ell, low in zip(ells, minima) if low >= -tol), None)

    kick_ball = ball_mask(w.grid, [x + 2 * r * ei for x, ei in zip(x0, e)], r)
    kick = derivative(e, kick_ball) if kick_ball.any() else None
    return MonotonicityReport(passed=passed_ell is not None, ell=passed_ell, r=r, direction=tuple(e.tolist()),
                              min_derivative=min_along_e, ell_grid=ells, cone_minima=minima, kick=kick,
                              kick_positive=kick is not None and kick > 0)


def harnack_weight(grid: GridSpec, s: float) -> np.ndarray:
    """
    (1 + |y|)^(-n-2s) h^n
    """
    return (1 + radius(grid, (0.0,) * grid.dim)) ** (-grid.dim - 2 * s) * grid.h ** grid.dim


def harnack_ratio(u1: GridFunction, u2: GridFunction, region: np.ndarray, s: float) -> HarnackReport:
    u2.check_grid(u1.grid, 'u2')
    region = np.asarray(region, dtype=bool)
    if not region.any():
        analysis_exception('Harnack region is empty')
    if np.any(u2.values[region] <= 0):
        analysis_exception('u2 vanishes on the Harnack region')

    weight = harnack_weight(u1.grid, s)
    n1, n2 = float((u1.values * weight).sum()), float((u2.values * weight).sum())
    if n1 <= 0 or n2 <= 0:
        analysis_exception('Harnack normalization needs positive weighted integrals')

    ratio = (u1.values[region] / n1) / (u2.values[region] / n2)
    lo, hi = float(ratio.min()), float(ratio.max())
    return HarnackReport(min_ratio=lo, max_ratio=hi, quotient=hi / lo, nodes=int(region.sum()))


def cone_domain(grid: GridSpec) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    (B_1 minus the cone {x2 <= -|x1|}, the cone, half ball B_1/2 of the domain)
    """
    x1, x2 = coordinates(grid)
    cone = x2 <= -np.abs(x1)
    r = np.sqrt(x1 ** 2 + x2 ** 2)
    domain = (r < 1) & ~cone
    return domain, cone, domain & (r <= 0.5)


def unit_data(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    return np.ones_like(x1)


def tilted_data(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    return 1 + 0.5 * x1 / np.hypot(x1, x2)


def harnack_cone_pair(table: KernelTable,
                      data: Tuple = (unit_data, tilted_data),
                      cfg: Optional[SolverSettings] = None) -> Tuple[GridFunction, GridFunction, np.ndarray,
                                                                     Tuple[SolveReport, SolveReport]]:
    """
    Two solutions of L u = 0 in B_1 outside the cone, vanishing on the cone,
    with distinct positive data outside B_1.
    """
    grid = table.grid
    if grid.dim != 2:
        configuration_exception('the cone experiment is two dimensional')
    if grid.R <= 1:
        configuration_exception('the cone experiment needs R > 1')

    domain, _, region = cone_domain(grid)
    x1, x2 = coordinates(grid)
    outside = np.hypot(x1, x2) >= 1
    rhs = GridFunction.zeros(grid)
    solutions, reports = [], []
    for g in data:
        values = np.zeros(grid.shape)
        values[outside] = g(x1[outside], x2[outside])
        exterior_data = GridFunction(grid, values)
        u, report = solve_dirichlet(table, domain, rhs, exterior_data, cfg)
        solutions.append(u)
        reports.append(report)
    return solutions[0], solutions[1], region, (reports[0], reports[1])


def boundary_quotient(w: GridFunction,
                      fb: FreeBoundaryData,
                      power: float,
                      band: Tuple[float, float],
                      x0: Optional[Sequence[float]] = None) -> BoundaryQuotient:
    """
    w / d^power over lo <= d <= hi (within distance hi of x0 when given)
    """
    grid = w.grid
    fb.distance.check_grid(grid, 'distance')
    lo, hi = band
    if power <= 0:
        configuration_exception(f'quotient power must be positive, got {power}')
    if lo < 2 * grid.h * (1 - 1e-12):
        analysis_exception(f'band lower bound {lo} is below 2h = {2 * grid.h}')

    d = fb.distance.values
    nodes = (d >= lo) & (d <= hi * (1 + 1e-12))
    if x0 is not None:
        nodes &= ball_mask(grid, x0, hi)
    if not nodes.any():
        analysis_exception(f'no nodes with distance in [{lo}, {hi}]')

    quotient = np.full(grid.shape, np.nan)
    quotient[nodes] = w.values[nodes] / d[nodes] ** power
    values = quotient[nodes]
    return BoundaryQuotient(quotient=GridFunction(grid, quotient), power=power, band=(lo, hi),
                            nodes=int(nodes.sum()), minimum=float(values.min()), maximum=float(values.max()))


def contact_density(contact_mask: np.ndarray, grid: GridSpec, x0: Sequence[float],
                    radii: Sequence[float]) -> DensityReport:
    """
    |mask & B_r| / |B_r| counted in lattice nodes
    """
    mask = np.asarray(contact_mask, dtype=bool)
    dist = radius(grid, x0)
    density = []
    for r in radii:
        ball = dist <= r + 1e-9 * grid.h
        density.append(float((mask & ball).sum() / ball.sum()))
    return DensityReport(x0=tuple(float(x) for x in x0), radii=[float(r) for r in radii], density=density)


def holder_probe(u: GridFunction,
                 region: np.ndarray,
                 exponent: float,
                 max_pairs: int = 200_000,
                 seed: int = 0) -> float:
    """
    max |grad u(x) - grad u(y)| / |x - y|^exponent over node pairs of the region;
    beyond max_pairs a fixed-seed random sample of pairs is used
    """
    if not 0 < exponent < 1:
        configuration_exception(f'Hoelder exponent must lie in (0, 1), got {exponent}')
    region = np.asarray(region, dtype=bool)
    count = int(region.sum())
    if count < 2:
        return 0.0

    grads = np.stack([g[region] for g in gradient(u)], axis=1)
    points = np.stack([c[region] for c in coordinates(u.grid)], axis=1)
    if count * (count - 1) // 2 <= max_pairs:
        return float((pdist(grads) / pdist(points) ** exponent).max())

    rng = np.random.default_rng(seed)
    i = rng.integers(0, count, size=max_pairs)
    j = rng.integers(0, count, size=max_pairs)
    keep = i != j
    i, j = i[keep], j[keep]
    dg = np.linalg.norm(grads[i] - grads[j], axis=1)
    dx = np.linalg.norm(points[i] - points[j], axis=1)
    return float((dg / dx ** exponent).max())
