import time
from typing import Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.signal import fftconvolve
from scipy.sparse.linalg import LinearOperator, cg, gmres

from app.core.exception import configuration_exception, structural_exception
from app.core.operator import LatticeOperator, apply_linear, check_family, member_values
from internal.config import default_tolerance, settings
from internal.logging import app_logger
from models.grid import Exterior, GridFunction, radius
from models.kernel_table import KernelTable
from models.problem import ObstacleProblem
from schemas.kernel import GridSpec
from schemas.solver import AprioriReport, SolverSettings, SolveReport

SUP_TOL = 1e-12
LIPSCHITZ_TOL = 1e-8
SEMICONVEXITY_TOL = 1e-6
# policy switches only when another member wins by more than this fraction of tol
POLICY_TIE_FACTOR = 0.01


def resolve_settings(cfg: Optional[SolverSettings], dim: int) -> SolverSettings:
    cfg = cfg or SolverSettings()
    return cfg.copy(update={
        'tolerance': cfg.tolerance if cfg.tolerance is not None else default_tolerance(dim),
        'max_iters': cfg.max_iters if cfg.max_iters is not None else settings.max_iters,
        'max_policy_iters': cfg.max_policy_iters if cfg.max_policy_iters is not None else settings.max_policy_iters,
    })


def validate_problem(problem: ObstacleProblem) -> None:
    grid = problem.grid
    phi = problem.phi.values
    if not np.all(np.isfinite(phi)):
        configuration_exception('obstacle must be finite on every node')

    positive = phi > 0
    if positive.any():
        support = float(radius(grid, (0.0,) * grid.dim)[positive].max())
        if support > grid.R / 4 + 1e-9 * grid.h:
            configuration_exception(f'obstacle support radius {support} exceeds R/4 = {grid.R / 4}')

    if problem.is_family:
        check_family(problem.family, problem.tables)
        tables = problem.tables
    else:
        if problem.table is None:
            structural_exception('obstacle problem has no operator')
        tables = (problem.table,)
    for table in tables:
        problem.phi.check_grid(table.grid, 'obstacle')


def complementarity_residual(op: LatticeOperator, u: np.ndarray, phi: np.ndarray) -> float:
    return float(np.abs(np.minimum(op.residual(u), u - phi)).max())


def _linear_solve(op: LatticeOperator, free: np.ndarray, rhs: np.ndarray, guess: np.ndarray,
                  tol: float) -> np.ndarray:
    """
    A_FF y = rhs: dense factorization for small 1D systems, Krylov otherwise
    """
    if op.grid.dim == 1 and op.grid.shape[0] <= settings.dense_limit:
        matrix = op.dense()[np.ix_(free, free)]
        return linalg.solve(matrix, rhs, assume_a='pos' if op.symmetric else 'gen')

    size = int(free.sum())
    full = np.zeros(op.grid.shape)

    def matvec(y):
        full[...] = 0.0
        full[free] = y
        return op.matvec(full)[free]

    operator = LinearOperator((size, size), matvec=matvec, dtype=float)
    atol = settings.linear_rtol_factor * tol
    if op.symmetric:
        y, info = cg(operator, rhs, x0=guess, rtol=0.0, atol=atol, maxiter=20 * size)
    else:
        y, info = gmres(operator, rhs, x0=guess, rtol=0.0, atol=atol, restart=100, maxiter=20 * size)
    if info != 0:
        app_logger.warning(f'krylov solve stopped with info={info} on {size} unknowns')
    return y


def _howard(op: LatticeOperator, phi: np.ndarray, u: np.ndarray, tol: float, max_iters: int) -> Tuple[np.ndarray, int]:
    """
    Policy iteration on min(A u - b, D (u - phi)) = 0
    """
    contact: Optional[np.ndarray] = None
    iterations = 0
    for iterations in range(1, max_iters + 1):
        new_contact = op.diagonal * (u - phi) < op.residual(u)
        if contact is not None and np.array_equal(new_contact, contact):
            break
        contact = new_contact

        free = ~contact
        previous = u
        u = np.where(contact, phi, 0.0)
        if free.any():
            rhs = op.b[free] - op.matvec(u)[free]
            u[free] = _linear_solve(op, free, rhs, previous[free], tol)
        app_logger.info(f'howard iteration {iterations}: contact nodes {int(contact.sum())}, '
                        f'residual {complementarity_residual(op, u, phi):.3e}')
    return u, iterations


def _lexicographic_sweep(op: LatticeOperator, phi: np.ndarray, u: np.ndarray) -> np.ndarray:
    m = max(op.tables[a].m for a in op.active)
    padded = np.pad(u, m)
    shape = op.grid.shape
    for idx in np.ndindex(*shape):
        table = op.tables[op.policy[idx]]
        lo = tuple(i + m - table.m for i in idx)
        patch = padded[tuple(slice(i, i + 2 * table.m + 1) for i in lo)]
        update = (op.b[idx] + np.vdot(patch, table.stencil)) / op.diagonal[idx]
        padded[tuple(i + m for i in idx)] = max(phi[idx], update)
    return padded[(slice(m, -m),) * op.grid.dim].copy()


def _red_black_sweep(op: LatticeOperator, phi: np.ndarray, u: np.ndarray) -> np.ndarray:
    colour = np.indices(op.grid.shape).sum(axis=0) % 2
    u = u.copy()
    for c in (0, 1):
        for a in op.active:
            table = op.tables[a]
            rows = (colour == c) & (op.policy == a)
            conv = fftconvolve(np.pad(u, table.m), table.stencil, mode='valid')
            u[rows] = np.maximum(phi[rows], (op.b[rows] + conv[rows]) / op.diagonal[rows])
    return u


def _pgs(op: LatticeOperator, phi: np.ndarray, u: np.ndarray, cfg: SolverSettings) -> Tuple[np.ndarray, int, bool]:
    sweep = _lexicographic_sweep if cfg.sweep_order == 'lexicographic' else _red_black_sweep
    u = np.maximum(u, phi)
    for iterations in range(1, cfg.max_iters + 1):
        u = sweep(op, phi, u)
        residual = complementarity_residual(op, u, phi)
        if iterations % 100 == 0:
            app_logger.info(f'{cfg.sweep_order} sweep {iterations}: residual {residual:.3e}')
        if residual <= cfg.tolerance:
            return u, iterations, True
    return u, cfg.max_iters, False


def _solve_linear_obstacle(op: LatticeOperator, phi: np.ndarray, u0: np.ndarray,
                           cfg: SolverSettings) -> Tuple[np.ndarray, int, bool]:
    if cfg.method == 'pgs':
        return _pgs(op, phi, u0, cfg)

    u, iterations = _howard(op, phi, u0, cfg.tolerance, cfg.max_iters)
    u = np.maximum(u, phi)
    return u, iterations, complementarity_residual(op, u, phi) <= cfg.tolerance


def _report(op: LatticeOperator, u: np.ndarray, phi: np.ndarray, cfg: SolverSettings, started: float,
            **kwargs) -> SolveReport:
    residual = op.residual(u)
    contact = u <= phi
    bound = float(np.abs(residual[contact]).max()) if contact.any() else 0.0
    comp = float(np.abs(np.minimum(residual, u - phi)).max())
    kwargs.setdefault('converged', comp <= cfg.tolerance)
    return SolveReport(complementarity_residual=comp, operator_bound=bound, wall_time=time.perf_counter() - started,
                       method=cfg.method, tolerance=cfg.tolerance, **kwargs)


def solve_obstacle(problem: ObstacleProblem, cfg: Optional[SolverSettings] = None) -> Tuple[GridFunction, SolveReport]:
    """
    min(-L_h u, u - phi) = 0 for a single kernel table.
    Non-convergence is reported, not raised; the best iterate is returned.
    """
    validate_problem(problem)
    if problem.is_family:
        structural_exception('solve_obstacle needs a single kernel table; use solve_obstacle_fully_nonlinear')

    cfg = resolve_settings(cfg, problem.grid.dim)
    started = time.perf_counter()
    phi = problem.phi.values
    op = LatticeOperator((problem.table,), exterior=problem.exterior)

    u, iterations, converged = _solve_linear_obstacle(op, phi, np.zeros(problem.grid.shape), cfg)
    report = _report(op, u, phi, cfg, started, iterations=iterations)
    if not converged:
        report.converged = False
        report.message = f'no convergence within {cfg.max_iters} iterations'
    app_logger.info(f'solve_obstacle: {report.iterations} iterations, residual {report.complementarity_residual:.3e}, '
                    f'converged={report.converged}')
    return GridFunction(problem.grid, u), report


def solve_obstacle_fully_nonlinear(problem: ObstacleProblem,
                                   cfg: Optional[SolverSettings] = None) \
        -> Tuple[GridFunction, SolveReport, np.ndarray]:
    """
    Policy iteration: freeze the maximizing member per node, solve the linear
    obstacle problem with those rows, recompute the argmax.
    """
    validate_problem(problem)
    if not problem.is_family:
        structural_exception('solve_obstacle_fully_nonlinear needs a fully nonlinear family')

    cfg = resolve_settings(cfg, problem.grid.dim)
    started = time.perf_counter()
    grid, family, tables = problem.grid, problem.family, problem.tables
    phi = problem.phi.values
    drifts = [m.drift_values(grid) for m in family.members]
    tie = POLICY_TIE_FACTOR * cfg.tolerance

    def outer_residual(values: np.ndarray) -> Tuple[float, np.ndarray]:
        stack = member_values(family, tables, GridFunction(grid, values), problem.exterior)
        return float(np.abs(np.minimum(-stack.max(axis=0), values - phi)).max()), stack

    u = np.zeros(grid.shape)
    residual, stack = outer_residual(u)
    policy = np.argmax(stack, axis=0)
    history = [residual]
    inner_total, converged, stable = 0, False, False

    # the policy whose rows produced the current u
    solved = policy
    for outer in range(1, cfg.max_policy_iters + 1):
        solved = policy
        op = LatticeOperator(tables, policy=solved, exterior=problem.exterior, drifts=drifts)
        u, inner, _ = _solve_linear_obstacle(op, phi, u, cfg)
        inner_total += inner

        residual, stack = outer_residual(u)
        history.append(residual)
        current = np.take_along_axis(stack, policy[None], axis=0)[0]
        new_policy = np.where(stack.max(axis=0) - current <= tie, policy, np.argmax(stack, axis=0))
        stable = bool(np.array_equal(new_policy, policy))
        app_logger.info(f'policy iteration {outer}: switched nodes {int((new_policy != policy).sum())}, '
                        f'residual {residual:.3e}')
        if stable and residual <= cfg.tolerance:
            converged = True
            break
        policy = new_policy

    slack = cfg.tolerance
    monotone = all(b <= a * (1 + 1e-9) + slack for a, b in zip(history, history[1:]))
    op = LatticeOperator(tables, policy=solved, exterior=problem.exterior, drifts=drifts)
    report = _report(op, u, phi, cfg, started, iterations=inner_total, converged=converged,
                     policy_iterations=len(history) - 1, residual_history=history, monotone_residuals=monotone)
    report.complementarity_residual = residual
    if not converged:
        report.message = 'policy did not stabilize' if not stable else 'residual above tolerance'
    return GridFunction(grid, u), report, solved


def solve_dirichlet(table: KernelTable,
                    domain_mask: np.ndarray,
                    rhs: GridFunction,
                    exterior_data: GridFunction,
                    cfg: Optional[SolverSettings] = None,
                    exterior: Optional[Exterior] = None) -> Tuple[GridFunction, SolveReport]:
    """
    L_h u = rhs on the domain, u = exterior_data on the remaining box nodes
    """
    grid = table.grid
    mask = np.asarray(domain_mask, dtype=bool)
    if mask.shape != grid.shape:
        structural_exception(f'domain mask of shape {mask.shape} does not fit grid shape {grid.shape}')
    if not mask.any():
        structural_exception('Dirichlet domain is empty')
    edge = np.zeros(grid.shape, dtype=bool)
    for ax in range(grid.dim):
        index = [slice(None)] * grid.dim
        index[ax] = [0, -1]
        edge[tuple(index)] = True
    if (mask & edge).any():
        configuration_exception('Dirichlet domain must lie strictly inside the box')
    rhs.check_grid(grid, 'rhs')
    exterior_data.check_grid(grid, 'exterior data')

    cfg = resolve_settings(cfg, grid.dim)
    started = time.perf_counter()
    op = LatticeOperator((table,), exterior=exterior)
    u = np.where(mask, 0.0, exterior_data.values)
    system_rhs = op.b[mask] - op.matvec(u)[mask] - rhs.values[mask]
    u[mask] = _linear_solve(op, mask, system_rhs, np.zeros(int(mask.sum())), cfg.tolerance)

    solution = GridFunction(grid, u)
    lu = apply_linear(table, solution, exterior=exterior).values
    residual = float(np.abs(lu[mask] - rhs.values[mask]).max())
    report = SolveReport(iterations=1, complementarity_residual=residual, converged=residual <= cfg.tolerance,
                         wall_time=time.perf_counter() - started, method='direct', tolerance=cfg.tolerance)
    if not report.converged:
        report.message = f'Dirichlet residual {residual:.3e} above tolerance'
    app_logger.info(f'solve_dirichlet: {int(mask.sum())} unknowns, residual {residual:.3e}')
    return solution, report


def torsion_profile(x: np.ndarray, s: float, mu: float = 1.0) -> np.ndarray:
    """
    Solution of L u = -1 on (-1, 1), u = 0 outside, for the 1D kernel mu |y|^(-1-2s)
    """
    return np.sin(np.pi * s) / (np.pi * mu) * np.clip(1 - x ** 2, 0.0, None) ** s


def _directions(dim: int):
    return [(1,)] if dim == 1 else [(1, 0), (0, 1), (1, 1), (1, -1)]


def _shifted(values: np.ndarray, v) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    (f(x+v), f(x-v), f(x)) over the nodes where all three exist
    """
    reach = max(abs(k) for k in v)
    inner = tuple(slice(reach, n - reach) for n in values.shape)
    plus = tuple(slice(reach + k, n - reach + k) for k, n in zip(v, values.shape))
    minus = tuple(slice(reach - k, n - reach - k) for k, n in zip(v, values.shape))
    return values[plus], values[minus], values[inner]


def _core(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """
    nodes with |x|_inf <= R/2, clear of the boundary layer at the box edge
    """
    n, half = grid.n, grid.n // 2
    return values[(slice(n - half, n + half + 1),) * grid.dim]


def _second_difference_extremes(values: np.ndarray, h: float) -> Tuple[float, float]:
    lowest, largest = np.inf, 0.0
    for v in _directions(values.ndim):
        plus, minus, centre = _shifted(values, v)
        dd = (plus + minus - 2 * centre) / (h * h * sum(k * k for k in v))
        lowest = min(lowest, float(dd.min()))
        largest = max(largest, float(np.abs(dd).max()))
    return lowest, largest


def _lipschitz(values: np.ndarray, h: float) -> float:
    best = 0.0
    for v in _directions(values.ndim):
        plus, _, centre = _shifted(values, v)
        best = max(best, float(np.abs(plus - centre).max()) / (h * np.sqrt(sum(k * k for k in v))))
    return best


def apriori_suite(u: GridFunction,
                  phi: GridFunction,
                  table: KernelTable,
                  exterior: Optional[Exterior] = None) -> AprioriReport:
    """
    Semiconvexity, sup and Lipschitz bounds against the obstacle, and the size of L_h u on the contact set.
    """
    u.check_grid(table.grid, 'u')
    phi.check_grid(table.grid, 'obstacle')
    h = table.grid.h

    u_core, phi_core = _core(u.values, table.grid), _core(phi.values, table.grid)
    semi_min, _ = _second_difference_extremes(u_core, h)
    _, phi_c11 = _second_difference_extremes(phi_core, h)
    sup_u, sup_phi = float(np.abs(u.values).max()), float(np.abs(phi.values).max())
    lip_u, lip_phi = _lipschitz(u_core, h), _lipschitz(phi_core, h)

    contact = u.values <= phi.values
    lu = apply_linear(table, u, exterior=exterior).values
    bound = float(np.abs(lu[contact]).max()) if contact.any() else 0.0

    return AprioriReport(semiconvexity_min=semi_min, phi_c11=phi_c11, sup_u=sup_u, sup_phi=sup_phi,
                         lipschitz_u=lip_u, lipschitz_phi=lip_phi, contact_operator_bound=bound,
                         semiconvexity_ok=semi_min >= -phi_c11 - SEMICONVEXITY_TOL,
                         sup_ok=sup_u <= sup_phi + SUP_TOL,
                         lipschitz_ok=lip_u <= lip_phi + LIPSCHITZ_TOL,
                         operator_bound_finite=bool(np.isfinite(bound)))
