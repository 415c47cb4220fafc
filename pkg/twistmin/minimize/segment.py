# minimize/segment.py
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal, solve_banded

from ..exceptions import InvalidParameterError, NonConvergenceError
from .options import METHOD_PROJECTED_GRADIENT, MinimizeOptions

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
MIN_STEP = 1e-14
TIE_TOL = 1e-12
MAX_STEP_SEEDS = 64
GRID_SEEDS_KEPT = 8
GRID_SEED_MAX_INTERIOR = 4
DISTINCT_TOL = 1e-8


@dataclass
class ChainResult:
    """
    Outcome of one constrained chain minimization.

    Attributes:
        values (np.ndarray): Minimizing chain, fixed sites included
        action (float): Sum of h over consecutive pairs
        residuals (np.ndarray): |dW/dx_i| at every site (0 at fixed sites)
        at_bound (np.ndarray): Sites held on a window bound by the active set
        kkt_residual (float): Max |dW/dx_i| over free sites not held on a bound
        sweeps (int): Iterations used
        method (str): Method that produced the result
    """
    values: np.ndarray
    action: float
    residuals: np.ndarray
    at_bound: np.ndarray
    kkt_residual: float
    sweeps: int
    method: str


def chain_action(h, values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    return float(np.sum(h.eval(values[:-1], values[1:])))


def chain_gradient(h, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    g = np.zeros_like(values)
    if values.size < 2:
        return g
    g[:-1] += h.d1(values[:-1], values[1:])
    g[1:] += h.d2(values[:-1], values[1:])
    return g


def chain_hessian(h, values):
    """Diagonal and off-diagonal of the tridiagonal Hessian of the chain action."""
    values = np.asarray(values, dtype=float)
    diag = np.zeros_like(values)
    left, right = values[:-1], values[1:]
    diag[:-1] += h.d11(left, right)
    diag[1:] += h.d22(left, right)
    off = np.broadcast_to(np.asarray(h.d12(left, right), dtype=float), left.shape).copy()
    return diag, off


def _as_bounds(bound, size: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(bound, dtype=float), (size,)).astype(float)


def _active_set(x, g, free, lower, upper):
    at_lo = free & (x <= lower) & (g > 0.0)
    at_hi = free & (x >= upper) & (g < 0.0)
    return at_lo | at_hi


def _kkt(x, g, free, lower, upper):
    active = _active_set(x, g, free, lower, upper)
    inactive = free & ~active
    residual = float(np.max(np.abs(g[inactive]))) if inactive.any() else 0.0
    return residual, active, inactive


def _result(h, x, free, lower, upper, sweeps, method) -> ChainResult:
    g = chain_gradient(h, x)
    residual, active, _ = _kkt(x, g, free, lower, upper)
    return ChainResult(
        values=x,
        action=chain_action(h, x),
        residuals=np.where(free, np.abs(g), 0.0),
        at_bound=active,
        kkt_residual=residual,
        sweeps=sweeps,
        method=method,
    )


def _slack(value: float) -> float:
    return 1e-12 * max(1.0, abs(value))


def _newton_direction(diag, off, rhs):
    n = diag.size
    if n == 1:
        curvature = diag[0] if diag[0] > 0 else max(1.0, abs(diag[0]))
        return rhs / curvature

    scale = max(1.0, float(np.max(np.abs(diag))))
    lowest = float(eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0])
    shift = 0.0
    if lowest <= 1e-8 * scale:
        shift = 1e-2 * scale - lowest

    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag + shift
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, rhs)


def _projected_newton(h, x, free, lower, upper, opts: MinimizeOptions) -> ChainResult:
    value = chain_action(h, x)
    for sweep in range(1, opts.max_sweeps + 1):
        g = chain_gradient(h, x)
        residual, _, inactive = _kkt(x, g, free, lower, upper)
        if residual <= opts.tol_grad:
            return _result(h, x, free, lower, upper, sweep - 1, opts.method)

        idx = np.flatnonzero(inactive)
        diag, off = chain_hessian(h, x)
        sub_off = np.where(np.diff(idx) == 1, off[idx[:-1]], 0.0)
        direction = _newton_direction(diag[idx], sub_off, -g[idx])
        if float(g[idx] @ direction) >= 0.0:
            direction = -g[idx]

        step = 1.0
        while step >= MIN_STEP:
            trial = x.copy()
            trial[idx] = np.clip(x[idx] + step * direction, lower[idx], upper[idx])
            trial_value = chain_action(h, trial)
            decrease = float(g[idx] @ (trial[idx] - x[idx]))
            if trial_value <= value + ARMIJO * decrease + _slack(value):
                break
            step *= 0.5
        else:
            raise NonConvergenceError(
                f"Line search stalled at sweep {sweep} with residual {residual:.3e}", best_iterate=x
            )

        x, value = trial, trial_value

    raise NonConvergenceError(
        f"Projected Newton did not reach tol_grad={opts.tol_grad} in {opts.max_sweeps} sweeps",
        best_iterate=x,
    )


def _projected_gradient(h, x, free, lower, upper, opts: MinimizeOptions) -> ChainResult:
    value = chain_action(h, x)
    g = chain_gradient(h, x)
    diag, _ = chain_hessian(h, x)
    alpha = 1.0 / max(1.0, float(np.max(np.abs(diag))) * 2.0)

    for sweep in range(1, opts.max_sweeps + 1):
        residual, _, _ = _kkt(x, g, free, lower, upper)
        if residual <= opts.tol_grad:
            return _result(h, x, free, lower, upper, sweep - 1, METHOD_PROJECTED_GRADIENT)

        step = alpha
        while step >= MIN_STEP:
            trial = x.copy()
            trial[free] = np.clip(x[free] - step * g[free], lower[free], upper[free])
            trial_value = chain_action(h, trial)
            if trial_value <= value + ARMIJO * float(g[free] @ (trial[free] - x[free])) + _slack(value):
                break
            step *= 0.5
        else:
            raise NonConvergenceError(
                f"Projected gradient stalled at sweep {sweep} with residual {residual:.3e}", best_iterate=x
            )

        trial_gradient = chain_gradient(h, trial)
        s = (trial - x)[free]
        y = (trial_gradient - g)[free]
        sy = float(s @ y)
        # Barzilai-Borwein step for the next sweep
        alpha = float(s @ s) / sy if sy > 0.0 else 2.0 * step
        x, value, g = trial, trial_value, trial_gradient

    raise NonConvergenceError(
        f"Projected gradient did not reach tol_grad={opts.tol_grad} in {opts.max_sweeps} sweeps",
        best_iterate=x,
    )


def minimize_chain(h, values, fixed, lower, upper, opts: MinimizeOptions = None) -> ChainResult:
    """
    Minimize sum_i h(x_i, x_{i+1}) over a finite chain with box bounds per site.

    Fixed sites keep their given values. Free sites are clipped into [lower, upper]
    first; a site with lower == upper is treated as fixed. The coordinate-newton
    method solves the tridiagonal Newton system on the sites not held by the active
    set and falls back to projected gradient when the Newton iteration stalls.

    Args:
        h: Generating function
        values (array): Starting chain
        fixed (array of bool): Sites held at their starting values
        lower, upper (float or array): Per-site bounds for free sites
        opts (MinimizeOptions, optional): Solver settings

    Returns:
        ChainResult: The minimizer and its diagnostics

    Raises:
        InvalidParameterError: If shapes disagree or a bound is inverted
        NonConvergenceError: If both methods exhaust their budget
    """
    opts = opts or MinimizeOptions()
    x = np.array(values, dtype=float)
    size = x.size
    fixed = np.broadcast_to(np.asarray(fixed, dtype=bool), (size,))
    lower = _as_bounds(lower, size)
    upper = _as_bounds(upper, size)
    if np.any(lower > upper + 1e-15):
        raise InvalidParameterError(f"Inverted bound at site {int(np.argmax(lower > upper))}")

    free = ~fixed & (upper > lower)
    pinned = ~fixed & ~free
    x[pinned] = lower[pinned]
    x[free] = np.clip(x[free], lower[free], upper[free])
    if not free.any():
        return _result(h, x, free, lower, upper, 0, opts.method)

    if opts.method == METHOD_PROJECTED_GRADIENT:
        return _projected_gradient(h, x, free, lower, upper, opts)

    try:
        return _projected_newton(h, x, free, lower, upper, opts)
    except NonConvergenceError as e:
        logger.debug(f"Falling back to projected gradient: {e.message}")
        return _projected_gradient(h, e.best_iterate, free, lower, upper, opts)


def _tie_break(results: list) -> ChainResult:
    best_action = min(r.action for r in results)
    candidates = [r for r in results if r.action <= best_action + TIE_TOL]
    return min(candidates, key=lambda r: tuple(np.round(r.values, 12)))


def solve_from_seeds(h, seeds: list, fixed, lower, upper, opts: MinimizeOptions = None,
                     keep_all: bool = False):
    """
    Polish every seed with ``minimize_chain`` and return the tie-broken best result.

    Seeds run in a thread pool when ``opts.threads`` allows it. The submission order is
    shuffled by ``opts.seed`` but the returned minimizer is independent of it: lowest
    action wins, and actions within 1e-12 go to the lexicographically smallest chain.

    Returns:
        ChainResult, or the list of converged results when ``keep_all`` is set.

    Raises:
        NonConvergenceError: If no seed converges; carries the lowest-action failed iterate.
    """
    opts = opts or MinimizeOptions()
    if not seeds:
        raise InvalidParameterError("At least one seed is required")

    order = np.random.default_rng(opts.seed).permutation(len(seeds))
    results, failures = [], []

    def polish(seed):
        return minimize_chain(h, seed, fixed, lower, upper, opts)

    if opts.threads == 1 or len(seeds) == 1:
        for i in order:
            try:
                results.append(polish(seeds[i]))
            except NonConvergenceError as e:
                failures.append(e)
    else:
        with ThreadPoolExecutor(max_workers=opts.max_workers) as executor:
            future_to_seed = {executor.submit(polish, seeds[i]): int(i) for i in order}
            for future in as_completed(future_to_seed):
                try:
                    results.append(future.result())
                except NonConvergenceError as e:
                    logger.debug(f"Seed {future_to_seed[future]} did not converge: {e.message}")
                    failures.append(e)

    if not results:
        best = min(failures, key=lambda e: chain_action(h, e.best_iterate))
        raise NonConvergenceError(
            f"None of {len(seeds)} seeds converged; last error: {best.message}", best_iterate=best.best_iterate
        )

    if keep_all:
        results.sort(key=lambda r: (r.action, tuple(np.round(r.values, 12))))
        return results
    return _tie_break(results)


def step_seeds(left: float, right: float, n_interior: int, cap: int = MAX_STEP_SEEDS) -> list:
    """Linear interpolation plus one single-jump profile per jump position."""
    seeds = [np.linspace(left, right, n_interior + 2)]
    positions = np.arange(n_interior + 1)
    if positions.size > cap:
        positions = np.unique(np.linspace(0, n_interior, cap).round().astype(int))
    for j in positions:
        seed = np.full(n_interior + 2, float(right))
        seed[: j + 1] = left
        seeds.append(seed)
    return seeds


def grid_seeds(h, left: float, right: float, n_interior: int, lower: float, upper: float,
               points: int, keep: int = GRID_SEEDS_KEPT) -> list:
    """Lowest-action chains of an exhaustive grid search over n_interior <= 4 free sites."""
    grid = np.linspace(lower, upper, points)
    pair = h.eval(grid[:, None], grid[None, :])
    total = h.eval(left, grid)
    for k in range(1, n_interior):
        total = total[..., None] + pair.reshape((1,) * (k - 1) + pair.shape)
    total = total + h.eval(grid, right).reshape((1,) * (n_interior - 1) + grid.shape)

    flat = total.ravel()
    keep = min(keep, flat.size)
    best = np.argpartition(flat, keep - 1)[:keep]
    seeds = []
    for index in best[np.argsort(flat[best])]:
        cell = np.unravel_index(index, total.shape)
        seeds.append(np.concatenate(([left], grid[list(cell)], [right])))
    return seeds


def _segment_seeds(h, left, right, n_interior, box, opts):
    seeds = step_seeds(left, right, n_interior)
    if n_interior <= GRID_SEED_MAX_INTERIOR:
        seeds = grid_seeds(h, left, right, n_interior, box[0], box[1], opts.grid_seed_points) + seeds
    return seeds


def _check_segment(left, right, n_interior, box):
    if n_interior < 0:
        raise InvalidParameterError(f"n_interior must be nonnegative, got {n_interior}")
    lo, hi = box
    if not lo <= hi:
        raise InvalidParameterError(f"Inverted box {box}")
    for name, value in (("left", left), ("right", right)):
        if not lo - 1e-12 <= value <= hi + 1e-12:
            raise InvalidParameterError(f"Endpoint {name}={value} outside box {box}")


def minimize_segment(h, left: float, right: float, n_interior: int, box: tuple,
                     opts: MinimizeOptions = None):
    """
    Minimize a finite segment with fixed ends and free interior sites in ``box``.

    Returns:
        tuple: (segment, residuals) with the segment including both ends and the
        residuals |dW/dx_i| at the interior sites.
    """
    opts = opts or MinimizeOptions()
    _check_segment(left, right, n_interior, box)
    if n_interior == 0:
        return np.array([left, right], dtype=float), np.zeros(0)

    fixed = np.zeros(n_interior + 2, dtype=bool)
    fixed[[0, -1]] = True
    seeds = _segment_seeds(h, left, right, n_interior, box, opts)
    best = solve_from_seeds(h, seeds, fixed, box[0], box[1], opts)
    return best.values, best.residuals[1:-1]


def multistart_segments(h, left: float, right: float, n_interior: int, box: tuple,
                        opts: MinimizeOptions = None) -> list:
    """Distinct local minimizers of a segment, sorted by action."""
    opts = opts or MinimizeOptions()
    _check_segment(left, right, n_interior, box)
    if n_interior == 0:
        return [np.array([left, right], dtype=float)]

    fixed = np.zeros(n_interior + 2, dtype=bool)
    fixed[[0, -1]] = True
    seeds = _segment_seeds(h, left, right, n_interior, box, opts)
    distinct = []
    for result in solve_from_seeds(h, seeds, fixed, box[0], box[1], opts, keep_all=True):
        if all(np.max(np.abs(result.values - other)) > DISTINCT_TOL for other in distinct):
            distinct.append(result.values)
    return distinct
