# minimize/periodic.py
import os
import logging
import dotenv

import numpy as np
from scipy.optimize import brentq

from ..action.configuration import NeighboringPair
from ..exceptions import DegenerateFoliationError, PreconditionError
from ..genfn.conjunction import rational_reduction
from ..genfn.hypotheses import diagonal_profile, longest_flat_run
from ..utils.utils import refine_grid_minimum
from .options import MinimizeOptions

dotenv.load_dotenv()

logger = logging.getLogger(__name__)

PAIR_GRID = int(os.getenv("TWISTMIN_PAIR_GRID", "4096"))
RATIONAL_PAIR_GRID = 256
MINIMUM_TOL = 1e-8
FLAT_TOL = 1e-12
FLAT_RUN = 3
STATIONARY_TOL = 1e-10


def diagonal_gradient(h, x):
    """d/dx h(x, x) = d1(x, x) + d2(x, x); zero exactly at (1,0)-periodic critical points."""
    return h.d1(x, x) + h.d2(x, x)


def _refine_diagonal(h, x: float, spacing: float) -> float:
    if float(diagonal_gradient(h, x)) == 0.0:
        return x

    lo, hi = x - spacing, x + spacing
    g_lo, g_hi = float(diagonal_gradient(h, lo)), float(diagonal_gradient(h, hi))
    if g_lo < 0.0 < g_hi:
        return float(brentq(lambda t: float(diagonal_gradient(h, t)), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))

    grid = np.linspace(lo, hi, 5)
    refined, _ = refine_grid_minimum(lambda t: float(h.eval(t, t)), grid, np.asarray(h.eval(grid, grid)), xatol=1e-12)
    return refined


def diagonal_minimizers(h, grid_n: int = PAIR_GRID, start: float = 0.0) -> tuple:
    """
    All global minimizers of x -> h(x, x) in one period [start, start + 1).

    Returns:
        tuple: (sorted minimizers, c)

    Raises:
        DegenerateFoliationError: If the minimum is attained on a flat run of the grid
    """
    grid, values = diagonal_profile(h, start, grid_n)
    run = longest_flat_run(values, FLAT_TOL)
    if run >= FLAT_RUN:
        raise DegenerateFoliationError(
            f"h(x, x) is flat on {run} consecutive grid points; the minimizers form a continuum"
        )

    spacing = 1.0 / grid_n
    local = np.flatnonzero((values < np.roll(values, 1)) & (values <= np.roll(values, -1)))
    candidates = []
    for k in local:
        x = _refine_diagonal(h, float(grid[k]), spacing)
        candidates.append((float(h.eval(x, x)), x))

    c = min(value for value, _ in candidates)
    minimizers = []
    for value, x in candidates:
        if value <= c + MINIMUM_TOL:
            x = start + (x - start) % 1.0
            if all(abs(x - m) > 1e-9 for m in minimizers):
                minimizers.append(x)
    return sorted(minimizers), c


def _validate_pair(h, pair: NeighboringPair, grid_n: int) -> None:
    for u in (pair.u0, pair.u1):
        residual = abs(float(diagonal_gradient(h, u)))
        if residual > STATIONARY_TOL:
            raise PreconditionError(f"Pair member {u} is not stationary (residual {residual:.3e})")
        if abs(float(h.eval(u, u)) - pair.c) > STATIONARY_TOL:
            raise PreconditionError(f"h({u}, {u}) differs from c = {pair.c}")

    spacing = pair.width / grid_n
    inner = np.linspace(pair.u0 + 2 * spacing, pair.u1 - 2 * spacing, max(grid_n - 3, 2))
    low = inner[np.asarray(h.eval(inner, inner)) <= pair.c + FLAT_TOL]
    if low.size:
        raise DegenerateFoliationError(f"h(x, x) reaches c at x = {low[0]} between the pair members")


def find_neighboring_pair(h, opts: MinimizeOptions = None, grid_n: int = PAIR_GRID,
                          start: float = 0.0) -> NeighboringPair:
    """
    Locate a neighboring pair (u0, u1) of (1,0)-periodic minimizers.

    x -> h(x, x) is scanned on ``grid_n`` points of [start, start + 1), every local
    minimum is refined, and the global minimizers within 1e-8 of c are collected.
    A unique minimizer mod 1 gives (u0, u0 + 1); several give the first two.

    Raises:
        DegenerateFoliationError: If the diagonal minimum is not isolated
        PreconditionError: If the refined pair fails stationarity
    """
    minimizers, _ = diagonal_minimizers(h, grid_n=grid_n, start=start)
    u0 = minimizers[0]
    u1 = minimizers[1] if len(minimizers) > 1 else u0 + 1.0
    pair = NeighboringPair(u0=u0, u1=u1, c=float(h.eval(u0, u0)), period_check_resolution=grid_n)
    _validate_pair(h, pair, grid_n)
    logger.info(f"Neighboring pair u0={pair.u0:.12g}, u1={pair.u1:.12g}, c={pair.c:.12g}")
    return pair


def rational_neighboring_pair(h, q: int, p: int, opts: MinimizeOptions = None,
                              grid_n: int = RATIONAL_PAIR_GRID, domain: tuple = (-1.0, 3.0)):
    """
    Neighboring (q,p)-periodic minimal configurations through the reduced function.

    Returns:
        tuple: (H, pair of H, lower periodic segment, upper periodic segment); each segment
        holds q + 1 sites x_0..x_q with x_q = x_0 + p.
    """
    reduced = rational_reduction(h, q, p, domain=domain)
    pair = find_neighboring_pair(reduced, opts, grid_n=grid_n)
    segments = []
    for u in (pair.u0, pair.u1):
        _, inner = reduced.segment(u, u)
        segments.append(np.concatenate(([u], inner, [u + p])))
    return reduced, pair, segments[0], segments[1]
