# minimize/loops.py
import logging
from dataclasses import dataclass, field

import numpy as np

from ..action.configuration import NeighboringPair
from ..exceptions import InvalidParameterError, NonConvergenceError
from .options import MinimizeOptions
from .segment import minimize_chain

logger = logging.getLogger(__name__)

PHI_GRID = 257
DIAGONAL_GRID = 4097
DIAGONAL_RATIO = 1.0625
DIAGONAL_LADDER_START = 1e-9
ROW_CHUNK = 32
CAVEAT = ("upper: best polished loop found for n <= n_max (an upper bound on the infimum over "
          "those lengths); lower: the larger of the grid dynamic programme minus the Lipschitz "
          "discretisation error and, when h has an off-diagonal floor, the certified diagonal bound")


@dataclass
class PhiEstimate:
    """
    Two-sided estimate of the loop bound phi(delta) restricted to lengths n <= n_max.

    Attributes:
        delta (float): Required distance of one loop site from both pair members
        n_max (int): Largest loop length searched
        upper (float): Min over n of the best feasible loop action found
        lower (float): Min over n of the certified grid lower bound
        per_length (list): {"n", "upper", "lower"} per loop length
        caveat (str): How the bounds are to be read
    """
    delta: float
    n_max: int
    upper: float
    lower: float
    per_length: list = field(default_factory=list)
    caveat: str = CAVEAT

    def to_dict(self) -> dict:
        return {"delta": self.delta, "n_max": self.n_max, "upper": self.upper, "lower": self.lower,
                "per_length": self.per_length, "caveat": self.caveat}


def _far_mask(grid: np.ndarray, pair: NeighboringPair, delta: float, slack: float = 0.0) -> np.ndarray:
    distance = np.minimum(grid - pair.u0, pair.u1 - grid)
    far = distance >= delta - slack - 1e-15
    if not far.any():
        far[np.argmax(distance)] = True
    return far


def _min_plus(rows: np.ndarray, matrix: np.ndarray) -> tuple:
    """(min_j rows[:, j] + matrix[j, :], argmin) computed in row chunks."""
    best = np.empty_like(rows)
    arg = np.empty(rows.shape, dtype=int)
    for start in range(0, rows.shape[0], ROW_CHUNK):
        block = rows[start:start + ROW_CHUNK, :, None] + matrix[None, :, :]
        arg[start:start + ROW_CHUNK] = np.argmin(block, axis=1)
        best[start:start + ROW_CHUNK] = np.take_along_axis(block, arg[start:start + ROW_CHUNK, None, :], axis=1)[:, 0, :]
    return best, arg


def _grid_loops(h, pair: NeighboringPair, delta: float, n_max: int, grid_n: int, slack: float = 0.0):
    """Per loop length, the cheapest closed grid walk through a far site and that walk."""
    grid = np.linspace(pair.u0, pair.u1, grid_n)
    cost = np.asarray(h.eval(grid[:, None], grid[None, :]), dtype=float) - pair.c
    starts = np.flatnonzero(_far_mask(grid, pair, delta, slack))

    rows = cost[starts]
    back = []
    walks = []
    for n in range(1, n_max + 1):
        if n > 1:
            rows, arg = _min_plus(rows, cost)
            back.append(arg)
        closed = rows[np.arange(starts.size), starts]
        s = int(np.argmin(closed))
        # walk back from the closing site to recover the loop
        sites = [starts[s]]
        current = starts[s]
        for arg in reversed(back):
            current = int(arg[s, current])
            sites.append(current)
        sites.append(starts[s])
        walks.append((float(closed[s]), grid[np.array(sites[::-1])]))
    return grid, walks


def _polish_loop(h, pair: NeighboringPair, loop: np.ndarray, opts: MinimizeOptions) -> float:
    if loop.size <= 2:
        return float(np.sum(h.eval(loop[:-1], loop[1:])) - pair.c * (loop.size - 1))
    fixed = np.zeros(loop.size, dtype=bool)
    fixed[[0, -1]] = True
    try:
        result = minimize_chain(h, loop, fixed, pair.u0, pair.u1, opts)
        return result.action - pair.c * (loop.size - 1)
    except NonConvergenceError as e:
        logger.warning(f"Loop polish did not converge, keeping the grid loop: {e.message}")
        return float(np.sum(h.eval(loop[:-1], loop[1:])) - pair.c * (loop.size - 1))


def _diagonal_points(pair: NeighboringPair, lo: float, hi: float) -> np.ndarray:
    """Uniform points of [lo, hi] plus geometric ladders of ratio DIAGONAL_RATIO towards u0 and u1."""
    start = max(lo - pair.u0, DIAGONAL_LADDER_START * pair.width)
    steps = max(0, int(np.ceil(np.log(pair.half_width / start) / np.log(DIAGONAL_RATIO))))
    offsets = start * DIAGONAL_RATIO ** np.arange(steps + 1)
    points = np.concatenate([np.linspace(lo, hi, DIAGONAL_GRID), pair.u0 + offsets, pair.u1 - offsets, [lo, hi]])
    return np.unique(points[(points >= lo) & (points <= hi)])


def diagonal_lower_bound(h, pair: NeighboringPair, delta: float) -> float:
    """
    Certified lower bound on h(x, x) - c over the sites at distance >= delta from u0 and u1.

    On each cell [a, b] of the sample points the minimum is at least
    min(d(a), d(b)) - M (b - a)^2 / 8, M bounding the second derivative of x -> h(x, x).
    Cells shrink geometrically towards the pair, where h(x, x) - c vanishes.
    """
    lo, hi = pair.u0 + delta, pair.u1 - delta
    points = _diagonal_points(pair, lo, hi)
    values = np.asarray(h.eval(points, points), dtype=float) - pair.c
    if points.size < 2:
        return float(np.min(values))
    curvature = h.diagonal_curvature_on(lo, hi)
    cells = np.minimum(values[:-1], values[1:]) - curvature * np.diff(points) ** 2 / 8.0
    return float(np.min(cells))


def _diagonal_loop_bounds(h, pair: NeighboringPair, delta: float, n_max: int):
    """
    Per loop length n, sum a >= D_far + (n - 1) min(0, D_all) + n g, or None without a floor g.

    D_far bounds h(x, x) - c on the sites at distance >= delta from the pair and D_all
    on the whole of [u0, u1]; g is the off-diagonal floor of h.
    """
    floor = h.off_diagonal_floor(pair.u0, pair.u1)
    if floor is None:
        return None
    far = diagonal_lower_bound(h, pair, delta)
    whole = min(0.0, diagonal_lower_bound(h, pair, 0.0))
    return [far + (n - 1) * whole + n * floor for n in range(1, n_max + 1)]


def phi_bounds(h, pair: NeighboringPair, delta: float, n_max: int, opts: MinimizeOptions = None,
               grid_n: int = PHI_GRID) -> PhiEstimate:
    """
    Upper and lower bounds on phi(delta) over loops of length n <= n_max.

    Loops x_0 = x_n live in [u0, u1] and have at least one site at distance >= delta
    from both u0 and u1. For each n a min-plus dynamic programme over a grid of
    [u0, u1] finds the cheapest closed walk through a far grid site. Rounding a loop
    to the grid moves its far site by at most s / 2, so the lower programme starts
    from every grid site within s / 2 of the far region and subtracts 2 n C s (C the
    Lipschitz constant on the strip, s the grid spacing). When h splits into its
    diagonal and a bounded-below off-diagonal part, the diagonal bound is taken too
    and the larger of the two is kept. Polishing the strict walk with the far site
    pinned gives a feasible loop and hence an upper bound.

    Raises:
        InvalidParameterError: If delta < 0, delta > (u1 - u0) / 2 or n_max < 1
    """
    if n_max < 1:
        raise InvalidParameterError(f"n_max must be at least 1, got {n_max}")
    if delta < 0 or delta > pair.half_width:
        raise InvalidParameterError(f"delta must lie in [0, {pair.half_width}], got {delta}")
    if delta == 0:
        return PhiEstimate(delta=0.0, n_max=n_max, upper=0.0, lower=0.0,
                           per_length=[{"n": n, "upper": 0.0, "lower": 0.0} for n in range(1, n_max + 1)])

    opts = opts or MinimizeOptions()
    spacing = pair.width / (grid_n - 1)
    _, walks = _grid_loops(h, pair, delta, n_max, grid_n)
    _, relaxed = _grid_loops(h, pair, delta, n_max, grid_n, slack=0.5 * spacing)
    diagonal = _diagonal_loop_bounds(h, pair, delta, n_max)
    lipschitz = pair.strip_lipschitz(h)

    per_length = []
    for n, ((grid_value, loop), (relaxed_value, _)) in enumerate(zip(walks, relaxed), start=1):
        lower = relaxed_value - 2.0 * n * lipschitz * spacing
        if diagonal is not None:
            lower = max(lower, diagonal[n - 1])
        upper = min(grid_value, _polish_loop(h, pair, loop, opts))
        per_length.append({"n": n, "upper": upper, "lower": min(max(0.0, lower), upper)})

    estimate = PhiEstimate(
        delta=float(delta),
        n_max=n_max,
        upper=min(entry["upper"] for entry in per_length),
        lower=min(entry["lower"] for entry in per_length),
        per_length=per_length,
    )
    logger.debug(f"phi({delta}) in [{estimate.lower:.6g}, {estimate.upper:.6g}] for n <= {n_max}")
    return estimate


def estimate_phi(h, pair: NeighboringPair, delta: float, n_max: int, opts: MinimizeOptions = None) -> float:
    """Upper bound on phi(delta) over loop lengths n <= n_max."""
    return phi_bounds(h, pair, delta, n_max, opts).upper
