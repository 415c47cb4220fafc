# minimize/heteroclinic.py
import logging
from dataclasses import dataclass

import numpy as np

from ..action.configuration import DIRECTIONS, UP, Configuration, ConstantTail, Label, NeighboringPair
from ..action.functionals import compute_I, normalized_terms
from ..exceptions import InvalidParameterError, NonConvergenceError
from ..utils.utils import is_monotone
from .options import MinimizeOptions
from .segment import minimize_chain

logger = logging.getLogger(__name__)

DEFAULT_HALF_WINDOW = 100
MIN_HALF_WINDOW = 4
MONOTONE_TOL = 1e-10
MONOTONE_RESOLUTION = 1e-9
BINDING_TOL = 1e-8
MAX_APPROXIMATION_WINDOW = 400


@dataclass
class HeteroclinicResult:
    """
    Truncated heteroclinic minimizer on sites -N..N.

    Attributes:
        config (Configuration): Minimizer with constant tails at the pinned ends
        value (float): Truncated normalized action I, approximating c0 (up) or c1 (down)
        direction (str): "up" (u0 to u1) or "down"
        monotone (bool): Strictly monotone in the designed direction at tolerance
        interior_strict (bool): No free site is held by the [u0, u1] box
        max_residual (float): Max stationarity residual over the free sites
    """
    config: Configuration
    value: float
    direction: str
    monotone: bool
    interior_strict: bool
    max_residual: float

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "value": self.value,
            "direction": self.direction,
            "monotone": self.monotone,
            "interior_strict": self.interior_strict,
            "max_residual": self.max_residual,
        }


@dataclass
class HeteroclinicConstants:
    c0: float
    c1: float
    up: HeteroclinicResult
    down: HeteroclinicResult

    @property
    def c_star(self) -> float:
        return self.c0 + self.c1

    def to_dict(self) -> dict:
        return {"c0": self.c0, "c1": self.c1, "c_star": self.c_star,
                "up": self.up.to_dict(), "down": self.down.to_dict()}


def _check_direction(direction: str) -> None:
    if direction not in DIRECTIONS:
        raise InvalidParameterError(f"direction must be one of {DIRECTIONS}, got {direction!r}")


def end_labels(direction: str) -> tuple:
    return (Label.U0, Label.U1) if direction == UP else (Label.U1, Label.U0)


def step_profile(pair: NeighboringPair, direction: str, lo: int, hi: int, jump: int = 0) -> np.ndarray:
    """Start level on sites lo..jump and end level on jump+1..hi."""
    start, end = (pair.level(label) for label in end_labels(direction))
    sites = np.arange(lo, hi + 1)
    return np.where(sites <= jump, start, end).astype(float)


def heteroclinic_minimizer(h, pair: NeighboringPair, direction: str = UP,
                           half_window: int = DEFAULT_HALF_WINDOW,
                           opts: MinimizeOptions = None) -> HeteroclinicResult:
    """
    Minimize the truncated normalized action over configurations joining u0 to u1.

    Sites -N and N are pinned to the start and end levels of ``direction``; every
    other site is free in [u0, u1]. The start guess jumps between sites 0 and 1,
    which centres the kink on a bond.

    Raises:
        InvalidParameterError: If half_window < 4 or direction is unknown
        NonConvergenceError: If the solver does not converge
    """
    _check_direction(direction)
    if half_window < MIN_HALF_WINDOW:
        raise InvalidParameterError(f"half_window must be at least {MIN_HALF_WINDOW}, got {half_window}")
    opts = opts or MinimizeOptions()

    values = step_profile(pair, direction, -half_window, half_window)
    fixed = np.zeros(values.size, dtype=bool)
    fixed[[0, -1]] = True
    result = minimize_chain(h, values, fixed, pair.u0, pair.u1, opts)

    start, end = end_labels(direction)
    config = Configuration(-half_window, result.values, ConstantTail(start), ConstantTail(end))
    free = ~fixed
    max_residual = float(np.max(result.residuals[free]))
    monotone = is_monotone(result.values, increasing=(direction == UP), tol=MONOTONE_TOL,
                           levels=(pair.u0, pair.u1), resolution=MONOTONE_RESOLUTION)
    interior_strict = bool(not np.any(result.at_bound[free] & (result.residuals[free] > BINDING_TOL)))
    if not monotone:
        logger.warning(f"Heteroclinic minimizer ({direction}, N={half_window}) is not strictly monotone")

    value = compute_I(h, pair, config)
    logger.debug(f"Heteroclinic {direction}: N={half_window}, I={value:.15g}, residual={max_residual:.2e}")
    return HeteroclinicResult(config, value, direction, monotone, interior_strict, max_residual)


def heteroclinic_constants(h, pair: NeighboringPair, half_window: int = DEFAULT_HALF_WINDOW,
                           opts: MinimizeOptions = None) -> HeteroclinicConstants:
    """c0, c1 and c* = c0 + c1 from the two truncated heteroclinic minimizers."""
    up = heteroclinic_minimizer(h, pair, UP, half_window, opts)
    down = heteroclinic_minimizer(h, pair, "down", half_window, opts)
    constants = HeteroclinicConstants(c0=up.value, c1=down.value, up=up, down=down)
    logger.info(f"Heteroclinic constants c0={constants.c0:.12g}, c1={constants.c1:.12g}, "
                f"c*={constants.c_star:.12g}")
    return constants


def kink_center(config: Configuration, pair: NeighboringPair) -> int:
    """Site after which the configuration crosses the midpoint of the pair."""
    mid = 0.5 * (pair.u0 + pair.u1)
    below = config.values <= mid
    if below[0]:
        crossing = np.flatnonzero(~below)
    else:
        crossing = np.flatnonzero(below)
    j = int(crossing[0]) - 1 if crossing.size else config.values.size // 2
    return config.lo + max(j, 0)


def approximate_heteroclinic_window(h, pair: NeighboringPair, epsilon: float, opts: MinimizeOptions = None,
                                    direction: str = UP, heteroclinic: HeteroclinicResult = None,
                                    max_window: int = MAX_APPROXIMATION_WINDOW) -> tuple:
    """
    Smallest window n0 on which a heteroclinic minimizer carries its action up to epsilon.

    The window of n steps is centred on the kink and grown until the Lipschitz tail
    bound C * (|x_start - u^start| + |u^end - x_end|) drops below epsilon.

    Returns:
        tuple: (n0, windowed Configuration of n0 + 1 sites)

    Raises:
        InvalidParameterError: If epsilon <= 0
        NonConvergenceError: If the bound is not met within ``max_window`` steps
    """
    if not epsilon > 0:
        raise InvalidParameterError(f"epsilon must be positive, got {epsilon}")
    _check_direction(direction)
    if heteroclinic is None:
        heteroclinic = heteroclinic_minimizer(h, pair, direction, opts=opts)

    config = heteroclinic.config
    start_level = pair.level(config.left_tail.label)
    end_level = pair.level(config.right_tail.label)
    lipschitz = pair.lipschitz_bound(h)
    center = kink_center(config, pair)

    cap = min(max_window, config.values.size - 1)
    for n in range(1, cap + 1):
        first = max(config.lo, center - n // 2)
        last = first + n
        if last > config.hi:
            first, last = config.hi - n, config.hi
        window = config.slice(first, last)
        bound = lipschitz * (abs(window[0] - start_level) + abs(end_level - window[-1]))
        if bound < epsilon:
            logger.debug(f"Heteroclinic window n0={n} for epsilon={epsilon:.3e} (tail bound {bound:.3e})")
            return n, Configuration(first, window.copy(), config.left_tail, config.right_tail)

    raise NonConvergenceError(
        f"Tail bound did not drop below epsilon={epsilon:.3e} within {cap} steps",
        best_iterate=config.values,
    )


def partial_action(h, pair: NeighboringPair, window: Configuration) -> float:
    """Sum of a_i over the steps of a raw window."""
    if window.values.size < 2:
        return 0.0
    return float(np.sum(normalized_terms(h, pair, window.values)))


def delta_visits(values, pair: NeighboringPair, delta: float, lo: int = 0) -> dict:
    """Site indices within delta of u0 and of u1."""
    values = np.asarray(values, dtype=float)
    sites = lo + np.arange(values.size)
    return {
        Label.U0.value: sites[np.abs(values - pair.u0) < delta].tolist(),
        Label.U1.value: sites[np.abs(values - pair.u1) < delta].tolist(),
    }
