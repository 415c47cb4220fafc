# genfn/twist_map.py
import logging
import math

import numpy as np
from scipy.optimize import brentq

from .base import GeneratingFunction, OrbitPoint
from ..exceptions import BracketError, InvalidParameterError, NonConvergenceError

logger = logging.getLogger(__name__)

STEP_TOL = 1e-12
JACOBIAN_STEP = 1e-6


def default_bracket(h: GeneratingFunction, center: float, residual_at_center: float) -> tuple:
    """
    Bracket for a root of a function whose slope is at most -twist_lower_bound.

    A root lies within |g(center)| / delta of center, so one unit of slack on each
    side is enough.
    """
    if h.twist_lower_bound <= 0:
        raise InvalidParameterError("twist_lower_bound must be positive to bracket the step")
    width = abs(residual_at_center) / h.twist_lower_bound + 1.0
    return center - width, center + width


def _solve_decreasing(func, slope, bracket: tuple, what: str) -> float:
    lo, hi = float(bracket[0]), float(bracket[1])
    f_lo, f_hi = func(lo), func(hi)
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)) or f_lo * f_hi > 0:
        raise BracketError(f"{what}: bracket [{lo}, {hi}] does not change sign", bracket=(lo, hi))
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi

    root = brentq(func, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    # Newton polish on the strictly monotone residual
    for _ in range(2):
        d = slope(root)
        if d == 0.0:
            break
        candidate = root - func(root) / d
        if not lo <= candidate <= hi or abs(func(candidate)) >= abs(func(root)):
            break
        root = candidate
    return root


def _check_residual(residual: float, scale: float, what: str, iterate: float) -> None:
    if abs(residual) > STEP_TOL * max(1.0, scale):
        raise NonConvergenceError(f"{what}: residual {residual:.3e} above {STEP_TOL:.0e}",
                                  best_iterate=np.array([iterate]))


def twist_map_step(h: GeneratingFunction, p: OrbitPoint, bracket: tuple = None) -> OrbitPoint:
    """
    One step (x, y) -> (X, Y) of the lifted twist map generated by h.

    Uses the critical-point convention y = -d1 h(x, X), Y = d2 h(x, X).

    Args:
        h (GeneratingFunction): Generating function with positive twist bound.
        p (OrbitPoint): Current point.
        bracket (tuple, optional): Interval containing X. Defaults to a bracket derived
            from the twist bound.

    Returns:
        OrbitPoint: The image point.

    Raises:
        BracketError: If the bracket does not contain a sign change.
    """
    x, y = float(p.x), float(p.y)

    def residual(X):
        return float(h.d1(x, X)) + y

    def slope(X):
        return float(h.d12(x, X))

    if bracket is None:
        bracket = default_bracket(h, x, residual(x))
    X = _solve_decreasing(residual, slope, bracket, "twist map step")
    _check_residual(residual(X), max(abs(x), abs(X), abs(y)), "twist map step", X)
    return OrbitPoint(x=X, y=float(h.d2(x, X)))


def twist_map_inverse_step(h: GeneratingFunction, p: OrbitPoint, bracket: tuple = None) -> OrbitPoint:
    """Reversed-role solve: find (x, y) with Y = d2 h(x, X) and y = -d1 h(x, X)."""
    X, Y = float(p.x), float(p.y)

    def residual(x):
        return float(h.d2(x, X)) - Y

    def slope(x):
        return float(h.d12(x, X))

    if bracket is None:
        bracket = default_bracket(h, X, residual(X))
    x = _solve_decreasing(residual, slope, bracket, "inverse twist map step")
    _check_residual(residual(x), max(abs(x), abs(X), abs(Y)), "inverse twist map step", x)
    return OrbitPoint(x=x, y=-float(h.d1(x, X)))


def map_jacobian(h: GeneratingFunction, p: OrbitPoint, step: float = JACOBIAN_STEP) -> np.ndarray:
    """Central-difference Jacobian d(X, Y) / d(x, y) of one map step."""
    jac = np.empty((2, 2))
    for col, (dx, dy) in enumerate(((step, 0.0), (0.0, step))):
        plus = twist_map_step(h, OrbitPoint(p.x + dx, p.y + dy))
        minus = twist_map_step(h, OrbitPoint(p.x - dx, p.y - dy))
        jac[0, col] = (plus.x - minus.x) / (2.0 * step)
        jac[1, col] = (plus.y - minus.y) / (2.0 * step)
    return jac


def orbit(h: GeneratingFunction, start: OrbitPoint, steps: int) -> list:
    """
    Iterate the map ``steps - 1`` times and return ``steps`` points, starting with ``start``.

    Raises:
        BracketError: With the failing step index in the message.
    """
    points = [start]
    for i in range(1, steps):
        try:
            points.append(twist_map_step(h, points[-1]))
        except BracketError as e:
            raise BracketError(f"step {i}: {e.message}", bracket=e.bracket) from e
    return points


def stationarity_residuals(h: GeneratingFunction, values) -> np.ndarray:
    """|d2 h(x_{i-1}, x_i) + d1 h(x_i, x_{i+1})| at every interior site of a segment."""
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        return np.zeros(0)
    return np.abs(h.d2(values[:-2], values[1:-1]) + h.d1(values[1:-1], values[2:]))
