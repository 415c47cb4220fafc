import math

import numpy as np
from scipy.optimize import minimize_scalar


_MACHINE_RESOLUTION = 8 * np.finfo(float).eps


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def refine_grid_minimum(func, grid: np.ndarray, values: np.ndarray, xatol: float = 1e-10):
    """Polish the best grid point of a 1-D scan with a bounded Brent search."""
    k = int(np.argmin(values))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    best_x, best_value = float(grid[k]), float(values[k])
    if hi <= lo:
        return best_x, best_value

    result = minimize_scalar(func, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
    if result.success and result.fun <= best_value:
        return float(result.x), float(result.fun)
    return best_x, best_value


def saturated(values: np.ndarray, levels, resolution: float = None) -> np.ndarray:
    """Sites within ``resolution`` of one of ``levels`` (machine resolution by default)."""
    values = np.asarray(values, dtype=float)
    mask = np.zeros(values.shape, dtype=bool)
    for level in levels:
        tol = _MACHINE_RESOLUTION * max(1.0, abs(level)) if resolution is None else resolution
        mask |= np.abs(values - level) <= tol
    return mask


def is_monotone(values: np.ndarray, increasing: bool = True, tol: float = 1e-10, levels=(),
                resolution: float = None) -> bool:
    """
    Strict monotonicity at tolerance.

    Every difference must exceed -tol, and differences between two sites that are
    not both saturated at one of ``levels`` must be strictly positive (or negative).
    """
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return True

    diffs = np.diff(values) if increasing else -np.diff(values)
    if np.any(diffs <= -tol):
        return False

    flat = saturated(values, levels, resolution)
    resolved = ~(flat[:-1] & flat[1:])
    return bool(np.all(diffs[resolved] > 0.0))


def sup_difference(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) == 0:
        return 0.0
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))


def finite_or_none(value: float):
    if value is None or not math.isfinite(value):
        return None
    return float(value)
