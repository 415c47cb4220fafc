# action/functionals.py
import logging
import math

import numpy as np

from ..exceptions import DomainError, InvalidParameterError
from .configuration import Configuration, ConstantTail, NeighboringPair, PeriodicLift

logger = logging.getLogger(__name__)


def segment_action(h, segment) -> float:
    """Sum of h(x_i, x_{i+1}) for i = 0..n-1 over an (n+1)-site segment."""
    segment = np.asarray(segment, dtype=float)
    if segment.size < 2:
        raise InvalidParameterError(f"A segment needs at least 2 sites, got {segment.size}")
    return float(np.sum(h.eval(segment[:-1], segment[1:])))


def normalized_term_a(h, pair: NeighboringPair, x_i, x_next):
    return h.eval(x_i, x_next) - pair.c


def normalized_terms(h, pair: NeighboringPair, values) -> np.ndarray:
    """
    a_i over consecutive pairs of ``values``.

    A step that stays exactly on u0 or on u1 contributes 0, so padding a window
    with its constant tail leaves every normalized sum unchanged.
    """
    values = np.asarray(values, dtype=float)
    left, right = values[:-1], values[1:]
    terms = np.asarray(normalized_term_a(h, pair, left, right), dtype=float)
    resting = (left == right) & ((left == pair.u0) | (left == pair.u1))
    return np.where(resting, 0.0, terms)


def compute_I(h, pair: NeighboringPair, config: Configuration) -> float:
    """
    Normalized action I(x) = sum_i a_i(x) of a configuration with constant tails.

    The window sum includes the two steps joining the window to its tails; beyond
    them every term vanishes. Returns ``math.inf`` for a tail with nonzero rotation.

    Raises:
        DomainError: If a tail is open or a PeriodicLift with p = 0
    """
    for tail in (config.left_tail, config.right_tail):
        if isinstance(tail, PeriodicLift):
            if tail.p != 0:
                return math.inf
            raise DomainError(f"compute_I is undefined for the periodic tail {tail!r}")
        if not isinstance(tail, ConstantTail):
            raise DomainError("compute_I needs constant tails at u0 or u1")

    return float(np.sum(normalized_terms(h, pair, config.extended(pair))))


def _tail_rotation(tail, edge: np.ndarray):
    if isinstance(tail, ConstantTail):
        return 0.0
    if isinstance(tail, PeriodicLift):
        return tail.rotation
    if edge.size < 2:
        return 0.0
    return float((edge[-1] - edge[0]) / (edge.size - 1))


def rotation_number(config: Configuration, window: int) -> tuple:
    """
    (alpha_plus, alpha_minus) of a configuration.

    Exact for constant (0) and PeriodicLift (p/q) tails; an open tail is estimated
    by the mean increment over the last ``window`` steps at that edge.
    """
    if window < 1:
        raise InvalidParameterError(f"window must be positive, got {window}")
    span = min(window, config.values.size - 1)
    alpha_plus = _tail_rotation(config.right_tail, config.values[config.values.size - 1 - span:])
    alpha_minus = _tail_rotation(config.left_tail, config.values[:span + 1])
    return alpha_plus, alpha_minus
