# transition/rational.py
import logging

import numpy as np

from ..action.configuration import Configuration, PeriodicLift
from ..exceptions import InvalidParameterError, LiftInconsistencyError
from ..genfn.conjunction import ReducedGeneratingFunction, rational_reduction
from ..genfn.twist_map import stationarity_residuals

logger = logging.getLogger(__name__)

LIFT_TOL = 1e-8


def lift_rational(h, q: int, p: int, y_config: Configuration, domain: tuple = (-1.0, 3.0),
                  reduced: ReducedGeneratingFunction = None, tol: float = LIFT_TOL) -> Configuration:
    """
    Expand a configuration of H = h^{*q}(., . + p) into an h-configuration.

    Each step y_i -> y_{i+1} becomes its minimal q-segment shifted by i p, so that
    x_{iq} = y_i + i p. The lifted tails continue periodically; the stationarity
    residual of h is checked at every interior site, the seams iq included.

    Raises:
        InvalidParameterError: If q < 1 or ``reduced`` belongs to another (q, p)
        LiftInconsistencyError: If the lifted residual exceeds tol
    """
    if q < 1:
        raise InvalidParameterError(f"q must be at least 1, got {q}")
    if q == 1 and p == 0:
        return Configuration(y_config.lo, y_config.values.copy(), y_config.left_tail, y_config.right_tail)
    if reduced is None:
        reduced = rational_reduction(h, q, p, domain=domain)
    elif (reduced.q, reduced.p) != (q, p):
        raise InvalidParameterError(f"Reduced function is for (q, p) = ({reduced.q}, {reduced.p}), not ({q}, {p})")

    y = y_config.values
    pieces = []
    for j in range(y.size - 1):
        i = y_config.lo + j
        _, inner = reduced.segment(y[j], y[j + 1])
        pieces.append(np.concatenate(([y[j]], inner)) + i * p)
    pieces.append([y[-1] + y_config.hi * p])
    lifted = Configuration(y_config.lo * q, np.concatenate(pieces), PeriodicLift(q, p), PeriodicLift(q, p))

    residuals = stationarity_residuals(h, lifted.values)
    max_residual = float(np.max(residuals)) if residuals.size else 0.0
    if max_residual > tol:
        worst = lifted.lo + 1 + int(np.argmax(residuals))
        raise LiftInconsistencyError(
            f"Lifted configuration is not stationary: residual {max_residual:.3e} at site {worst}",
            max_residual=max_residual,
        )
    logger.debug(f"Lifted ({q}, {p}) configuration on [{lifted.lo}, {lifted.hi}], residual {max_residual:.2e}")
    return lifted
