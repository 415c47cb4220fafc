# twistmin/exceptions/__init__.py
from .base import (
    TwistminError,
    InvalidParameterError,
    DomainError,
    ConstraintViolationError,
    NonConvergenceError,
    BracketError,
    LiftInconsistencyError,
    HypothesisError,
    PreconditionError,
    DegenerateFoliationError,
    ConstructionError,
    DistinctnessError,
)

__all__ = [
    'TwistminError',
    'InvalidParameterError',
    'DomainError',
    'ConstraintViolationError',
    'NonConvergenceError',
    'BracketError',
    'LiftInconsistencyError',
    'HypothesisError',
    'PreconditionError',
    'DegenerateFoliationError',
    'ConstructionError',
    'DistinctnessError',
]
