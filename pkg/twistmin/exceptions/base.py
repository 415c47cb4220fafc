# exceptions/base.py


class TwistminError(Exception):
    """
    Base class for every domain error raised by twistmin.

    Attributes:
        message (str): Human readable description of the failure
        status (int): Process exit status the CLI reports for this error
        code (str): Stable machine readable error code
    """

    def __init__(self, message: str, status: int = 1, code: str = "TWISTMIN_ERROR") -> None:
        super().__init__(message)
        self.message = message
        self.status = status
        self.code = code

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


class InvalidParameterError(TwistminError):
    """Domain error raised when an input violates an operation's preconditions."""
    def __init__(self, message: str, status: int = 2, code: str = "INVALID_PARAMETER") -> None:
        super().__init__(message, status=status, code=code)


class DomainError(TwistminError):
    """Domain error raised when a configuration lies outside a functional's domain."""
    def __init__(self, message: str, status: int = 2, code: str = "DOMAIN") -> None:
        super().__init__(message, status=status, code=code)


class ConstraintViolationError(TwistminError):
    """
    Exception raised when a configuration leaves a window of the constrained space.

    Attributes:
        message (str): Description of the violated window
        index (int): Site index at which the window constraint fails
    """
    def __init__(self, message: str, index: int = None, status: int = 2,
                 code: str = "CONSTRAINT_VIOLATION") -> None:
        super().__init__(message, status=status, code=code)
        self.index = index


class NonConvergenceError(TwistminError):
    """
    Exception raised when an iterative solver exhausts its budget.

    Attributes:
        message (str): Description of the solver and its last residual
        best_iterate: Best iterate reached before giving up (numpy array or None)
    """
    def __init__(self, message: str, best_iterate=None, status: int = 3,
                 code: str = "NON_CONVERGENCE") -> None:
        super().__init__(message, status=status, code=code)
        self.best_iterate = best_iterate


class BracketError(TwistminError):
    """
    Exception raised when a root bracket does not change sign.

    Attributes:
        message (str): Description of the failed bracket
        bracket (tuple): The (lo, hi) interval that was tried
    """
    def __init__(self, message: str, bracket: tuple = None, status: int = 3,
                 code: str = "BRACKET") -> None:
        super().__init__(message, status=status, code=code)
        self.bracket = bracket


class LiftInconsistencyError(TwistminError):
    """
    Exception raised when a lifted rational configuration is not stationary.

    Attributes:
        message (str): Description of the seam failure
        max_residual (float): Largest stationarity residual of the lift
    """
    def __init__(self, message: str, max_residual: float = None, status: int = 3,
                 code: str = "LIFT_INCONSISTENCY") -> None:
        super().__init__(message, status=status, code=code)
        self.max_residual = max_residual


class HypothesisError(TwistminError):
    """Domain error raised when a sampled hypothesis check fails."""
    def __init__(self, message: str, status: int = 4, code: str = "HYPOTHESIS") -> None:
        super().__init__(message, status=status, code=code)


class PreconditionError(TwistminError):
    """Domain error raised when an existence hypothesis (e.g. the gap condition) fails."""
    def __init__(self, message: str, status: int = 5, code: str = "PRECONDITION") -> None:
        super().__init__(message, status=status, code=code)


class DegenerateFoliationError(PreconditionError):
    """Domain error raised when x -> h(x, x) has a continuum of minimizers."""
    def __init__(self, message: str, status: int = 5, code: str = "DEGENERATE_FOLIATION") -> None:
        super().__init__(message, status=status, code=code)


class ConstructionError(TwistminError):
    """
    Exception raised when a schedule blueprint cannot be realised.

    Attributes:
        message (str): Description of the failure
        inequality (str): Name of the violated construction inequality, e.g. "(p1)"
    """
    def __init__(self, message: str, inequality: str = None, status: int = 5,
                 code: str = "CONSTRUCTION") -> None:
        super().__init__(message, status=status, code=code)
        self.inequality = inequality


class DistinctnessError(TwistminError):
    """
    Exception raised when minimizers of different index sequences coincide at the constrained sites.

    Attributes:
        pairs (list): Pairwise entries {"a", "b", "sup_difference", "distinct"} that failed
        results (list): The transition results, in the order of the index sequences
    """
    def __init__(self, message: str, pairs: list = None, results: list = None, status: int = 4,
                 code: str = "NOT_DISTINCT") -> None:
        super().__init__(message, status=status, code=code)
        self.pairs = pairs or []
        self.results = results or []
