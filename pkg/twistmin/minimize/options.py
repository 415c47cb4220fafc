# minimize/options.py
import os
import dotenv
from dataclasses import dataclass

from ..exceptions import InvalidParameterError

dotenv.load_dotenv()

TOL_GRAD = float(os.getenv("TWISTMIN_TOL_GRAD", "1e-10"))
MAX_SWEEPS = int(os.getenv("TWISTMIN_MAX_SWEEPS", "100000"))
GRID_SEED_POINTS = int(os.getenv("TWISTMIN_GRID_SEED_POINTS", "33"))
THREADS = int(os.getenv("TWISTMIN_THREADS", "0"))

METHOD_NEWTON = "coordinate-newton"
METHOD_PROJECTED_GRADIENT = "projected-gradient"
METHODS = (METHOD_NEWTON, METHOD_PROJECTED_GRADIENT)


@dataclass(frozen=True)
class MinimizeOptions:
    """
    Solver settings shared by every minimization.

    Attributes:
        tol_grad (float): Max stationarity residual at free, non-binding sites
        max_sweeps (int): Iteration budget per solve
        method (str): "coordinate-newton" (tridiagonal projected Newton) or "projected-gradient"
        grid_seed_points (int): Grid points per free coordinate for small multistart problems
        threads (int): Worker threads for independent solves; 0 uses the executor default
        seed (int): Shuffles multistart submission order only; results are tie-broken
    """
    tol_grad: float = TOL_GRAD
    max_sweeps: int = MAX_SWEEPS
    method: str = METHOD_NEWTON
    grid_seed_points: int = GRID_SEED_POINTS
    threads: int = THREADS
    seed: int = 0

    def __post_init__(self):
        if not self.tol_grad > 0:
            raise InvalidParameterError(f"tol_grad must be positive, got {self.tol_grad}")
        if self.max_sweeps < 1:
            raise InvalidParameterError(f"max_sweeps must be at least 1, got {self.max_sweeps}")
        if self.method not in METHODS:
            raise InvalidParameterError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.grid_seed_points < 2:
            raise InvalidParameterError(f"grid_seed_points must be at least 2, got {self.grid_seed_points}")
        if self.threads < 0:
            raise InvalidParameterError(f"threads must be nonnegative, got {self.threads}")

    @property
    def max_workers(self):
        return self.threads or None
