# genfn/base.py
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

FD_RELATIVE_STEP = 1e-6
FD_SECOND_STEP = 1e-4
DEFAULT_STRIP = (-1.0, 2.0)


@dataclass(frozen=True)
class OrbitPoint:
    """A point (x, y) of the lifted annulus map."""
    x: float
    y: float


class GeneratingFunction:
    """
    Two-point generating function h(xi, eta) of a monotone twist map.

    Subclasses implement ``eval``; every derivative has a centered finite-difference
    fallback with step 1e-6 * max(1, |xi|), so a subclass only overrides the partials
    it knows analytically. All methods accept scalars or numpy arrays and broadcast.

    Args:
        twist_lower_bound (float): The delta with d12 <= -delta on the working strip.
        strip (tuple, optional): Working strip (lo, hi) used for ``lipschitz_bound``.
            Defaults to (-1, 2), i.e. [u0 - 1, u1 + 1] for the pair (0, 1).
    """

    name = "generic"
    symmetric = False

    def __init__(self, twist_lower_bound: float, strip: tuple = DEFAULT_STRIP) -> None:
        self.twist_lower_bound = float(twist_lower_bound)
        self.strip = (float(strip[0]), float(strip[1]))

    def eval(self, xi, eta):
        raise NotImplementedError

    def __call__(self, xi, eta):
        return self.eval(xi, eta)

    @staticmethod
    def _step(value, relative: float = FD_RELATIVE_STEP):
        return relative * np.maximum(1.0, np.abs(value))

    def d1(self, xi, eta):
        s = self._step(xi)
        return (self.eval(xi + s, eta) - self.eval(xi - s, eta)) / (2.0 * s)

    def d2(self, xi, eta):
        s = self._step(eta)
        return (self.eval(xi, eta + s) - self.eval(xi, eta - s)) / (2.0 * s)

    def d11(self, xi, eta):
        s = self._step(xi, FD_SECOND_STEP)
        return (self.d1(xi + s, eta) - self.d1(xi - s, eta)) / (2.0 * s)

    def d22(self, xi, eta):
        s = self._step(eta, FD_SECOND_STEP)
        return (self.d2(xi, eta + s) - self.d2(xi, eta - s)) / (2.0 * s)

    def d12(self, xi, eta):
        s = self._step(eta)
        return (self.d1(xi, eta + s) - self.d1(xi, eta - s)) / (2.0 * s)

    def lipschitz_on(self, lo: float, hi: float, grid_n: int = 201) -> float:
        """Sampled max(|d1|, |d2|) on [lo, hi]^2, inflated by 5% for the unsampled gaps."""
        grid = np.linspace(lo, hi, grid_n)
        xi, eta = np.meshgrid(grid, grid, indexing="ij")
        bound = max(float(np.max(np.abs(self.d1(xi, eta)))), float(np.max(np.abs(self.d2(xi, eta)))))
        return 1.05 * bound

    def off_diagonal_floor(self, lo: float, hi: float):
        """
        Lower bound on h(x, y) - (h(x, x) + h(y, y)) / 2 over [lo, hi]^2, or None when unknown.

        The loop bound adds this floor once per step to the diagonal part of the action.
        """
        return None

    def diagonal_curvature_on(self, lo: float, hi: float, grid_n: int = 201) -> float:
        """Sampled max |d11 + 2 d12 + d22| on the diagonal of [lo, hi]^2, inflated by 5%."""
        grid = np.linspace(lo, hi, grid_n)
        curvature = self.d11(grid, grid) + 2.0 * self.d12(grid, grid) + self.d22(grid, grid)
        return 1.05 * float(np.max(np.abs(curvature)))

    @property
    def lipschitz_bound(self) -> float:
        return self.lipschitz_on(*self.strip)

    @property
    def cache_key(self) -> tuple:
        return (self.name, id(self))

    def to_spec(self) -> dict:
        return {"model": self.name}
