# genfn/conjunction.py
import os
import logging
import dotenv
from functools import lru_cache

import numpy as np

from .base import GeneratingFunction
from ..exceptions import InvalidParameterError
from ..utils.utils import refine_grid_minimum

dotenv.load_dotenv()

logger = logging.getLogger(__name__)

CONJUNCTION_GRID = int(os.getenv("TWISTMIN_CONJUNCTION_GRID", "2048"))
REDUCTION_GRID = int(os.getenv("TWISTMIN_REDUCTION_GRID", "1024"))
CONJUNCTION_XTOL = 1e-10


def _evaluate(func, a, b):
    if hasattr(func, "eval"):
        return np.asarray(func.eval(a, b), dtype=float)
    return np.asarray(func(a, b), dtype=float)


def _validate_domain(domain: tuple) -> tuple:
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo:
        raise InvalidParameterError(f"empty conjunction domain {domain}")
    return lo, hi


class Conjunction:
    """
    The conjunction (h1 * h2)(x1, x2) = min over xi in domain of h1(x1, xi) + h2(xi, x2).

    Calling the object returns (value, argmin); ``eval`` returns the value only, so
    conjunctions nest.
    """

    def __init__(self, h1, h2, domain: tuple, grid_n: int = CONJUNCTION_GRID) -> None:
        self.h1 = h1
        self.h2 = h2
        self.domain = _validate_domain(domain)
        if grid_n < 3:
            raise InvalidParameterError(f"grid_n must be at least 3, got {grid_n}")
        self.grid = np.linspace(self.domain[0], self.domain[1], grid_n)

    def __call__(self, x1: float, x2: float) -> tuple:
        values = _evaluate(self.h1, x1, self.grid) + _evaluate(self.h2, self.grid, x2)

        def inner(xi):
            return float(_evaluate(self.h1, x1, xi) + _evaluate(self.h2, xi, x2))

        argmin, value = refine_grid_minimum(inner, self.grid, values, xatol=CONJUNCTION_XTOL)
        return value, argmin

    def eval(self, x1, x2):
        if np.ndim(x1) == 0 and np.ndim(x2) == 0:
            return self(float(x1), float(x2))[0]
        return np.vectorize(lambda a, b: self(float(a), float(b))[0])(x1, x2)


def conjunction(h1, h2, domain: tuple, grid_n: int = CONJUNCTION_GRID) -> Conjunction:
    """Build h1 * h2 over a compact domain known to contain the inner minimizer."""
    return Conjunction(h1, h2, domain, grid_n=grid_n)


class ReducedGeneratingFunction(GeneratingFunction):
    """
    H(xi, xi') = h^{*q}(xi, xi' + p), the (q - 1)-fold conjunction of h.

    Values come from a dynamic programme over a grid of the domain followed by a
    tridiagonal Newton polish of the q - 1 inner points; ``segment`` also returns
    those inner points (the minimal q-segment joining xi to xi' + p).
    """

    name = "reduced"

    def __init__(self, h: GeneratingFunction, q: int, p: int, domain: tuple,
                 grid_n: int = REDUCTION_GRID) -> None:
        if int(q) != q or q < 1:
            raise InvalidParameterError(f"q must be a positive integer, got {q}")
        if int(p) != p:
            raise InvalidParameterError(f"p must be an integer, got {p}")
        super().__init__(twist_lower_bound=h.twist_lower_bound / q, strip=domain)
        self.h = h
        self.q = int(q)
        self.p = int(p)
        self.domain = _validate_domain(domain)
        self.grid = np.linspace(self.domain[0], self.domain[1], grid_n)
        self._pair_matrix = None
        self._segment_cached = lru_cache(maxsize=8192)(self._segment)

    def _transfer(self) -> np.ndarray:
        if self._pair_matrix is None:
            self._pair_matrix = np.asarray(self.h.eval(self.grid[:, None], self.grid[None, :]), dtype=float)
        return self._pair_matrix

    def _segment(self, xi: float, xi_next: float) -> tuple:
        target = xi_next + self.p
        if self.q == 1:
            return float(self.h.eval(xi, target)), ()

        from ..minimize.options import MinimizeOptions
        from ..minimize.segment import minimize_chain

        cost = np.asarray(self.h.eval(xi, self.grid), dtype=float)
        back = []
        for _ in range(self.q - 2):
            totals = cost[:, None] + self._transfer()
            idx = np.argmin(totals, axis=0)
            cost = totals[idx, np.arange(self.grid.size)]
            back.append(idx)
        final = cost + np.asarray(self.h.eval(self.grid, target), dtype=float)

        z = int(np.argmin(final))
        inner = np.empty(self.q - 1)
        inner[-1] = self.grid[z]
        for step in range(self.q - 3, -1, -1):
            z = int(back[step][z])
            inner[step] = self.grid[z]

        values = np.concatenate(([xi], inner, [target]))
        fixed = np.zeros(values.size, dtype=bool)
        fixed[[0, -1]] = True
        result = minimize_chain(self.h, values, fixed, self.domain[0], self.domain[1], MinimizeOptions())
        return result.action, tuple(result.values[1:-1].tolist())

    def segment(self, xi: float, xi_next: float) -> tuple:
        """Return (H(xi, xi_next), inner points as a numpy array of length q - 1)."""
        value, inner = self._segment_cached(float(xi), float(xi_next))
        return value, np.array(inner, dtype=float)

    def eval(self, xi, eta):
        if np.ndim(xi) == 0 and np.ndim(eta) == 0:
            return self.segment(xi, eta)[0]
        return np.vectorize(lambda a, b: self.segment(a, b)[0])(xi, eta)

    def _first_last(self, xi: float, eta: float) -> tuple:
        _, inner = self.segment(xi, eta)
        if inner.size == 0:
            return eta + self.p, xi
        return inner[0], inner[-1]

    def d1(self, xi, eta):
        if np.ndim(xi) or np.ndim(eta):
            return np.vectorize(self.d1)(xi, eta)
        first, _ = self._first_last(xi, eta)
        return float(self.h.d1(xi, first))

    def d2(self, xi, eta):
        if np.ndim(xi) or np.ndim(eta):
            return np.vectorize(self.d2)(xi, eta)
        _, last = self._first_last(xi, eta)
        return float(self.h.d2(last, eta + self.p))

    def lipschitz_on(self, lo: float, hi: float, grid_n: int = 201) -> float:
        return self.h.lipschitz_on(*self.domain)

    @property
    def cache_key(self) -> tuple:
        return (self.name, self.h.cache_key, self.q, self.p, self.domain)

    def to_spec(self) -> dict:
        return {"model": self.name, "base": self.h.to_spec(), "q": self.q, "p": self.p}


def rational_reduction(h: GeneratingFunction, q: int, p: int, domain: tuple = (-1.0, 3.0),
                       grid_n: int = REDUCTION_GRID) -> ReducedGeneratingFunction:
    """
    Reduce rotation number p/q to the (1, 0) case: H(xi, xi') = h^{*q}(xi, xi' + p).

    Args:
        h (GeneratingFunction): Base generating function.
        q (int): Period, q >= 1.
        p (int): Integer shift.
        domain (tuple, optional): Interval holding every inner point. Defaults to (-1, 3).
        grid_n (int, optional): Dynamic-programme grid size.

    Returns:
        ReducedGeneratingFunction: H, with ``segment`` giving the minimal q-segment.
    """
    return ReducedGeneratingFunction(h, q, p, domain, grid_n=grid_n)
