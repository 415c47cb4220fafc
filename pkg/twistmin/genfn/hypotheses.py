# genfn/hypotheses.py
import logging
from dataclasses import dataclass, field, asdict

import numpy as np

from .base import GeneratingFunction
from ..exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

PERIODICITY_TOL = 1e-12
MARGIN_TOL = 1e-10
QUADRUPLE_GRID_CAP = 31
GROWTH_STEPS = tuple(float(2 ** k) for k in range(7))


@dataclass
class HypothesisCheck:
    name: str
    passed: bool
    worst: float
    witness: tuple = None
    note: str = ""


@dataclass
class HypothesisReport:
    """Sampled verdicts for (h1), (h2), (h3), the twist bound and (h6); failures never raise."""
    strip: tuple
    grid_n: int
    checks: dict = field(default_factory=dict)
    properties: dict = field(default_factory=dict)
    degenerate_diagonal: bool = False

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks.values())

    def failed(self) -> list:
        return [name for name, check in self.checks.items() if not check.passed]

    def to_dict(self) -> dict:
        return {
            "strip": list(self.strip),
            "grid_n": self.grid_n,
            "all_passed": self.all_passed,
            "degenerate_diagonal": self.degenerate_diagonal,
            "checks": {name: _check_dict(check) for name, check in self.checks.items()},
            "properties": {name: _check_dict(check) for name, check in self.properties.items()},
        }


def _check_dict(check: HypothesisCheck) -> dict:
    data = asdict(check)
    data["status"] = "pass" if check.passed else "fail"
    if check.witness is not None:
        data["witness"] = [float(v) for v in check.witness]
    return data


def _check_periodicity(h: GeneratingFunction, xi, eta) -> HypothesisCheck:
    diff = np.abs(h.eval(xi + 1.0, eta + 1.0) - h.eval(xi, eta))
    k = np.unravel_index(int(np.argmax(diff)), diff.shape)
    worst = float(diff[k])
    return HypothesisCheck(
        name="h1",
        passed=worst <= PERIODICITY_TOL,
        worst=worst,
        witness=(xi[k], eta[k]),
        note="max |h(x+1, y+1) - h(x, y)| on grid",
    )


def _check_submodularity(h: GeneratingFunction, grid: np.ndarray) -> HypothesisCheck:
    if grid.size > QUADRUPLE_GRID_CAP:
        grid = grid[np.linspace(0, grid.size - 1, QUADRUPLE_GRID_CAP).astype(int)]
    values = h.eval(grid[:, None], grid[None, :])
    # delta[i, j, k, l] = h(xi_i, eta_l) + h(xi_j, eta_k) - h(xi_i, eta_k) - h(xi_j, eta_l)
    delta = (values[:, None, None, :] + values[None, :, :, None]
             - values[:, None, :, None] - values[None, :, None, :])
    area = (grid[None, :] - grid[:, None])[:, :, None, None] * (grid[None, :] - grid[:, None])[None, None, :, :]
    ordered = area > 0
    ordered &= (grid[None, :] > grid[:, None])[:, :, None, None]

    slack = np.where(ordered, delta - h.twist_lower_bound * area, np.inf)
    k = np.unravel_index(int(np.argmin(slack)), slack.shape)
    worst = float(slack[k])
    strict = bool(np.all(delta[ordered] > 0.0))
    witness = (grid[k[0]], grid[k[1]], grid[k[2]], grid[k[3]])
    return HypothesisCheck(
        name="h3",
        passed=strict and worst >= -MARGIN_TOL,
        worst=worst,
        witness=witness,
        note="min of h(xi,eta')+h(xi',eta)-h(xi,eta)-h(xi',eta') - delta*(xi'-xi)*(eta'-eta)",
    )


def _check_twist(h: GeneratingFunction, xi, eta) -> HypothesisCheck:
    mixed = h.d12(xi, eta)
    k = np.unravel_index(int(np.argmax(mixed)), mixed.shape)
    worst = float(mixed[k] + h.twist_lower_bound)
    return HypothesisCheck(
        name="twist",
        passed=h.twist_lower_bound > 0 and worst <= MARGIN_TOL,
        worst=worst,
        witness=(xi[k], eta[k]),
        note="max d12 + delta on grid (h5 via d12 <= -delta)",
    )


def _check_growth(h: GeneratingFunction, grid: np.ndarray) -> HypothesisCheck:
    steps = np.array(GROWTH_STEPS)
    worst, witness = np.inf, None
    for sign in (1.0, -1.0):
        values = h.eval(grid[:, None], grid[:, None] + sign * steps[None, :])
        increments = np.diff(values, axis=1)
        k = np.unravel_index(int(np.argmin(increments)), increments.shape)
        if increments[k] < worst:
            worst = float(increments[k])
            witness = (grid[k[0]], sign * steps[k[1]], sign * steps[k[1] + 1])
    return HypothesisCheck(
        name="h2",
        passed=worst > 0.0,
        worst=worst,
        witness=witness,
        note="min increment of eta -> h(xi, xi + eta) along |eta| = 1, 2, 4, ...",
    )


def _check_semiconcavity(h: GeneratingFunction, grid: np.ndarray, xi, eta) -> HypothesisCheck:
    theta = float(np.max(np.abs(h.d11(xi, eta)))) + 1.0
    s = grid[1] - grid[0]
    left, mid, right = grid[:-2], grid[1:-1], grid[2:]
    second = (h.eval(left[:, None], grid[None, :]) - 2.0 * h.eval(mid[:, None], grid[None, :])
              + h.eval(right[:, None], grid[None, :]))
    convexity = theta * s ** 2 - second
    k = np.unravel_index(int(np.argmin(convexity)), convexity.shape)
    worst = float(convexity[k])
    return HypothesisCheck(
        name="h6",
        passed=worst >= -MARGIN_TOL,
        worst=worst,
        witness=(mid[k[0]], grid[k[1]]),
        note=f"second differences of theta*x^2/2 - h(x, y) with theta = {theta:.6g}",
    )


def _check_reversibility(h: GeneratingFunction, xi, eta) -> HypothesisCheck:
    diff = np.abs(h.eval(xi, eta) - h.eval(eta, xi))
    k = np.unravel_index(int(np.argmax(diff)), diff.shape)
    worst = float(diff[k])
    return HypothesisCheck(name="reversible", passed=worst <= PERIODICITY_TOL, worst=worst,
                           witness=(xi[k], eta[k]), note="max |h(x, y) - h(y, x)|")


def diagonal_profile(h: GeneratingFunction, start: float = 0.0, grid_n: int = 4096):
    grid = start + np.arange(grid_n) / grid_n
    return grid, np.asarray(h.eval(grid, grid), dtype=float)


def longest_flat_run(values: np.ndarray, tol: float = 1e-12) -> int:
    """Longest circular run of samples within tol of the minimum."""
    near = values <= values.min() + tol
    if near.all():
        return int(near.size)
    rolled = np.roll(near, -int(np.argmin(near)))
    longest = current = 0
    for flag in rolled:
        current = current + 1 if flag else 0
        longest = max(longest, current)
    return longest


def check_hypotheses(h: GeneratingFunction, strip: tuple = (-0.5, 1.5), grid_n: int = 21) -> HypothesisReport:
    """
    Sample the standing hypotheses of a generating function on a square grid.

    Checks are falsification attempts: a pass means "no violation found on grid".

    Args:
        h (GeneratingFunction): Function to check.
        strip (tuple, optional): Interval (lo, hi) whose square is sampled. Defaults to (-0.5, 1.5).
        grid_n (int, optional): Grid points per axis, at least 3. Defaults to 21.

    Returns:
        HypothesisReport: Verdicts with worst-case witnesses, plus the reversibility
            property and the degenerate-diagonal flag.

    Raises:
        InvalidParameterError: If grid_n < 3 or the strip is empty.
    """
    if grid_n < 3:
        raise InvalidParameterError(f"grid_n must be at least 3, got {grid_n}")
    lo, hi = float(strip[0]), float(strip[1])
    if not hi > lo:
        raise InvalidParameterError(f"empty strip {strip}")

    grid = np.linspace(lo, hi, grid_n)
    xi, eta = np.meshgrid(grid, grid, indexing="ij")

    report = HypothesisReport(strip=(lo, hi), grid_n=grid_n)
    for check in (
        _check_periodicity(h, xi, eta),
        _check_growth(h, grid),
        _check_submodularity(h, grid),
        _check_twist(h, xi, eta),
        _check_semiconcavity(h, grid, xi, eta),
    ):
        report.checks[check.name] = check
    report.properties["reversible"] = _check_reversibility(h, xi, eta)

    _, diagonal = diagonal_profile(h)
    report.degenerate_diagonal = longest_flat_run(diagonal) >= 3

    if report.all_passed:
        logger.info(f"No hypothesis violation found on {grid_n}x{grid_n} grid over {report.strip}")
    else:
        logger.warning(f"Hypothesis checks failed: {report.failed()}")
    if report.degenerate_diagonal:
        logger.warning("Diagonal h(x, x) is flat: every constant configuration is minimal")
    return report


def check_diagonal_minimum(h: GeneratingFunction, strip: tuple = (-0.5, 1.5), grid_n: int = 201) -> dict:
    """Locate the grid minimum of h; for reversible h it must sit on the diagonal."""
    grid = np.linspace(strip[0], strip[1], grid_n)
    values = h.eval(grid[:, None], grid[None, :])
    i, j = np.unravel_index(int(np.argmin(values)), values.shape)
    spacing = float(grid[1] - grid[0])
    return {
        "x": float(grid[i]),
        "y": float(grid[j]),
        "value": float(values[i, j]),
        "spacing": spacing,
        "on_diagonal": abs(grid[i] - grid[j]) <= spacing,
    }
