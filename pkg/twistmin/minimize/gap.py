# minimize/gap.py
import os
import logging
import dotenv
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

from ..action.configuration import DOWN, UP, Configuration, ConstantTail, NeighboringPair
from ..action.functionals import compute_I
from ..exceptions import InvalidParameterError, NonConvergenceError
from ..utils.utils import saturated
from .heteroclinic import HeteroclinicConstants, end_labels, heteroclinic_constants, step_profile
from .options import MinimizeOptions
from .segment import solve_from_seeds

dotenv.load_dotenv()

logger = logging.getLogger(__name__)

GAP_REL_MARGIN = float(os.getenv("TWISTMIN_GAP_REL_MARGIN", "1e-4"))
GAP_ABS_MARGIN = 1e-9
DEFAULT_FIBER_SAMPLES = 64
DEFAULT_GAP_HALF_WINDOW = 30
MIN_FIBER_SAMPLES = 8
JUMP_SEEDS = range(-3, 4)
LADDER_FLOOR = 1e-6


@dataclass(frozen=True)
class FiberSample:
    direction: str
    x0: float
    constrained_min: float


@dataclass(frozen=True)
class GapInterval:
    """Sampled interval [lo, hi] on which m(x0) >= c + margin."""
    lo: float
    hi: float
    margin: float

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "margin": self.margin}


@dataclass
class GapReport:
    """
    Constrained heteroclinic minima along fibers x(0) = x0 and the gaps they reveal.

    ``gap_intervals_I0`` are maximal runs of up-direction samples with m(x0) >= c0 + margin
    (and ``gap_intervals_I1`` the same for down and c1); ``e0``/``e1`` are the largest
    uniform margins over the reported intervals.
    """
    c0: float
    c1: float
    margin: float
    half_window: int
    fiber_samples: list = field(default_factory=list)
    gap_intervals_I0: list = field(default_factory=list)
    gap_intervals_I1: list = field(default_factory=list)
    e0: float = 0.0
    e1: float = 0.0
    i0_sites: list = field(default_factory=list)
    i1_sites: list = field(default_factory=list)

    @property
    def has_gap(self) -> bool:
        return bool(self.gap_intervals_I0) and bool(self.gap_intervals_I1)

    def intervals(self, direction: str) -> list:
        return self.gap_intervals_I0 if direction == UP else self.gap_intervals_I1

    def samples(self, direction: str) -> list:
        return [s for s in self.fiber_samples if s.direction == direction]

    def interval_containing(self, direction: str, x: float):
        for interval in self.intervals(direction):
            if interval.contains(x):
                return interval
        return None

    def to_dict(self) -> dict:
        return {
            "c0": self.c0,
            "c1": self.c1,
            "margin": self.margin,
            "half_window": self.half_window,
            "e0": self.e0,
            "e1": self.e1,
            "has_gap": self.has_gap,
            "gap_intervals_I0": [g.to_dict() for g in self.gap_intervals_I0],
            "gap_intervals_I1": [g.to_dict() for g in self.gap_intervals_I1],
            "i0_sites": self.i0_sites,
            "i1_sites": self.i1_sites,
            "fiber_samples": [
                {"direction": s.direction, "x0": s.x0, "constrained_min": s.constrained_min}
                for s in self.fiber_samples
            ],
        }


def fiber_points(pair: NeighboringPair, fiber_samples: int) -> np.ndarray:
    """Half uniform interior points, half geometric ladders towards u0 and u1."""
    width = pair.width
    uniform = fiber_samples // 2
    ladder = (fiber_samples - uniform) // 2
    points = [pair.u0 + width * (np.arange(1, uniform + 1) / (uniform + 1))]
    if ladder:
        offsets = width * np.geomspace(LADDER_FLOOR, 0.25, ladder)
        points += [pair.u0 + offsets, pair.u1 - offsets]
    return np.unique(np.concatenate(points))


def constrained_minimum(h, pair: NeighboringPair, direction: str, x0: float, half_window: int,
                        opts: MinimizeOptions) -> float:
    """min I over heteroclinic configurations on -N..N with x(0) = x0."""
    seeds = []
    for jump in JUMP_SEEDS:
        seed = step_profile(pair, direction, -half_window, half_window, jump)
        seed[half_window] = x0
        seeds.append(seed)
    fixed = np.zeros(2 * half_window + 1, dtype=bool)
    fixed[[0, half_window, -1]] = True

    serial = MinimizeOptions(tol_grad=opts.tol_grad, max_sweeps=opts.max_sweeps, method=opts.method,
                             grid_seed_points=opts.grid_seed_points, threads=1, seed=opts.seed)
    best = solve_from_seeds(h, seeds, fixed, pair.u0, pair.u1, serial)
    start, end = end_labels(direction)
    return compute_I(h, pair, Configuration(-half_window, best.values, ConstantTail(start), ConstantTail(end)))


def _fiber_row(samples: list, points, direction: str) -> list:
    """Samples of one direction in fiber order, None where the fiber did not converge."""
    by_x0 = {s.x0: s for s in samples if s.direction == direction}
    return [by_x0.get(float(x0)) for x0 in points]


def _gap_intervals(samples: list, c: float, margin: float) -> list:
    """Maximal runs of consecutive samples above c + margin; a None sample ends the run."""
    intervals, run = [], []
    for sample in samples + [None]:
        if sample is not None and sample.constrained_min >= c + margin:
            run.append(sample)
            continue
        if run:
            intervals.append(GapInterval(
                lo=run[0].x0, hi=run[-1].x0, margin=min(s.constrained_min for s in run) - c
            ))
            run = []
    return intervals


def _heteroclinic_sites(result, pair: NeighboringPair) -> list:
    values = result.config.values
    inside = ~saturated(values, (pair.u0, pair.u1))
    return sorted(float(v) for v in values[inside])


def detect_gap(h, pair: NeighboringPair, fiber_samples: int = DEFAULT_FIBER_SAMPLES,
               half_window: int = DEFAULT_GAP_HALF_WINDOW, opts: MinimizeOptions = None,
               constants: HeteroclinicConstants = None) -> GapReport:
    """
    Sample the constrained minimum m(x0) on fibers and report the gap intervals.

    For every sampled x0 in (u0, u1) and each direction, the truncated I is minimized
    over configurations on -N..N with x(0) = x0, starting from single-jump seeds at
    bonds -3..3. Samples with m(x0) >= c + margin, margin = max(1e-9, rel * c*),
    form the gap; an empty gap is a valid report.

    Raises:
        InvalidParameterError: If fiber_samples < 8
    """
    if fiber_samples < MIN_FIBER_SAMPLES:
        raise InvalidParameterError(f"fiber_samples must be at least {MIN_FIBER_SAMPLES}, got {fiber_samples}")
    opts = opts or MinimizeOptions()
    if constants is None or constants.up.config.lo != -half_window:
        constants = heteroclinic_constants(h, pair, half_window=half_window, opts=opts)
    margin = max(GAP_ABS_MARGIN, GAP_REL_MARGIN * constants.c_star)

    points = fiber_points(pair, fiber_samples)
    tasks = [(direction, float(x0)) for direction in (UP, DOWN) for x0 in points]
    minima = {}
    with ThreadPoolExecutor(max_workers=opts.max_workers) as executor:
        future_to_fiber = {
            executor.submit(constrained_minimum, h, pair, direction, x0, half_window, opts): (direction, x0)
            for direction, x0 in tasks
        }
        for future in as_completed(future_to_fiber):
            fiber = future_to_fiber[future]
            try:
                minima[fiber] = future.result()
            except NonConvergenceError as e:
                logger.warning(f"Fiber {fiber} did not converge and is left out: {e.message}")

    samples = [FiberSample(direction, x0, minima[(direction, x0)]) for direction, x0 in tasks
               if (direction, x0) in minima]
    report = GapReport(
        c0=constants.c0,
        c1=constants.c1,
        margin=margin,
        half_window=half_window,
        fiber_samples=samples,
        i0_sites=_heteroclinic_sites(constants.up, pair),
        i1_sites=_heteroclinic_sites(constants.down, pair),
    )
    report.gap_intervals_I0 = _gap_intervals(_fiber_row(samples, points, UP), constants.c0, margin)
    report.gap_intervals_I1 = _gap_intervals(_fiber_row(samples, points, DOWN), constants.c1, margin)
    report.e0 = max((g.margin for g in report.gap_intervals_I0), default=0.0)
    report.e1 = max((g.margin for g in report.gap_intervals_I1), default=0.0)

    logger.info(f"Gap detection: {len(report.gap_intervals_I0)} interval(s) for I0 (e0={report.e0:.6g}), "
                f"{len(report.gap_intervals_I1)} for I1 (e1={report.e1:.6g})")
    return report
