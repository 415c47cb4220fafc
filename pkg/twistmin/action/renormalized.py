# action/renormalized.py
import logging
import threading
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ConstraintViolationError, DomainError, InvalidParameterError
from ..genfn.twist_map import stationarity_residuals
from ..minimize.options import MinimizeOptions
from ..minimize.segment import solve_from_seeds, step_seeds
from .configuration import DIRECTIONS, DOWN, UP, Configuration, ConstantTail, Label, NeighboringPair, Schedule
from .functionals import normalized_terms

logger = logging.getLogger(__name__)

KIND_INTERIOR = "interior"
KIND_PLUS = "transition-plus"
KIND_MINUS = "transition-minus"
WINDOW_TOL = 1e-12


class BlockConstantCache:
    """Thread-safe memo of block constants c^+/c^- keyed by model, pair, spacing, radii and direction."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._values = {}

    def get_or_compute(self, key: tuple, compute):
        with self._lock:
            if key in self._values:
                value, segment = self._values[key]
                return value, segment.copy()
        value, segment = compute()
        with self._lock:
            self._values.setdefault(key, (value, segment.copy()))
        return value, segment

    def clear(self) -> None:
        with self._lock:
            self._values.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._values)


BLOCK_CONSTANTS = BlockConstantCache()


@dataclass(frozen=True)
class BlockTerm:
    """
    One renormalized term A_i.

    Blocks -1 and n_blocks are the tail pseudo-blocks outside [k_0, k_last].
    """
    index: int
    start: int
    end: int
    kind: str
    value: float
    constant: float

    def to_dict(self) -> dict:
        return {"index": self.index, "start": self.start, "end": self.end, "kind": self.kind,
                "value": self.value, "constant": self.constant}


@dataclass
class ActionReport:
    total: float
    per_block: list = field(default_factory=list)
    per_site_residual: np.ndarray = None
    lo: int = 0

    @property
    def transition_terms(self) -> list:
        return [term for term in self.per_block if term.kind != KIND_INTERIOR]

    @property
    def max_residual(self) -> float:
        if self.per_site_residual is None or self.per_site_residual.size == 0:
            return 0.0
        return float(np.max(self.per_site_residual))

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "per_block": [term.to_dict() for term in self.per_block],
            "lo": self.lo,
            "per_site_residual": [] if self.per_site_residual is None else self.per_site_residual.tolist(),
        }


def block_kind(schedule: Schedule, i: int) -> str:
    _, _, first, second = schedule.block(i)
    if first == second:
        return KIND_INTERIOR
    return KIND_PLUS if first is Label.U0 else KIND_MINUS


def block_kinds(schedule: Schedule) -> list:
    return [block_kind(schedule, i) for i in range(schedule.n_blocks)]


def _block_bounds(pair: NeighboringPair, spacing: int, rho_i: float, rho_next: float, direction: str):
    lower = np.full(spacing + 1, pair.u0)
    upper = np.full(spacing + 1, pair.u1)
    if direction == UP:
        upper[0] = pair.u0 + rho_i
        lower[-1] = pair.u1 - rho_next
    else:
        lower[0] = pair.u1 - rho_i
        upper[-1] = pair.u0 + rho_next
    return lower, upper


def block_constant_c_plus(h, pair: NeighboringPair, spacing: int, rho_i: float, rho_next: float,
                          direction: str = UP, opts: MinimizeOptions = None,
                          cache: BlockConstantCache = BLOCK_CONSTANTS) -> tuple:
    """
    Constrained block minimum c^+ (direction "up") or c^- ("down").

    Minimizes sum_{j<spacing} h(x_j, x_{j+1}) over segments whose first site lies in
    the rho_i-window of the start level, whose last site lies in the rho_next-window of
    the end level, and whose sites all lie in [u0, u1].

    Returns:
        tuple: (value, achieving segment of spacing + 1 sites)
    """
    if spacing < 1:
        raise InvalidParameterError(f"spacing must be at least 1, got {spacing}")
    if direction not in DIRECTIONS:
        raise InvalidParameterError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    for name, rho in (("rho_i", rho_i), ("rho_next", rho_next)):
        if not 0 < rho <= pair.half_width:
            raise InvalidParameterError(f"{name} must lie in (0, {pair.half_width}], got {rho}")
    opts = opts or MinimizeOptions()

    def compute():
        lower, upper = _block_bounds(pair, spacing, rho_i, rho_next, direction)
        start = pair.u0 if direction == UP else pair.u1
        end = pair.u1 if direction == UP else pair.u0
        seeds = step_seeds(start, end, spacing - 1)
        seeds.append(np.linspace(upper[0] if direction == UP else lower[0],
                                 lower[-1] if direction == UP else upper[-1], spacing + 1))
        free = np.zeros(spacing + 1, dtype=bool)
        result = solve_from_seeds(h, seeds, free, lower, upper, opts)
        logger.debug(f"Block constant ({direction}, spacing={spacing}, rho=({rho_i:.3g}, {rho_next:.3g})) "
                     f"= {result.action:.15g}")
        return result.action, result.values

    key = (h.cache_key, pair.u0, pair.u1, int(spacing), float(rho_i), float(rho_next), direction)
    if cache is None:
        return compute()
    return cache.get_or_compute(key, compute)


def transition_constants(h, pair: NeighboringPair, schedule: Schedule, opts: MinimizeOptions = None,
                         cache: BlockConstantCache = BLOCK_CONSTANTS) -> dict:
    """Block index -> (c^+/c^-, argmin segment) for every transition block."""
    constants = {}
    for i in range(schedule.n_blocks):
        if schedule.is_transition(i):
            direction = UP if block_kind(schedule, i) == KIND_PLUS else DOWN
            constants[i] = block_constant_c_plus(h, pair, schedule.spacing(i), schedule.rho[i],
                                                 schedule.rho[i + 1], direction, opts, cache)
    return constants


def check_windows(pair: NeighboringPair, schedule: Schedule, config: Configuration) -> None:
    """Raise ConstraintViolationError at the first constrained site outside its window."""
    for i, (k, rho, label) in enumerate(zip(schedule.k, schedule.rho, schedule.labels)):
        distance = abs(config[k] - pair.level(label))
        if distance > rho + WINDOW_TOL:
            raise ConstraintViolationError(
                f"Site {k} is {distance:.6g} from {label.value}, outside its window rho={rho:.6g}", index=k
            )


def _check_config(schedule: Schedule, config: Configuration) -> None:
    if not config.covers(schedule.k[0], schedule.k[-1]):
        raise InvalidParameterError(
            f"Configuration window [{config.lo}, {config.hi}] does not cover [{schedule.k[0]}, {schedule.k[-1]}]"
        )
    for side, tail, label in (("left", config.left_tail, schedule.labels[0]),
                              ("right", config.right_tail, schedule.labels[-1])):
        if not isinstance(tail, ConstantTail):
            raise DomainError(f"compute_J needs a constant {side} tail")
        if tail.label is not label:
            raise DomainError(f"The {side} tail {tail.label.value} does not match the end label {label.value}")


def compute_J(h, pair: NeighboringPair, schedule: Schedule, config: Configuration,
              opts: MinimizeOptions = None, cache: BlockConstantCache = BLOCK_CONSTANTS) -> ActionReport:
    """
    Renormalized action J of a configuration in X_{k,rho}.

    Interior blocks contribute sum h - |I_i| c, transition blocks sum h - c^+/c^-.
    The tail pseudo-blocks outside [k_0, k_last] contribute their normalized sums,
    including the steps joining the window to the tails.

    Raises:
        InvalidParameterError: If the window does not cover the schedule
        DomainError: If a tail is not constant or does not match its end label
        ConstraintViolationError: If a constrained site leaves its window
    """
    _check_config(schedule, config)
    check_windows(pair, schedule, config)

    extended = config.extended(pair)
    raw = np.asarray(h.eval(extended[:-1], extended[1:]), dtype=float)
    terms = normalized_terms(h, pair, extended)

    def steps(start, end):
        # steps s -> s + 1 for s in [start, end)
        return slice(start - config.lo + 1, end - config.lo + 1)

    constants = transition_constants(h, pair, schedule, opts, cache)
    per_block = [BlockTerm(-1, config.lo - 1, schedule.k[0], KIND_INTERIOR,
                           float(np.sum(terms[steps(config.lo - 1, schedule.k[0])])), 0.0)]
    for i in range(schedule.n_blocks):
        start, end, _, _ = schedule.block(i)
        kind = block_kind(schedule, i)
        if kind == KIND_INTERIOR:
            value = float(np.sum(terms[steps(start, end)]))
            constant = (end - start) * pair.c
        else:
            constant = constants[i][0]
            value = float(np.sum(raw[steps(start, end)])) - constant
        per_block.append(BlockTerm(i, start, end, kind, value, float(constant)))
    per_block.append(BlockTerm(schedule.n_blocks, schedule.k[-1], config.hi + 1, KIND_INTERIOR,
                               float(np.sum(terms[steps(schedule.k[-1], config.hi + 1)])), 0.0))

    return ActionReport(
        total=float(sum(term.value for term in per_block)),
        per_block=per_block,
        per_site_residual=stationarity_residuals(h, extended),
        lo=config.lo,
    )


def plateau_sequence(h, pair: NeighboringPair, schedule: Schedule, margin: int = 0,
                  opts: MinimizeOptions = None, cache: BlockConstantCache = BLOCK_CONSTANTS) -> Configuration:
    """
    Plateau configuration of a schedule: each interior block rests on its label's level
    and each transition block follows its c^+/c^- argmin segment, so that transition
    terms of J vanish. ``margin`` extra tail sites are added on both sides.
    """
    lo, hi = schedule.k[0] - margin, schedule.k[-1] + margin
    values = np.empty(hi - lo + 1)
    values[: schedule.k[0] - lo + 1] = pair.level(schedule.labels[0])
    for i in range(schedule.n_blocks):
        start, end, label, _ = schedule.block(i)
        values[start - lo:end - lo + 1] = pair.level(label)
    values[schedule.k[-1] - lo:] = pair.level(schedule.labels[-1])

    for i, (_, segment) in transition_constants(h, pair, schedule, opts, cache).items():
        start, end, _, _ = schedule.block(i)
        values[start - lo:end - lo + 1] = segment
    return Configuration(lo, values, ConstantTail(schedule.labels[0]), ConstantTail(schedule.labels[-1]))
