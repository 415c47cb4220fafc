# action/configuration.py
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..exceptions import InvalidParameterError, PreconditionError

logger = logging.getLogger(__name__)

UP = "up"
DOWN = "down"
DIRECTIONS = (UP, DOWN)


class Label(str, Enum):
    """Which member of the neighboring pair a site or tail is attached to."""
    U0 = "u0"
    U1 = "u1"

    @property
    def other(self) -> "Label":
        return Label.U1 if self is Label.U0 else Label.U0


@dataclass(frozen=True)
class ConstantTail:
    label: Label

    def to_json(self):
        return self.label.value


@dataclass(frozen=True)
class PeriodicLift:
    """Tail continued by x_{i+q} = x_i + p."""
    q: int
    p: int

    def __post_init__(self):
        if self.q < 1:
            raise InvalidParameterError(f"PeriodicLift needs q >= 1, got {self.q}")

    @property
    def rotation(self) -> float:
        return self.p / self.q

    def to_json(self):
        return {"periodic": [self.q, self.p]}


def tail_from_json(raw):
    if raw is None:
        return None
    if isinstance(raw, str):
        try:
            return ConstantTail(Label(raw))
        except ValueError as e:
            raise InvalidParameterError(f"Unknown tail {raw!r}") from e
    if isinstance(raw, dict) and "periodic" in raw:
        q, p = raw["periodic"]
        return PeriodicLift(int(q), int(p))
    raise InvalidParameterError(f"Unknown tail {raw!r}")


def tail_to_json(tail):
    return None if tail is None else tail.to_json()


@dataclass(frozen=True)
class NeighboringPair:
    """
    Two adjacent (1,0)-periodic minimizers u0 < u1 and the minimal diagonal value c.

    Attributes:
        u0 (float): Lower periodic minimizer
        u1 (float): Upper periodic minimizer
        c (float): min_x h(x, x)
        period_check_resolution (int): Grid size used to certify no minimizer lies between
    """
    u0: float
    u1: float
    c: float
    period_check_resolution: int = 4096

    def __post_init__(self):
        if not self.u0 < self.u1:
            raise InvalidParameterError(f"Neighboring pair needs u0 < u1, got ({self.u0}, {self.u1})")

    @property
    def width(self) -> float:
        return self.u1 - self.u0

    @property
    def half_width(self) -> float:
        return 0.5 * self.width

    def level(self, label: Label) -> float:
        return self.u0 if Label(label) is Label.U0 else self.u1

    def lipschitz_bound(self, h) -> float:
        return h.lipschitz_on(self.u0 - 1.0, self.u1 + 1.0)

    def strip_lipschitz(self, h) -> float:
        return h.lipschitz_on(self.u0, self.u1)

    def to_dict(self) -> dict:
        return {"u0": self.u0, "u1": self.u1, "c": self.c,
                "period_check_resolution": self.period_check_resolution}


@dataclass
class Configuration:
    """
    Finite window of a bi-infinite configuration plus tail descriptions.

    ``values[j]`` is the site ``lo + j``. Tails are a ConstantTail, a PeriodicLift or
    None for a raw window whose continuation is unknown.
    """
    lo: int
    values: np.ndarray
    left_tail: object = None
    right_tail: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size == 0:
            raise InvalidParameterError("Configuration needs at least one site")
        self.lo = int(self.lo)

    @property
    def hi(self) -> int:
        return self.lo + self.values.size - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def covers(self, start: int, end: int) -> bool:
        return self.lo <= start and end <= self.hi

    def __getitem__(self, i: int) -> float:
        if not self.lo <= i <= self.hi:
            raise IndexError(f"Site {i} outside window [{self.lo}, {self.hi}]")
        return float(self.values[i - self.lo])

    def slice(self, start: int, end: int) -> np.ndarray:
        """Sites start..end inclusive."""
        if not self.covers(start, end):
            raise IndexError(f"Sites [{start}, {end}] outside window [{self.lo}, {self.hi}]")
        return self.values[start - self.lo:end - self.lo + 1]

    def tail_level(self, side: str, pair: NeighboringPair) -> float:
        tail = self.left_tail if side == "left" else self.right_tail
        if not isinstance(tail, ConstantTail):
            raise PreconditionError(f"The {side} tail is not constant: {tail!r}")
        return pair.level(tail.label)

    def extended(self, pair: NeighboringPair) -> np.ndarray:
        """Window with one constant tail site appended on each side."""
        return np.concatenate(([self.tail_level("left", pair)], self.values, [self.tail_level("right", pair)]))

    def in_strip(self, pair: NeighboringPair) -> bool:
        return bool(np.all((self.values >= pair.u0 - 1.0) & (self.values <= pair.u1 + 1.0)))

    def padded(self, left: int, right: int, pair: NeighboringPair) -> "Configuration":
        values = np.concatenate((np.full(left, self.tail_level("left", pair)), self.values,
                                 np.full(right, self.tail_level("right", pair))))
        return Configuration(self.lo - left, values, self.left_tail, self.right_tail)

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "values": self.values.tolist(),
            "left_tail": tail_to_json(self.left_tail),
            "right_tail": tail_to_json(self.right_tail),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Configuration":
        try:
            return cls(
                lo=int(data["lo"]),
                values=data["values"],
                left_tail=tail_from_json(data.get("left_tail")),
                right_tail=tail_from_json(data.get("right_tail")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidParameterError(f"Malformed configuration: {e}") from e


@dataclass(frozen=True)
class Schedule:
    """
    Constraint data (k, rho, labels) of a truncated transition schedule.

    Site k[i] is constrained to the rho[i]-window of the pair member labels[i].
    Block i covers sites k[i]..k[i+1]; it is a transition block when its two labels
    differ.

    Attributes:
        k (tuple): Strictly increasing constrained indices, k[0] == 0
        rho (tuple): Window radii aligned to k
        labels (tuple): Label per constrained index
        diagnostics (dict): Construction notes (not part of equality)
    """
    k: tuple
    rho: tuple
    labels: tuple
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        object.__setattr__(self, "rho", tuple(float(v) for v in self.rho))
        object.__setattr__(self, "labels", tuple(Label(v) for v in self.labels))

        if not self.k:
            raise InvalidParameterError("Schedule needs at least one constrained index")
        if not len(self.k) == len(self.rho) == len(self.labels):
            raise InvalidParameterError("k, rho and labels must have the same length")
        if self.k[0] != 0:
            raise InvalidParameterError(f"Schedule must start at k[0] = 0, got {self.k[0]}")
        if any(b <= a for a, b in zip(self.k, self.k[1:])):
            raise InvalidParameterError(f"k must be strictly increasing: {self.k}")
        if any(r <= 0 for r in self.rho):
            raise InvalidParameterError(f"rho must be positive: {self.rho}")
        for i in range(1, len(self.labels) - 1):
            if self.labels[i - 1] == self.labels[i + 1] != self.labels[i]:
                raise PreconditionError(f"Isolated label at schedule index {i}")

    def validate(self, pair: NeighboringPair) -> "Schedule":
        for i, r in enumerate(self.rho):
            if not r < pair.half_width:
                raise InvalidParameterError(
                    f"rho[{i}] = {r} must be below half the pair width {pair.half_width}"
                )
        return self

    @property
    def n_blocks(self) -> int:
        return len(self.k) - 1

    def block(self, i: int) -> tuple:
        """(start, end, start label, end label) of block i."""
        return self.k[i], self.k[i + 1], self.labels[i], self.labels[i + 1]

    def spacing(self, i: int) -> int:
        return self.k[i + 1] - self.k[i]

    def is_transition(self, i: int) -> bool:
        return self.labels[i] != self.labels[i + 1]

    @property
    def transitions(self) -> int:
        return sum(1 for i in range(self.n_blocks) if self.is_transition(i))

    @property
    def largest_block(self) -> int:
        return max((self.spacing(i) for i in range(self.n_blocks)), default=1)

    def window(self, i: int, pair: NeighboringPair) -> tuple:
        """Window of constrained index i intersected with [u0, u1]."""
        level = pair.level(self.labels[i])
        return max(pair.u0, level - self.rho[i]), min(pair.u1, level + self.rho[i])

    def to_dict(self) -> dict:
        return {
            "k": list(self.k),
            "rho": list(self.rho),
            "labels": [label.value for label in self.labels],
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Schedule":
        try:
            return cls(k=data["k"], rho=data["rho"], labels=data["labels"],
                       diagnostics=dict(data.get("diagnostics", {})))
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidParameterError(f"Malformed schedule: {e}") from e
