# transition/solver.py
import os
import logging
import dotenv
from dataclasses import dataclass, field

import numpy as np

from ..action.configuration import Configuration, ConstantTail, Label, NeighboringPair, Schedule
from ..action.renormalized import (
    BLOCK_CONSTANTS,
    KIND_PLUS,
    ActionReport,
    BlockConstantCache,
    block_kind,
    compute_J,
    plateau_sequence,
    transition_constants,
)
from ..exceptions import ConstraintViolationError, InvalidParameterError
from ..minimize.heteroclinic import MONOTONE_RESOLUTION, MONOTONE_TOL
from ..minimize.options import MinimizeOptions
from ..minimize.segment import minimize_chain
from ..utils.utils import is_monotone

dotenv.load_dotenv()

logger = logging.getLogger(__name__)

CONTACT_TOL = float(os.getenv("TWISTMIN_CONTACT_TOL", "1e-7"))
BINDING_TOL = 1e-8


@dataclass(frozen=True)
class TransitionResult:
    """
    Constrained minimizer of J over a truncated X_{k,rho} and its verification.

    Attributes:
        config (Configuration): Minimizer on the window [-margin, k_last + margin]
        schedule (Schedule): Schedule it was minimized under
        transitions (int): count_transitions with clearance min rho
        interior (bool): No constrained site touches its window face and no box bound binds
        max_residual (float): Max stationarity residual over the window
        action_value (float): J of the minimizer
        contacts (tuple): Constrained sites found on their window face
        block_monotone (tuple): Per transition block monotonicity verdicts
        report (ActionReport): Per-block breakdown of J
        surgery (tuple): J(z) - J(x*) per contact, empty when interior
    """
    config: Configuration
    schedule: Schedule
    transitions: int
    interior: bool
    max_residual: float
    action_value: float
    contacts: tuple = ()
    block_monotone: tuple = ()
    report: ActionReport = None
    surgery: tuple = ()

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "schedule": self.schedule.to_dict(),
            "transitions": self.transitions,
            "interior": self.interior,
            "max_residual": self.max_residual,
            "action_value": self.action_value,
            "contacts": list(self.contacts),
            "block_monotone": list(self.block_monotone),
            "report": None if self.report is None else self.report.to_dict(),
            "surgery": list(self.surgery),
        }

    def site_rows(self) -> list:
        """(site, value, constrained, label) rows for plotting."""
        labels = dict(zip(self.schedule.k, self.schedule.labels))
        return [
            (int(i), float(v), i in labels, labels[i].value if i in labels else "")
            for i, v in zip(self.config.indices, self.config.values)
        ]


def count_transitions(config: Configuration, pair: NeighboringPair, clearance: float) -> int:
    """
    Number of passages between the clearance-collars of u0 and u1.

    Constant tails count as visits to their level.
    """
    if not 0 < clearance < pair.half_width:
        raise InvalidParameterError(f"clearance must lie in (0, {pair.half_width}), got {clearance}")
    values = list(config.values)
    if isinstance(config.left_tail, ConstantTail):
        values.insert(0, pair.level(config.left_tail.label))
    if isinstance(config.right_tail, ConstantTail):
        values.append(pair.level(config.right_tail.label))

    state, count = None, 0
    for v in values:
        if abs(v - pair.u0) < clearance:
            current = Label.U0
        elif abs(v - pair.u1) < clearance:
            current = Label.U1
        else:
            continue
        if state is not None and current is not state:
            count += 1
        state = current
    return count


def block_monotonicity(config: Configuration, schedule: Schedule, pair: NeighboringPair) -> list:
    """Strict monotonicity of each transition block in its designed direction."""
    verdicts = []
    for i in range(schedule.n_blocks):
        if not schedule.is_transition(i):
            continue
        start, end, _, _ = schedule.block(i)
        increasing = block_kind(schedule, i) == KIND_PLUS
        verdicts.append({
            "block": i,
            "direction": "up" if increasing else "down",
            "monotone": is_monotone(config.slice(start, end), increasing=increasing, tol=MONOTONE_TOL,
                                    levels=(pair.u0, pair.u1), resolution=MONOTONE_RESOLUTION),
        })
    return verdicts


def window_contacts(config: Configuration, schedule: Schedule, pair: NeighboringPair,
                    tol: float = CONTACT_TOL) -> list:
    """Constrained sites whose distance to their level is within tol of rho_i."""
    return [
        k for k, rho, label in zip(schedule.k, schedule.rho, schedule.labels)
        if abs(config[k] - pair.level(label)) >= rho - tol
    ]


def _adjacent_transition(schedule: Schedule, i: int):
    for b in (i, i - 1):
        if 0 <= b < schedule.n_blocks and schedule.is_transition(b):
            return b
    return None


def _delta_visit(values: np.ndarray, lo: int, level: float, delta: float, start: int, step: int, stop: int) -> int:
    site = start
    while (site - stop) * step < 0:
        if abs(values[site - lo] - level) < delta:
            return site
        site += step
    return stop


def surgery_diagnostic(h, pair: NeighboringPair, schedule: Schedule, config: Configuration, contacts: list,
                       opts: MinimizeOptions = None, cache: BlockConstantCache = BLOCK_CONSTANTS) -> list:
    """
    J(z) - J(x*) for the plateau-collapse competitor z around each contact.

    For a contact next to transition block b, z takes the c^+/c^- argmin segment on
    block b and the plateau levels between the nearest delta-visits l before k_b and
    after k_{b+1}; everywhere else z = x*.
    """
    deltas = schedule.diagnostics.get("deltas") or [0.5 * r for r in schedule.rho]
    constants = transition_constants(h, pair, schedule, opts, cache)
    base = compute_J(h, pair, schedule, config, opts, cache).total
    index_of = {k: i for i, k in enumerate(schedule.k)}

    entries = []
    for k in contacts:
        i = index_of[k]
        b = _adjacent_transition(schedule, i)
        if b is None:
            entries.append({"index": k, "block": None, "delta_J": None})
            continue

        start, end, first, second = schedule.block(b)
        before = _delta_visit(config.values, config.lo, pair.level(first), deltas[b], start, -1, config.lo)
        after = _delta_visit(config.values, config.lo, pair.level(second), deltas[b + 1], end, 1, config.hi)

        values = config.values.copy()
        values[before - config.lo + 1:start - config.lo] = pair.level(first)
        values[start - config.lo:end - config.lo + 1] = constants[b][1]
        values[end - config.lo + 1:after - config.lo] = pair.level(second)
        competitor = Configuration(config.lo, values, config.left_tail, config.right_tail)
        try:
            delta_j = compute_J(h, pair, schedule, competitor, opts, cache).total - base
        except ConstraintViolationError:
            delta_j = None
        entries.append({"index": k, "block": b, "l_before": before, "l_after": after, "delta_J": delta_j})
    return entries


def _bounds(pair: NeighboringPair, schedule: Schedule, lo: int, size: int) -> tuple:
    lower = np.full(size, pair.u0)
    upper = np.full(size, pair.u1)
    for i, k in enumerate(schedule.k):
        lower[k - lo], upper[k - lo] = schedule.window(i, pair)
    return lower, upper


def minimize_transition(h, pair: NeighboringPair, schedule: Schedule, opts: MinimizeOptions = None,
                        margin: int = None, cache: BlockConstantCache = BLOCK_CONSTANTS) -> TransitionResult:
    """
    Minimize J over the truncated X_{k,rho} and verify interiority.

    The window runs from -margin to k_last + margin (margin defaults to the largest
    block); its end sites are pinned to the tail levels, every site is boxed to
    [u0, u1] and constrained sites to their windows. The Newton solve starts from the
    plateau test sequence. A result with boundary contact is returned with
    ``interior = False`` and a surgery diagnostic per contact.
    """
    schedule.validate(pair)
    opts = opts or MinimizeOptions()
    margin = schedule.largest_block if margin is None else int(margin)
    if margin < 1:
        raise InvalidParameterError(f"margin must be at least 1, got {margin}")

    start = plateau_sequence(h, pair, schedule, margin, opts, cache)
    lower, upper = _bounds(pair, schedule, start.lo, start.values.size)
    fixed = np.zeros(start.values.size, dtype=bool)
    fixed[[0, -1]] = True
    result = minimize_chain(h, start.values, fixed, lower, upper, opts)

    config = Configuration(start.lo, result.values, start.left_tail, start.right_tail)
    report = compute_J(h, pair, schedule, config, opts, cache)
    contacts = window_contacts(config, schedule, pair)
    box_binding = bool(np.any(result.at_bound & (result.residuals > BINDING_TOL)))
    interior = not contacts and not box_binding
    surgery = () if interior else tuple(surgery_diagnostic(h, pair, schedule, config, contacts, opts, cache))

    transitions = count_transitions(config, pair, min(schedule.rho))
    monotone = tuple(block_monotonicity(config, schedule, pair))
    if interior:
        logger.info(f"Transition minimizer is interior: {transitions} transition(s), J={report.total:.12g}")
    else:
        logger.warning(f"Transition minimizer touches its windows at sites {contacts}")

    return TransitionResult(
        config=config,
        schedule=schedule,
        transitions=transitions,
        interior=interior,
        max_residual=report.max_residual,
        action_value=report.total,
        contacts=tuple(contacts),
        block_monotone=monotone,
        report=report,
        surgery=surgery,
    )
