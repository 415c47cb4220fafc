# transition/schedule.py
import os
import math
import logging
import dotenv
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..action.configuration import DOWN, UP, Label, NeighboringPair, Schedule
from ..exceptions import ConstructionError, InvalidParameterError, PreconditionError
from ..minimize.gap import GapReport
from ..minimize.heteroclinic import HeteroclinicConstants, approximate_heteroclinic_window, heteroclinic_constants
from ..minimize.loops import phi_bounds
from ..minimize.options import MinimizeOptions

dotenv.load_dotenv()
logger = logging.getLogger(__name__)

PATTERN_ALTERNATING = "alternating"
PATTERN_ALTERNATING_DOWN = "alternating-down"
RHO_DECAY = 0.5
RHO_SHRINK = 1.0 - 1e-9
MAX_PLATEAU_SPACING = int(os.getenv("TWISTMIN_MAX_PLATEAU_SPACING", "1000000"))
SPACING_VERDICT = "(d) spacing"


@dataclass
class ScheduleBlueprint:
    """
    Inputs of the schedule construction and the quantities it derives.

    Attributes:
        epsilon (float): Cap on every window radius rho_i
        n_blocks (int): Number of blocks of the truncated schedule
        pattern: "alternating", "alternating-down" or an explicit label list of length n_blocks + 1
        min_plateau_spacing (int): Smallest interior block spacing
        max_plateau_spacing (int, optional): Cap on interior block spacings, MAX_PLATEAU_SPACING when None
        clamp_plateau_spacing (bool): Clamp a requirement above the cap instead of raising
        min_transition_spacing (int): Lower bound for transition block spacings
        phi_n_max (int): Loop lengths searched by the phi lower bound
        deltas (list): Derived visit radii delta_i, one per constrained index
        eps_i (list): Derived heteroclinic tolerances, one per transition block
        margins (list): Derived gap margins e^i, one per transition block
    """
    epsilon: float
    n_blocks: int
    pattern: object = PATTERN_ALTERNATING
    min_plateau_spacing: int = 4
    max_plateau_spacing: Optional[int] = None
    clamp_plateau_spacing: bool = False
    min_transition_spacing: int = 2
    phi_n_max: int = 4
    deltas: list = field(default_factory=list)
    eps_i: list = field(default_factory=list)
    margins: list = field(default_factory=list)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidParameterError(f"epsilon must be positive, got {self.epsilon}")
        if self.n_blocks < 1:
            raise InvalidParameterError(f"n_blocks must be at least 1, got {self.n_blocks}")
        if self.min_plateau_spacing < 1:
            raise InvalidParameterError("min_plateau_spacing must be at least 1")
        if self.max_plateau_spacing is not None and self.max_plateau_spacing < self.min_plateau_spacing:
            raise InvalidParameterError("max_plateau_spacing must be at least min_plateau_spacing")
        if self.min_transition_spacing < 1:
            raise InvalidParameterError("min_transition_spacing must be at least 1")

    def labels(self) -> list:
        if self.pattern in (PATTERN_ALTERNATING, PATTERN_ALTERNATING_DOWN):
            first = Label.U0 if self.pattern == PATTERN_ALTERNATING else Label.U1
            return [first if (i // 2) % 2 == 0 else first.other for i in range(self.n_blocks + 1)]
        if isinstance(self.pattern, (list, tuple)):
            try:
                labels = [Label(v) for v in self.pattern]
            except ValueError as e:
                raise InvalidParameterError(f"Unknown label in pattern {self.pattern!r}") from e
            if len(labels) != self.n_blocks + 1:
                raise InvalidParameterError(
                    f"An explicit pattern needs n_blocks + 1 = {self.n_blocks + 1} labels, got {len(labels)}"
                )
            return labels
        raise InvalidParameterError(f"Unknown pattern {self.pattern!r}")


def _direction(labels: list, b: int) -> str:
    return UP if labels[b] is Label.U0 else DOWN


def _face(pair: NeighboringPair, label: Label, rho: float) -> float:
    return pair.u0 + rho if label is Label.U0 else pair.u1 - rho


def _requirements(labels: list, i: int) -> list:
    """Directions of the transition blocks that constrained index i borders."""
    directions = []
    if i > 0 and labels[i - 1] != labels[i]:
        directions.append(_direction(labels, i - 1))
    if i < len(labels) - 1 and labels[i] != labels[i + 1]:
        directions.append(_direction(labels, i))
    return directions


def _plateau_runs(labels: list) -> list:
    runs, current = [], 0
    for i, label in enumerate(labels):
        if i and label != labels[i - 1]:
            current += 1
        runs.append(current)
    return runs


def choose_radii(pair: NeighboringPair, gap: GapReport, labels: list, rho_max: float) -> tuple:
    """
    Step 1: window radii rho_i = rho_max / 2^run, clipped so that the window faces
    next to a transition block are sampled gap points of that block's direction.

    Returns:
        tuple: (rho list, per-index margin list with None where no face is constrained)
    """
    rho, margins = [], []
    for i, run in enumerate(_plateau_runs(labels)):
        target = rho_max * RHO_DECAY ** run
        directions = _requirements(labels, i)
        if not directions:
            rho.append(target)
            margins.append(None)
            continue

        candidates = []
        for direction in directions:
            for interval in gap.intervals(direction):
                for sample in gap.samples(direction):
                    if interval.contains(sample.x0):
                        r = sample.x0 - pair.u0 if labels[i] is Label.U0 else pair.u1 - sample.x0
                        if 0 < r <= target:
                            candidates.append(r)

        best, best_margin = None, None
        for r in sorted(set(candidates), reverse=True):
            face = _face(pair, labels[i], r)
            hits = [gap.interval_containing(direction, face) for direction in directions]
            if all(hits):
                best, best_margin = r, min(hit.margin for hit in hits)
                break
        if best is None:
            raise ConstructionError(
                f"(p1) no sampled gap point gives a window face for index {i} with rho <= {target:.6g}",
                inequality="(p1)",
            )
        rho.append(best)
        margins.append(best_margin)
    return rho, margins


def _block_margin(site_margins: list, b: int) -> float:
    return min(m for m in (site_margins[b], site_margins[b + 1]) if m is not None)


def choose_deltas(labels: list, rho: list, site_margins: list, lipschitz: float, c_star: float) -> list:
    """Step 2: delta_i satisfying (d) with slack and leaving room in (e1)."""
    deltas = []
    for i in range(len(labels)):
        bounds = []
        for b in (i - 1, i):
            if not 0 <= b < len(labels) - 1:
                continue
            if labels[b] == labels[b + 1]:
                bounds.append(0.25 * (c_star / (2 * lipschitz) - (rho[b] + rho[b + 1])))
            else:
                bounds.append(_block_margin(site_margins, b) / (16 * lipschitz))
        if not bounds:
            bounds.append(0.25 * (c_star / (2 * lipschitz) - 2 * rho[i]))
        deltas.append(min(bounds))
    return deltas


def choose_epsilons(labels: list, rho: list, deltas: list, site_margins: list, lipschitz: float) -> dict:
    """Step 3: epsilon_b per transition block satisfying (e1) and (e2)."""
    epsilons = {}
    for b in range(len(labels) - 1):
        if labels[b] == labels[b + 1]:
            continue
        e = _block_margin(site_margins, b)
        slack_e1 = e / 2 - 2 * lipschitz * (deltas[b] + deltas[b + 1])
        slack_e2 = 2 * lipschitz * min(deltas[b], deltas[b + 1])
        window = 0.5 * lipschitz * min(rho[b], rho[b + 1])
        epsilons[b] = 0.5 * min(slack_e1, slack_e2, window)
        if not epsilons[b] > 0:
            raise ConstructionError(f"(e1) has no room for block {b}: margin {e:.3e}", inequality="(e1)")
    return epsilons


def verify_blueprint(schedule: Schedule, lipschitz: float, c_star: float, pair: NeighboringPair = None,
                     gap: GapReport = None) -> dict:
    """
    Re-check the construction inequalities on a built schedule.

    Returns:
        dict: inequality name -> bool for (p1) (when pair and gap are given), (p2), (d), (e1), (e2)
            and "(d) spacing" when the schedule records its interior spacing requirements
    """
    labels = list(schedule.labels)
    rho = schedule.rho
    deltas = schedule.diagnostics.get("deltas", [])
    epsilons = {int(b): v for b, v in schedule.diagnostics.get("eps_i", {}).items()}
    margins = {int(b): v for b, v in schedule.diagnostics.get("margins", {}).items()}
    limit = c_star / (2 * lipschitz)

    verdicts = {"(p2)": all(rho[b] + rho[b + 1] < limit for b in range(schedule.n_blocks))}
    verdicts["(d)"] = bool(deltas) and all(
        2 * max(deltas[b], deltas[b + 1]) < limit - (rho[b] + rho[b + 1])
        for b in range(schedule.n_blocks) if not schedule.is_transition(b)
    )
    transitions = [b for b in range(schedule.n_blocks) if schedule.is_transition(b)]
    verdicts["(e1)"] = all(
        epsilons[b] + 2 * lipschitz * (deltas[b] + deltas[b + 1]) < margins[b] / 2 for b in transitions
    )
    verdicts["(e2)"] = all(epsilons[b] / (2 * lipschitz) < min(deltas[b], deltas[b + 1]) for b in transitions)
    plateau = schedule.diagnostics.get("plateau_blocks")
    if plateau is not None:
        verdicts[SPACING_VERDICT] = all(schedule.spacing(int(b)) >= entry["required"] for b, entry in plateau.items())
    if pair is not None and gap is not None:
        verdicts["(p1)"] = all(
            gap.interval_containing(direction, _face(pair, labels[i], rho[i])) is not None
            for i in range(len(labels)) for direction in _requirements(labels, i)
        )
    return verdicts


def plateau_spacings(h, pair: NeighboringPair, blueprint: ScheduleBlueprint, labels: list, rho: list,
                     deltas: list, lipschitz: float, c_star: float, opts: MinimizeOptions) -> list:
    """
    Interior block spacings from the loop bound.

    Block b needs ceil((c*/2 + C (rho_b + rho_{b+1})) / phi_lower(delta)) sites with
    delta = min(delta_b, delta_{b+1}); the realised spacing is at least
    min_plateau_spacing. A requirement above the cap (max_plateau_spacing, or
    MAX_PLATEAU_SPACING when unset) is clamped only when the blueprint opts in.

    Returns:
        list: {"block", "delta", "phi_lower", "phi_upper", "required", "spacing", "clamped"} per interior block

    Raises:
        ConstructionError: With inequality "(d)" if phi_lower vanishes or a requirement exceeds the cap
    """
    cap = blueprint.max_plateau_spacing or MAX_PLATEAU_SPACING
    bounds, blocks = {}, []
    for b in range(len(labels) - 1):
        if labels[b] != labels[b + 1]:
            continue
        delta = min(deltas[b], deltas[b + 1], pair.half_width)
        if delta not in bounds:
            bounds[delta] = phi_bounds(h, pair, delta, blueprint.phi_n_max, opts)
        phi = bounds[delta]
        if not phi.lower > 0:
            raise ConstructionError(f"(d) the loop bound vanishes at delta={delta:.3e} for block {b}",
                                    inequality="(d)")
        required = math.ceil((c_star / 2 + lipschitz * (rho[b] + rho[b + 1])) / phi.lower)
        spacing = max(required, blueprint.min_plateau_spacing)
        clamped = spacing > cap
        if clamped:
            if not blueprint.clamp_plateau_spacing:
                raise ConstructionError(f"(d) block {b} needs {required} sites (phi_lower={phi.lower:.3e}), "
                                        f"above the cap of {cap}", inequality="(d)")
            logger.warning(f"Interior block {b} needs {required} sites and is clamped to {cap}")
            spacing = cap
        blocks.append({"block": b, "delta": delta, "phi_lower": phi.lower, "phi_upper": phi.upper,
                       "required": required, "spacing": spacing, "clamped": clamped})
    return blocks


def build_schedule(h, pair: NeighboringPair, gap: GapReport, blueprint: ScheduleBlueprint,
                   opts: MinimizeOptions = None, constants: HeteroclinicConstants = None) -> Schedule:
    """
    Construct a truncated transition schedule (k, rho, labels).

    Step 1 chooses radii inside the gap, step 2 the visit radii delta_i and the
    interior spacings, step 3 the heteroclinic tolerances and transition spacings,
    and step 4 anchors k_0 = 0. The finished schedule is re-verified.

    Raises:
        PreconditionError: If the gap report is empty in either direction
        ConstructionError: If an inequality cannot be met, naming it
    """
    if not gap.has_gap:
        raise PreconditionError("The gap condition fails: no gap interval in at least one direction")
    opts = opts or MinimizeOptions()
    labels = blueprint.labels()
    lipschitz = pair.lipschitz_bound(h)
    c_star = gap.c0 + gap.c1
    if not c_star > 0:
        raise PreconditionError(f"c* = {c_star} is not positive")

    rho_max = min(blueprint.epsilon, c_star / (4 * lipschitz)) * RHO_SHRINK
    rho, site_margins = choose_radii(pair, gap, labels, rho_max)
    if any(r >= pair.half_width for r in rho):
        raise ConstructionError("(p2) a radius reaches half the pair width", inequality="(p2)")

    deltas = choose_deltas(labels, rho, site_margins, lipschitz, c_star)
    if any(d <= 0 for d in deltas):
        raise ConstructionError("(d) admits no positive delta", inequality="(d)")
    epsilons = choose_epsilons(labels, rho, deltas, site_margins, lipschitz)

    if constants is None:
        constants = heteroclinic_constants(h, pair, opts=opts)
    plateau = {entry["block"]: entry for entry in
               plateau_spacings(h, pair, blueprint, labels, rho, deltas, lipschitz, c_star, opts)}

    spacings, windows = [], {}
    for b in range(len(labels) - 1):
        if labels[b] == labels[b + 1]:
            spacings.append(plateau[b]["spacing"])
            continue
        direction = _direction(labels, b)
        heteroclinic = constants.up if direction == UP else constants.down
        n_b, _ = approximate_heteroclinic_window(h, pair, epsilons[b], opts, direction=direction,
                                                 heteroclinic=heteroclinic)
        windows[b] = n_b
        spacings.append(max(n_b, blueprint.min_transition_spacing))

    k = [0] + np.cumsum(spacings).astype(int).tolist()
    margins = {b: _block_margin(site_margins, b) for b in epsilons}
    blueprint.deltas = deltas
    blueprint.eps_i = [epsilons[b] for b in sorted(epsilons)]
    blueprint.margins = [margins[b] for b in sorted(margins)]

    schedule = Schedule(k=k, rho=rho, labels=labels, diagnostics={
        "blueprint": {key: value for key, value in asdict(blueprint).items()
                      if key not in ("deltas", "eps_i", "margins")},
        "lipschitz": lipschitz,
        "c_star": c_star,
        "deltas": deltas,
        "eps_i": {str(b): v for b, v in epsilons.items()},
        "margins": {str(b): v for b, v in margins.items()},
        "heteroclinic_windows": {str(b): n for b, n in windows.items()},
        "plateau_blocks": {str(b): entry for b, entry in plateau.items()},
        "plateau_spacing_clamped": any(entry["clamped"] for entry in plateau.values()),
    }).validate(pair)

    verdicts = verify_blueprint(schedule, lipschitz, c_star, pair, gap)
    schedule.diagnostics["verdicts"] = verdicts
    for name, ok in verdicts.items():
        if name == SPACING_VERDICT and blueprint.clamp_plateau_spacing:
            continue
        if not ok:
            raise ConstructionError(f"{name} fails on the constructed schedule", inequality=name)
    logger.info(f"Built schedule k={schedule.k}, rho={[round(r, 6) for r in rho]}, "
                f"{schedule.transitions} transition(s)")
    return schedule
