# transition/distinctness.py
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed

from ..action.configuration import Configuration, ConstantTail, NeighboringPair, Schedule
from ..action.renormalized import BLOCK_CONSTANTS, BlockConstantCache
from ..exceptions import DistinctnessError, InvalidParameterError
from ..minimize.options import MinimizeOptions
from .solver import minimize_transition

logger = logging.getLogger(__name__)


def increasing_spacing_schedule(schedule: Schedule) -> Schedule:
    """Enlarge block spacings, keeping radii and labels, until they strictly increase."""
    spacings = []
    for i in range(schedule.n_blocks):
        spacing = schedule.spacing(i)
        if spacings and spacing <= spacings[-1]:
            spacing = spacings[-1] + 1
        spacings.append(spacing)
    k = [0]
    for spacing in spacings:
        k.append(k[-1] + spacing)
    diagnostics = dict(schedule.diagnostics, increasing_spacing=True)
    return Schedule(k=k, rho=schedule.rho, labels=schedule.labels, diagnostics=diagnostics)


def has_increasing_spacing(schedule: Schedule) -> bool:
    spacings = [schedule.spacing(i) for i in range(schedule.n_blocks)]
    return all(b > a for a, b in zip(spacings, spacings[1:]))


def sequence_schedule(base: Schedule, sequence) -> Schedule:
    """Schedule of X_j: the first M radii and labels placed at sites k[j_0], ..., k[j_{M-1}]."""
    sequence = [int(j) for j in sequence]
    if not sequence or sequence[0] != 0:
        raise InvalidParameterError(f"An index sequence must start at 0, got {sequence}")
    if any(b <= a for a, b in zip(sequence, sequence[1:])):
        raise InvalidParameterError(f"An index sequence must be strictly increasing, got {sequence}")
    if sequence[-1] >= len(base.k):
        raise InvalidParameterError(f"Index {sequence[-1]} is beyond the base schedule of {len(base.k)} indices")
    m = len(sequence)
    return Schedule(
        k=[base.k[j] for j in sequence],
        rho=base.rho[:m],
        labels=base.labels[:m],
        diagnostics={"sequence": sequence},
    )


def value_at(config: Configuration, site: int, pair: NeighboringPair) -> float:
    if site < config.lo:
        return pair.level(config.left_tail.label) if isinstance(config.left_tail, ConstantTail) else config.values[0]
    if site > config.hi:
        return pair.level(config.right_tail.label) if isinstance(config.right_tail, ConstantTail) else config.values[-1]
    return config[site]


def constrained_difference(a, b, pair: NeighboringPair) -> float:
    """Sup over the constrained sites of either schedule of |x_a - x_b|."""
    sites = set(a.schedule.k) | set(b.schedule.k)
    return max(abs(value_at(a.config, s, pair) - value_at(b.config, s, pair)) for s in sites)


def pairwise_distinctness(results: list, pair: NeighboringPair, clearance: float) -> list:
    """{"a", "b", "sup_difference", "distinct"} for every pair of results."""
    entries = []
    for i in range(len(results)):
        for j in range(i + 1, len(results)):
            difference = constrained_difference(results[i], results[j], pair)
            entries.append({"a": i, "b": j, "sup_difference": difference, "distinct": difference > clearance})
    return entries


def multi_schedule_distinctness(h, pair: NeighboringPair, base_schedule: Schedule, index_sequences: list,
                                opts: MinimizeOptions = None,
                                cache: BlockConstantCache = BLOCK_CONSTANTS) -> list:
    """
    Minimize J on X_j for every index sequence j and check the minimizers differ.

    Schedules are solved concurrently; results keep the order of ``index_sequences``.
    Minimizers of distinct sequences must differ by more than min rho / 2 at some
    constrained site.

    Raises:
        InvalidParameterError: If the base spacings do not strictly increase or a sequence is malformed
        DistinctnessError: If two different sequences give minimizers within min rho / 2 of each other
    """
    if not has_increasing_spacing(base_schedule):
        raise InvalidParameterError("The base schedule must have strictly increasing block spacings")
    opts = opts or MinimizeOptions()
    schedules = [sequence_schedule(base_schedule, sequence) for sequence in index_sequences]

    results = [None] * len(schedules)
    with ThreadPoolExecutor(max_workers=opts.max_workers) as executor:
        future_to_index = {
            executor.submit(minimize_transition, h, pair, schedule, opts, None, cache): i
            for i, schedule in enumerate(schedules)
        }
        for future in as_completed(future_to_index):
            results[future_to_index[future]] = future.result()

    clearance = 0.5 * min(base_schedule.rho)
    failures = [
        entry for entry in pairwise_distinctness(results, pair, clearance)
        if not entry["distinct"] and list(index_sequences[entry["a"]]) != list(index_sequences[entry["b"]])
    ]
    if failures:
        summary = ", ".join(f"{e['a']}/{e['b']} ({e['sup_difference']:.3e})" for e in failures)
        raise DistinctnessError(f"Minimizers of different sequences coincide up to {clearance:.3e}: {summary}",
                                pairs=failures, results=results)
    logger.info(f"{len(results)} minimizers are pairwise distinct beyond {clearance:.3e}")
    return results
