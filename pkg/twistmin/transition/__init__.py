# twistmin/transition/__init__.py
from .schedule import (
    PATTERN_ALTERNATING,
    PATTERN_ALTERNATING_DOWN,
    SPACING_VERDICT,
    ScheduleBlueprint,
    build_schedule,
    plateau_spacings,
    verify_blueprint,
)
from .solver import (
    TransitionResult,
    minimize_transition,
    count_transitions,
    block_monotonicity,
    window_contacts,
    surgery_diagnostic,
)
from .rational import lift_rational
from .distinctness import (
    increasing_spacing_schedule,
    sequence_schedule,
    pairwise_distinctness,
    multi_schedule_distinctness,
)

__all__ = [
    'PATTERN_ALTERNATING',
    'PATTERN_ALTERNATING_DOWN',
    'SPACING_VERDICT',
    'ScheduleBlueprint',
    'build_schedule',
    'plateau_spacings',
    'verify_blueprint',
    'TransitionResult',
    'minimize_transition',
    'count_transitions',
    'block_monotonicity',
    'window_contacts',
    'surgery_diagnostic',
    'lift_rational',
    'increasing_spacing_schedule',
    'sequence_schedule',
    'pairwise_distinctness',
    'multi_schedule_distinctness',
]
