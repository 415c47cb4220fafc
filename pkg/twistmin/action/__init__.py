# twistmin/action/__init__.py
from .configuration import (
    UP,
    DOWN,
    Label,
    ConstantTail,
    PeriodicLift,
    NeighboringPair,
    Configuration,
    Schedule,
)
from .functionals import segment_action, normalized_term_a, normalized_terms, compute_I, rotation_number
from .renormalized import (
    KIND_INTERIOR,
    KIND_PLUS,
    KIND_MINUS,
    BlockConstantCache,
    BlockTerm,
    ActionReport,
    block_kind,
    block_kinds,
    block_constant_c_plus,
    transition_constants,
    check_windows,
    compute_J,
    plateau_sequence,
)

__all__ = [
    'UP',
    'DOWN',
    'Label',
    'ConstantTail',
    'PeriodicLift',
    'NeighboringPair',
    'Configuration',
    'Schedule',
    'segment_action',
    'normalized_term_a',
    'normalized_terms',
    'compute_I',
    'rotation_number',
    'KIND_INTERIOR',
    'KIND_PLUS',
    'KIND_MINUS',
    'BlockConstantCache',
    'BlockTerm',
    'ActionReport',
    'block_kind',
    'block_kinds',
    'block_constant_c_plus',
    'transition_constants',
    'check_windows',
    'compute_J',
    'plateau_sequence',
]
