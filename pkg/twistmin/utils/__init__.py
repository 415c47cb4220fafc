from .utils import format_float, refine_grid_minimum, saturated, is_monotone, sup_difference, finite_or_none

__all__ = ['format_float', 'refine_grid_minimum', 'saturated', 'is_monotone', 'sup_difference', 'finite_or_none']
