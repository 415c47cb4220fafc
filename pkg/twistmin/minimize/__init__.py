# twistmin/minimize/__init__.py
from .options import MinimizeOptions
from .segment import (
    ChainResult,
    chain_action,
    minimize_chain,
    solve_from_seeds,
    minimize_segment,
    multistart_segments,
)
from .periodic import find_neighboring_pair, rational_neighboring_pair
from .heteroclinic import (
    HeteroclinicResult,
    HeteroclinicConstants,
    heteroclinic_minimizer,
    heteroclinic_constants,
    approximate_heteroclinic_window,
    partial_action,
    delta_visits,
)
from .loops import PhiEstimate, phi_bounds, estimate_phi
from .gap import FiberSample, GapInterval, GapReport, detect_gap

__all__ = [
    'MinimizeOptions',
    'ChainResult',
    'chain_action',
    'minimize_chain',
    'solve_from_seeds',
    'minimize_segment',
    'multistart_segments',
    'find_neighboring_pair',
    'rational_neighboring_pair',
    'HeteroclinicResult',
    'HeteroclinicConstants',
    'heteroclinic_minimizer',
    'heteroclinic_constants',
    'approximate_heteroclinic_window',
    'partial_action',
    'delta_visits',
    'PhiEstimate',
    'phi_bounds',
    'estimate_phi',
    'FiberSample',
    'GapInterval',
    'GapReport',
    'detect_gap',
]
