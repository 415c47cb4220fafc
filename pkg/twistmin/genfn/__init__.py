# twistmin/genfn/__init__.py
from .base import GeneratingFunction, OrbitPoint
from .frenkel_kontorova import (
    FrenkelKontorovaParams,
    FrenkelKontorovaFunction,
    fk_generating_function,
    fk_tabulated_generating_function,
    model_from_spec,
)
from .hypotheses import HypothesisCheck, HypothesisReport, check_hypotheses, check_diagonal_minimum
from .twist_map import (
    twist_map_step,
    twist_map_inverse_step,
    map_jacobian,
    orbit,
    stationarity_residuals,
)
from .conjunction import Conjunction, conjunction, ReducedGeneratingFunction, rational_reduction

__all__ = [
    'GeneratingFunction',
    'OrbitPoint',
    'FrenkelKontorovaParams',
    'FrenkelKontorovaFunction',
    'fk_generating_function',
    'fk_tabulated_generating_function',
    'model_from_spec',
    'HypothesisCheck',
    'HypothesisReport',
    'check_hypotheses',
    'check_diagonal_minimum',
    'twist_map_step',
    'twist_map_inverse_step',
    'map_jacobian',
    'orbit',
    'stationarity_residuals',
    'Conjunction',
    'conjunction',
    'ReducedGeneratingFunction',
    'rational_reduction',
]
