# genfn/frenkel_kontorova.py
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .base import GeneratingFunction, DEFAULT_STRIP
from ..exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

MODEL_FRENKEL_KONTOROVA = "frenkel-kontorova"
MODEL_FK_TABULATED = "fk-tabulated"


@dataclass(frozen=True)
class FrenkelKontorovaParams:
    """
    Parameters of h(x, y) = (C (x - y)^2 + V(x) + V(y)) / 2 with V(x) = lambda (1 - cos 2 pi m x).

    Attributes:
        coupling (float): The spring constant C (must be positive)
        amplitude (float): The potential amplitude lambda (nonnegative)
        harmonic (int): The number m of potential wells per unit period
    """
    coupling: float
    amplitude: float = 0.0
    harmonic: int = 1

    def __post_init__(self):
        if not math.isfinite(self.coupling) or self.coupling <= 0:
            raise InvalidParameterError(f"coupling must be positive, got {self.coupling}")
        if not math.isfinite(self.amplitude) or self.amplitude < 0:
            raise InvalidParameterError(f"amplitude must be nonnegative, got {self.amplitude}")
        if int(self.harmonic) != self.harmonic or self.harmonic < 1:
            raise InvalidParameterError(f"harmonic must be a positive integer, got {self.harmonic}")


class FrenkelKontorovaFunction(GeneratingFunction):
    """Frenkel-Kontorova generating function for an arbitrary 1-periodic potential."""

    symmetric = True

    def __init__(self, coupling: float, potential, d_potential, dd_potential, max_abs_d_potential: float,
                 name: str = MODEL_FRENKEL_KONTOROVA, key: tuple = (), spec: dict = None,
                 strip: tuple = DEFAULT_STRIP) -> None:
        super().__init__(twist_lower_bound=coupling, strip=strip)
        self.coupling = float(coupling)
        self.potential = potential
        self.d_potential = d_potential
        self.dd_potential = dd_potential
        self.max_abs_d_potential = float(max_abs_d_potential)
        self.name = name
        self._key = key
        self._spec = spec or {"model": name, "coupling": self.coupling}

    def eval(self, xi, eta):
        return 0.5 * (self.coupling * (xi - eta) ** 2 + self.potential(xi) + self.potential(eta))

    def d1(self, xi, eta):
        return self.coupling * (xi - eta) + 0.5 * self.d_potential(xi)

    def d2(self, xi, eta):
        return self.coupling * (eta - xi) + 0.5 * self.d_potential(eta)

    def d11(self, xi, eta):
        return self.coupling + 0.5 * self.dd_potential(xi) + 0.0 * eta

    def d22(self, xi, eta):
        return self.coupling + 0.5 * self.dd_potential(eta) + 0.0 * xi

    def d12(self, xi, eta):
        return np.full(np.broadcast(np.asarray(xi), np.asarray(eta)).shape, -self.coupling)

    def lipschitz_on(self, lo: float, hi: float, grid_n: int = 201) -> float:
        return self.coupling * (hi - lo) + 0.5 * self.max_abs_d_potential

    def off_diagonal_floor(self, lo: float, hi: float) -> float:
        # h(x, y) - (h(x, x) + h(y, y)) / 2 = C (x - y)^2 / 2
        return 0.0

    @property
    def cache_key(self) -> tuple:
        return (self.name, self.coupling) + tuple(self._key)

    def to_spec(self) -> dict:
        return dict(self._spec)


def fk_generating_function(params: FrenkelKontorovaParams) -> FrenkelKontorovaFunction:
    """
    Build the Frenkel-Kontorova generating function with the cosine potential.

    Args:
        params (FrenkelKontorovaParams): Coupling, amplitude and harmonic.

    Returns:
        FrenkelKontorovaFunction: h with analytic partials and twist_lower_bound = C.
    """
    lam = float(params.amplitude)
    omega = 2.0 * math.pi * params.harmonic

    def potential(x):
        return lam * (1.0 - np.cos(omega * x))

    def d_potential(x):
        return lam * omega * np.sin(omega * x)

    def dd_potential(x):
        return lam * omega ** 2 * np.cos(omega * x)

    spec = {"model": MODEL_FRENKEL_KONTOROVA, "coupling": params.coupling, "amplitude": lam}
    if params.harmonic != 1:
        spec["harmonic"] = params.harmonic

    return FrenkelKontorovaFunction(
        coupling=params.coupling,
        potential=potential,
        d_potential=d_potential,
        dd_potential=dd_potential,
        max_abs_d_potential=lam * omega,
        key=(lam, params.harmonic),
        spec=spec,
    )


def fk_tabulated_generating_function(coupling: float, samples) -> FrenkelKontorovaFunction:
    """
    Frenkel-Kontorova function whose potential is a periodic cubic spline through
    ``samples`` taken at x = k / len(samples), k = 0..len(samples) - 1.
    """
    if not math.isfinite(coupling) or coupling <= 0:
        raise InvalidParameterError(f"coupling must be positive, got {coupling}")
    values = np.asarray(samples, dtype=float)
    if values.ndim != 1 or values.size < 4:
        raise InvalidParameterError("fk-tabulated needs at least 4 potential samples")
    if not np.all(np.isfinite(values)):
        raise InvalidParameterError("fk-tabulated samples must be finite")

    nodes = np.arange(values.size + 1) / values.size
    spline = CubicSpline(nodes, np.append(values, values[0]), bc_type="periodic")
    first = spline.derivative(1)
    second = spline.derivative(2)

    def potential(x):
        return spline(np.mod(x, 1.0))

    def d_potential(x):
        return first(np.mod(x, 1.0))

    def dd_potential(x):
        return second(np.mod(x, 1.0))

    dense = np.linspace(0.0, 1.0, 4097)
    max_slope = 1.01 * float(np.max(np.abs(first(dense))))

    return FrenkelKontorovaFunction(
        coupling=coupling,
        potential=potential,
        d_potential=d_potential,
        dd_potential=dd_potential,
        max_abs_d_potential=max_slope,
        name=MODEL_FK_TABULATED,
        key=tuple(values.tolist()),
        spec={"model": MODEL_FK_TABULATED, "coupling": coupling, "samples": values.tolist()},
    )


def model_from_spec(spec: dict) -> GeneratingFunction:
    """Build a generating function from its JSON form, e.g. {"model": "frenkel-kontorova", ...}."""
    if not isinstance(spec, dict):
        raise InvalidParameterError("model spec must be a JSON object")
    model = spec.get("model")
    try:
        if model == MODEL_FRENKEL_KONTOROVA:
            params = FrenkelKontorovaParams(
                coupling=float(spec["coupling"]),
                amplitude=float(spec.get("amplitude", 0.0)),
                harmonic=int(spec.get("harmonic", 1)),
            )
            return fk_generating_function(params)
        if model == MODEL_FK_TABULATED:
            return fk_tabulated_generating_function(float(spec["coupling"]), spec["samples"])
    except KeyError as e:
        raise InvalidParameterError(f"model spec for {model!r} is missing {e.args[0]!r}") from e
    except (TypeError, ValueError) as e:
        raise InvalidParameterError(f"invalid model spec for {model!r}: {e}") from e

    raise InvalidParameterError(f"unknown model {model!r}")
