# cli/config.py
import json
import logging
from dataclasses import asdict, dataclass, field

from ..exceptions import InvalidParameterError
from ..genfn.frenkel_kontorova import model_from_spec
from ..minimize.options import THREADS, TOL_GRAD, MinimizeOptions

logger = logging.getLogger(__name__)

FORMAT_JSON = "json"
FORMAT_CSV = "csv"
FORMATS = (FORMAT_JSON, FORMAT_CSV)

MAX_MAP_STEPS = 1_000_000

# Command name -> {parameter: (default, type)}; a default of None marks an optional parameter.
COMMAND_PARAMS = {
    "check-h": {
        "strip": ([-0.5, 1.5], list),
        "grid_n": (21, int),
    },
    "periodic": {
        "q": (None, int),
        "p": (None, int),
        "grid_n": (4096, int),
    },
    "map-iterate": {
        "x": (0.0, float),
        "y": (0.0, float),
        "steps": (100, int),
    },
    "heteroclinic": {
        "half_window": (100, int),
        "cauchy": (False, bool),
        "epsilon": (None, float),
    },
    "gap": {
        "fiber_samples": (64, int),
        "half_window": (30, int),
    },
    "phi": {
        "delta": (0.25, float),
        "n_max": (6, int),
    },
    "transition": {
        "epsilon": (0.05, float),
        "n_blocks": (3, int),
        "pattern": ("alternating", object),
        "max_plateau_spacing": (None, int),
        "clamp_plateau_spacing": (False, bool),
        "fiber_samples": (64, int),
        "half_window": (30, int),
        "margin": (None, int),
        "schedule": (None, dict),
    },
    "rational": {
        "q": (2, int),
        "p": (1, int),
        "n_sites": (5, int),
    },
    "distinctness": {
        "epsilon": (0.05, float),
        "n_blocks": (7, int),
        "pattern": ("alternating", object),
        "max_plateau_spacing": (None, int),
        "clamp_plateau_spacing": (False, bool),
        "fiber_samples": (64, int),
        "half_window": (30, int),
        "sequences": ([[0, 1, 2, 3, 4, 5], [0, 1, 2, 4, 5, 6], [0, 1, 2, 5, 6, 7]], list),
    },
}
COMMANDS = tuple(COMMAND_PARAMS)


def _coerce(command: str, name: str, value, kind):
    if value is None:
        return None
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError("expected true or false")
            return value
        if kind is int:
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError("expected an integer")
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise TypeError("expected a number")
            return float(value)
        if kind in (list, dict) and not isinstance(value, kind):
            raise TypeError(f"expected a JSON {'array' if kind is list else 'object'}")
    except (TypeError, ValueError) as e:
        raise InvalidParameterError(f"{command}: parameter {name!r} is invalid: {e}") from e
    return value


@dataclass
class ExperimentConfig:
    """
    One CLI invocation: a command, its model and parameters, and where results go.

    Attributes:
        command (str): One of COMMANDS
        model (dict): Model spec accepted by model_from_spec
        params (dict): Command parameters, completed with defaults by ``validate``
        output (str): Result artifact path
        format (str): "json" or "csv"
        threads (int): Worker threads, 0 for the executor default
        tol (float): Gradient tolerance of every solver
        seed (int): Multistart shuffling seed
    """
    command: str
    model: dict
    params: dict = field(default_factory=dict)
    output: str = "twistmin_result.json"
    format: str = FORMAT_JSON
    threads: int = THREADS
    tol: float = TOL_GRAD
    seed: int = 0

    def validate(self) -> "ExperimentConfig":
        """Check every field and fill in parameter defaults; nothing is computed here."""
        if self.command not in COMMAND_PARAMS:
            raise InvalidParameterError(f"Unknown command {self.command!r}, expected one of {COMMANDS}")
        if self.format not in FORMATS:
            raise InvalidParameterError(f"Unknown format {self.format!r}, expected one of {FORMATS}")
        if not self.output:
            raise InvalidParameterError("An output path is required")
        if not isinstance(self.params, dict):
            raise InvalidParameterError("params must be a JSON object")
        model_from_spec(self.model)
        self.threads = _coerce("config", "threads", self.threads, int)
        self.tol = _coerce("config", "tol", self.tol, float)
        self.seed = _coerce("config", "seed", self.seed, int)
        self.options()

        schema = COMMAND_PARAMS[self.command]
        unknown = sorted(set(self.params) - set(schema))
        if unknown:
            raise InvalidParameterError(f"{self.command}: unknown parameter(s) {unknown}")
        params = {}
        for name, (default, kind) in schema.items():
            params[name] = _coerce(self.command, name, self.params.get(name, default), kind)
        self.params = params
        self._validate_command()
        return self

    def _validate_command(self) -> None:
        params = self.params
        if self.command == "map-iterate" and not 1 <= params["steps"] <= MAX_MAP_STEPS:
            raise InvalidParameterError(f"steps must lie in [1, {MAX_MAP_STEPS}], got {params['steps']}")
        if self.command == "periodic" and (params["q"] is None) != (params["p"] is None):
            raise InvalidParameterError("periodic needs both q and p, or neither")
        if self.command in ("periodic", "rational") and params["q"] is not None and params["q"] < 1:
            raise InvalidParameterError(f"q must be at least 1, got {params['q']}")
        if self.command == "rational" and params["n_sites"] < 2:
            raise InvalidParameterError(f"n_sites must be at least 2, got {params['n_sites']}")
        if self.command == "check-h" and len(params["strip"]) != 2:
            raise InvalidParameterError(f"strip must be [lo, hi], got {params['strip']}")
        if self.command == "distinctness" and not params["sequences"]:
            raise InvalidParameterError("distinctness needs at least one index sequence")

    def options(self) -> MinimizeOptions:
        return MinimizeOptions(tol_grad=self.tol, threads=self.threads, seed=self.seed)

    def to_dict(self) -> dict:
        return asdict(self)


def load_config_file(path: str) -> dict:
    """Read a JSON experiment file of the form {"command", "model", "params"}."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as e:
        raise InvalidParameterError(f"Cannot read config {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise InvalidParameterError(f"Malformed JSON in {path}: {e}") from e
    if not isinstance(raw, dict):
        raise InvalidParameterError(f"Config {path} must hold a JSON object")
    return raw


def build_config(raw: dict, output: str = None, format: str = None, threads: int = None,
                 tol: float = None, seed: int = None) -> ExperimentConfig:
    """
    Merge a loaded experiment file with command-line overrides and validate the result.

    Raises:
        InvalidParameterError: If a field is missing or invalid
    """
    if "command" not in raw or "model" not in raw:
        raise InvalidParameterError("Config needs both 'command' and 'model'")
    unknown = sorted(set(raw) - {"command", "model", "params", "output", "format", "threads", "tol", "seed"})
    if unknown:
        raise InvalidParameterError(f"Unknown config field(s) {unknown}")

    config = ExperimentConfig(command=raw["command"], model=raw["model"], params=raw.get("params", {}))
    overrides = {
        "output": output if output is not None else raw.get("output"),
        "format": format if format is not None else raw.get("format"),
        "threads": threads if threads is not None else raw.get("threads"),
        "tol": tol if tol is not None else raw.get("tol"),
        "seed": seed if seed is not None else raw.get("seed"),
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(config, name, value)
    if overrides["format"] is None and str(config.output).endswith(".csv"):
        config.format = FORMAT_CSV
    return config.validate()
