# cli/runner.py
import sys
import time
import logging
import argparse
from dataclasses import dataclass, field
from datetime import datetime, timezone

import dotenv
import numpy as np

from ..action.configuration import Configuration, ConstantTail, Label, Schedule
from ..action.functionals import rotation_number
from ..exceptions import (
    DistinctnessError,
    HypothesisError,
    InvalidParameterError,
    NonConvergenceError,
    PreconditionError,
    TwistminError,
)
from ..genfn import OrbitPoint, check_hypotheses, model_from_spec, orbit, stationarity_residuals
from ..minimize import (
    detect_gap,
    find_neighboring_pair,
    heteroclinic_constants,
    approximate_heteroclinic_window,
    phi_bounds,
    rational_neighboring_pair,
)
from ..transition import (
    ScheduleBlueprint,
    build_schedule,
    increasing_spacing_schedule,
    lift_rational,
    minimize_transition,
    multi_schedule_distinctness,
    pairwise_distinctness,
)
from .config import FORMAT_CSV, ExperimentConfig, build_config, load_config_file
from .writers import save_csv, save_json, save_manifest

logger = logging.getLogger(__name__)

ORBIT_RESIDUAL_TOL = 1e-8
OUTPUT_ERROR_STATUS = 2


@dataclass
class CommandOutput:
    """Result payload of one command, its CSV table, and an error to report after writing."""
    payload: dict
    header: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    error: TwistminError = None


def _capture_exception_for_sentry(error: Exception) -> None:
    try:
        import sentry_sdk
    except ImportError:
        return

    try:
        sentry_sdk.capture_exception(error)
    except Exception:
        return


def iterate_map(h, x: float, y: float, steps: int) -> tuple:
    """
    ``steps`` orbit points from (x, y) and the stationarity residual of their x-sequence.

    Raises:
        BracketError: With the failing step index
        NonConvergenceError: If the x-sequence misses the stationarity equation by more than 1e-8
    """
    points = orbit(h, OrbitPoint(x=x, y=y), steps)
    rows = [(i, p.x, p.y) for i, p in enumerate(points)]
    residuals = stationarity_residuals(h, [p.x for p in points])
    max_residual = float(np.max(residuals)) if residuals.size else 0.0
    if max_residual > ORBIT_RESIDUAL_TOL:
        worst = 1 + int(np.argmax(residuals))
        raise NonConvergenceError(
            f"Orbit x-sequence is not stationary: residual {max_residual:.3e} at step {worst}",
            best_iterate=np.array([p.x for p in points]),
        )
    return rows, max_residual


def _check_h(config: ExperimentConfig, h, opts) -> CommandOutput:
    params = config.params
    report = check_hypotheses(h, strip=tuple(params["strip"]), grid_n=params["grid_n"])
    payload = report.to_dict()
    rows = [(name, entry["status"], entry["worst"]) for name, entry in payload["checks"].items()]
    error = None
    if not report.all_passed:
        error = HypothesisError(f"Hypothesis checks failed: {', '.join(report.failed())}")
    return CommandOutput(payload, ["check", "status", "worst"], rows, error)


def _periodic(config: ExperimentConfig, h, opts) -> CommandOutput:
    params = config.params
    if params["q"] is None:
        pair = find_neighboring_pair(h, opts, grid_n=params["grid_n"])
        rows = [("u0", pair.u0), ("u1", pair.u1)]
        return CommandOutput({"pair": pair.to_dict()}, ["label", "value"], rows)

    q, p = params["q"], params["p"]
    _, pair, lower, upper = rational_neighboring_pair(h, q, p, opts)
    payload = {"q": q, "p": p, "reduced_pair": pair.to_dict(),
               "lower_segment": lower, "upper_segment": upper}
    rows = [(i, lo, hi) for i, (lo, hi) in enumerate(zip(lower, upper))]
    return CommandOutput(payload, ["site", "lower", "upper"], rows)


def _map_iterate(config: ExperimentConfig, h, opts) -> CommandOutput:
    params = config.params
    rows, max_residual = iterate_map(h, params["x"], params["y"], params["steps"])
    payload = {
        "start": {"x": params["x"], "y": params["y"]},
        "steps": params["steps"],
        "stationarity_max_residual": max_residual,
        "orbit": [{"i": i, "x": x, "y": y} for i, x, y in rows],
    }
    return CommandOutput(payload, ["i", "x", "y"], rows)


def _heteroclinic(config: ExperimentConfig, h, opts) -> CommandOutput:
    params = config.params
    pair = find_neighboring_pair(h, opts)
    constants = heteroclinic_constants(h, pair, params["half_window"], opts)
    payload = {"pair": pair.to_dict(), **constants.to_dict()}
    if params["cauchy"]:
        doubled = heteroclinic_constants(h, pair, 2 * params["half_window"], opts)
        payload["cauchy"] = {
            "half_window": 2 * params["half_window"],
            "c0": doubled.c0,
            "c1": doubled.c1,
            "difference": max(abs(doubled.c0 - constants.c0), abs(doubled.c1 - constants.c1)),
        }
    if params["epsilon"] is not None:
        windows = {}
        for direction, result in (("up", constants.up), ("down", constants.down)):
            n, _ = approximate_heteroclinic_window(h, pair, params["epsilon"], opts, direction=direction,
                                                  heteroclinic=result)
            windows[direction] = n
        payload["approximation_windows"] = {"epsilon": params["epsilon"], **windows}

    up, down = constants.up.config, constants.down.config
    rows = [(int(i), u, d) for i, u, d in zip(up.indices, up.values, down.values)]
    return CommandOutput(payload, ["site", "up", "down"], rows)


def _gap_report(config: ExperimentConfig, h, opts):
    params = config.params
    pair = find_neighboring_pair(h, opts)
    constants = heteroclinic_constants(h, pair, params["half_window"], opts)
    gap = detect_gap(h, pair, params["fiber_samples"], params["half_window"], opts, constants)
    return pair, constants, gap


def _gap(config: ExperimentConfig, h, opts) -> CommandOutput:
    pair, _, gap = _gap_report(config, h, opts)
    payload = {"pair": pair.to_dict(), **gap.to_dict()}
    rows = [(s.direction, s.x0, s.constrained_min) for s in gap.fiber_samples]
    return CommandOutput(payload, ["direction", "x0", "constrained_min"], rows)


def _phi(config: ExperimentConfig, h, opts) -> CommandOutput:
    params = config.params
    pair = find_neighboring_pair(h, opts)
    estimate = phi_bounds(h, pair, params["delta"], params["n_max"], opts)
    rows = [(entry["n"], entry["upper"], entry["lower"]) for entry in estimate.per_length]
    return CommandOutput({"pair": pair.to_dict(), **estimate.to_dict()}, ["n", "upper", "lower"], rows)


def _blueprint(params: dict) -> ScheduleBlueprint:
    return ScheduleBlueprint(epsilon=params["epsilon"], n_blocks=params["n_blocks"], pattern=params["pattern"],
                             max_plateau_spacing=params["max_plateau_spacing"],
                             clamp_plateau_spacing=params["clamp_plateau_spacing"])


def _transition(config: ExperimentConfig, h, opts) -> CommandOutput:
    params = config.params
    payload = {}
    if params["schedule"] is not None:
        pair = find_neighboring_pair(h, opts)
        schedule = Schedule.from_dict(params["schedule"])
    else:
        pair, constants, gap = _gap_report(config, h, opts)
        schedule = build_schedule(h, pair, gap, _blueprint(params), opts, constants)
        payload["gap"] = {key: value for key, value in gap.to_dict().items() if key != "fiber_samples"}

    result = minimize_transition(h, pair, schedule, opts, margin=params["margin"])
    payload.update({"pair": pair.to_dict(), **result.to_dict()})
    return CommandOutput(payload, ["site", "value", "constrained", "label"], result.site_rows())


def _rational(config: ExperimentConfig, h, opts) -> CommandOutput:
    params = config.params
    q, p = params["q"], params["p"]
    reduced, pair, _, _ = rational_neighboring_pair(h, q, p, opts)
    y_config = Configuration(0, np.full(params["n_sites"], pair.u0), ConstantTail(Label.U0), ConstantTail(Label.U0))
    lifted = lift_rational(h, q, p, y_config, reduced=reduced)

    window = lifted.values.size - 1
    alpha_plus, alpha_minus = rotation_number(Configuration(lifted.lo, lifted.values), window)
    residuals = stationarity_residuals(h, lifted.values)
    payload = {
        "q": q,
        "p": p,
        "reduced_pair": pair.to_dict(),
        "lifted": lifted.to_dict(),
        "max_residual": float(np.max(residuals)) if residuals.size else 0.0,
        "rotation_estimate": {"window": window, "plus": alpha_plus, "minus": alpha_minus},
    }
    rows = [(int(i), v) for i, v in zip(lifted.indices, lifted.values)]
    return CommandOutput(payload, ["site", "value"], rows)


def _distinctness(config: ExperimentConfig, h, opts) -> CommandOutput:
    params = config.params
    pair, constants, gap = _gap_report(config, h, opts)
    base = increasing_spacing_schedule(build_schedule(h, pair, gap, _blueprint(params), opts, constants))
    error = None
    try:
        results = multi_schedule_distinctness(h, pair, base, params["sequences"], opts)
    except DistinctnessError as e:
        results, error = e.results, e
    entries = pairwise_distinctness(results, pair, 0.5 * min(base.rho))
    payload = {
        "pair": pair.to_dict(),
        "base_schedule": base.to_dict(),
        "sequences": params["sequences"],
        "results": [result.to_dict() for result in results],
        "pairwise": entries,
    }
    rows = [(e["a"], e["b"], e["sup_difference"], e["distinct"]) for e in entries]
    return CommandOutput(payload, ["a", "b", "sup_difference", "distinct"], rows, error)


HANDLERS = {
    "check-h": _check_h,
    "periodic": _periodic,
    "map-iterate": _map_iterate,
    "heteroclinic": _heteroclinic,
    "gap": _gap,
    "phi": _phi,
    "transition": _transition,
    "rational": _rational,
    "distinctness": _distinctness,
}


def _write_result(config: ExperimentConfig, output: CommandOutput) -> None:
    if config.format == FORMAT_CSV:
        save_csv(config.output, output.header, output.rows)
    else:
        save_json(config.output, {"command": config.command, "result": output.payload})


def _error_path(config: ExperimentConfig) -> str:
    return config.output if config.format != FORMAT_CSV else f"{config.output}.error.json"


def _save_error(config: ExperimentConfig, error: dict) -> None:
    path = _error_path(config)
    try:
        save_json(path, {"command": config.command, "error": error})
    except OSError as e:
        logger.error(f"Could not write the error report to {path}: {e}")


def run(config: ExperimentConfig) -> int:
    """
    Dispatch a validated config, write its result and manifest, and return the exit status.

    Domain errors are written as {"error": {"code", "message"}} and mapped to their status.
    An output path that cannot be written returns OUTPUT_ERROR_STATUS without a second write.
    """
    started = datetime.now(timezone.utc).isoformat()
    clock = time.perf_counter()
    status = 0
    try:
        h = model_from_spec(config.model)
        output = HANDLERS[config.command](config, h, config.options())
    except TwistminError as e:
        logger.error(f"{config.command} failed with {e.code}: {e.message}")
        if not isinstance(e, (InvalidParameterError, PreconditionError)):
            _capture_exception_for_sentry(e)
        _save_error(config, e.to_dict())
        status = e.status
    except Exception as e:
        _capture_exception_for_sentry(e)
        logger.exception(f"{config.command} failed unexpectedly")
        _save_error(config, {"code": "INTERNAL", "message": str(e)})
        status = 1
    else:
        if output.error is not None:
            output.payload["error"] = output.error.to_dict()
            status = output.error.status
            logger.error(output.error.message)
        try:
            _write_result(config, output)
        except OSError as e:
            logger.error(f"Could not write the {config.command} result to {config.output}: {e}")
            status = OUTPUT_ERROR_STATUS

    try:
        save_manifest(config.output, config.to_dict(), status, time.perf_counter() - clock, started)
    except OSError as e:
        logger.error(f"Could not write the manifest next to {config.output}: {e}")
    return status


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="twistmin",
        description="Minimal configurations and transition orbits of monotone twist maps",
    )
    parser.add_argument("--config", required=True, help="JSON experiment file {command, model, params}")
    parser.add_argument("--output", help="Result path (overrides the config file)")
    parser.add_argument("--format", choices=["json", "csv"], help="Result format")
    parser.add_argument("--threads", type=int, help="Worker threads, 0 for the default")
    parser.add_argument("--tol", type=float, help="Gradient tolerance of every solver")
    parser.add_argument("--seed", type=int, help="Multistart shuffling seed")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    dotenv.load_dotenv()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    args = parse_args(argv)
    try:
        config = build_config(load_config_file(args.config), output=args.output, format=args.format,
                              threads=args.threads, tol=args.tol, seed=args.seed)
    except TwistminError as e:
        logger.error(f"Invalid experiment {args.config}: {e.message}")
        return e.status

    logger.info(f"Running {config.command} -> {config.output}")
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
