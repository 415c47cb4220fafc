# twistmin/__init__.py
import os
import logging
import dotenv

from .exceptions.base import TwistminError, InvalidParameterError, PreconditionError

logger = logging.getLogger(__name__)

__version__ = "0.1.0"

# Load environment variables
dotenv.load_dotenv()

EXPECTED_ERRORS = (InvalidParameterError, PreconditionError)


def _filter_expected_errors(event, hint):
    error = None
    if hint:
        exc_info = hint.get("exc_info")
        if exc_info:
            error = exc_info[1]
        else:
            error = hint.get("original_exception")

    if isinstance(error, EXPECTED_ERRORS):
        return None

    exception_values = (event or {}).get("exception", {}).get("values", [])
    for exception_value in exception_values:
        exception_type = exception_value.get("type") or ""
        if exception_type in {cls.__name__ for cls in EXPECTED_ERRORS}:
            return None

    return event


# Initialize Sentry if DSN is configured
sentry_dsn = os.getenv('SENTRY_DSN_TWISTMIN')
if sentry_dsn:
    try:
        import sentry_sdk
        sentry_sdk.init(
            dsn=sentry_dsn,
            environment=os.getenv('ENV', 'prod'),
            traces_sample_rate=1.0,
            before_send=_filter_expected_errors,
        )
        logger.info("Sentry monitoring initialized")
    except ImportError:
        logger.warning("Sentry DSN is configured but sentry-sdk is not installed. "
                       "Install with: pip install twistmin[sentry]")

from .genfn import GeneratingFunction, OrbitPoint, FrenkelKontorovaParams, fk_generating_function, model_from_spec
from .action import Label, NeighboringPair, Configuration, Schedule, compute_I, compute_J
from .minimize import MinimizeOptions, find_neighboring_pair, heteroclinic_constants, detect_gap
from .transition import ScheduleBlueprint, build_schedule, minimize_transition

__all__ = [
    '__version__',
    'TwistminError',
    'GeneratingFunction',
    'OrbitPoint',
    'FrenkelKontorovaParams',
    'fk_generating_function',
    'model_from_spec',
    'Label',
    'NeighboringPair',
    'Configuration',
    'Schedule',
    'compute_I',
    'compute_J',
    'MinimizeOptions',
    'find_neighboring_pair',
    'heteroclinic_constants',
    'detect_gap',
    'ScheduleBlueprint',
    'build_schedule',
    'minimize_transition',
]
