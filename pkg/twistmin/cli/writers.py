# cli/writers.py
import csv
import json
import logging
import math
import platform
from pathlib import Path

import numpy as np
import scipy

from ..utils.utils import format_float

logger = logging.getLogger(__name__)


def to_jsonable(obj):
    """Recursively turn numpy values, enums and tuples into plain JSON values; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(key): to_jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if hasattr(obj, "value") and isinstance(obj.value, str):
        return obj.value
    return obj


def _write_text(path: Path, text: str) -> None:
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise OSError(f"Cannot write {path}: {e.strerror}") from e


def save_json(path, obj: dict) -> None:
    path = Path(path)
    _write_text(path, json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")
    logger.info(f"Wrote {path}")


def save_csv(path, header: list, rows: list) -> None:
    """Write rows with every float at 17 significant digits."""
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as e:
        raise OSError(f"Cannot write {path}: {e.strerror}") from e
    logger.info(f"Wrote {len(rows)} rows to {path}")


def manifest_path(output) -> Path:
    output = Path(output)
    return output.with_name(f"{output.stem}.manifest.json")


def versions() -> dict:
    from .. import __version__

    return {
        "twistmin": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def save_manifest(output, config: dict, status: int, wall_time: float, started: str) -> Path:
    """Run manifest next to the result: input echo, versions, seed, threads and timing."""
    path = manifest_path(output)
    save_json(path, {
        "config": config,
        "versions": versions(),
        "seed": config.get("seed"),
        "threads": config.get("threads"),
        "status": status,
        "started": started,
        "wall_time_seconds": wall_time,
    })
    return path
