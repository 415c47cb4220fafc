# twistmin/cli/__init__.py
from .config import COMMANDS, FORMATS, ExperimentConfig, build_config, load_config_file
from .runner import CommandOutput, iterate_map, run, main

__all__ = [
    'COMMANDS',
    'FORMATS',
    'ExperimentConfig',
    'build_config',
    'load_config_file',
    'CommandOutput',
    'iterate_map',
    'run',
    'main',
]
