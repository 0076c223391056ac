"""
shrinklab - numerical laboratory for self-shrinkers.

Entropy and the Gaussian area functional, the stability operator of a
shrinker, and mean curvature flow with tangent-flow extraction, driven from
a deterministic command line.
"""

from .config import (
    BUILTIN_DEFAULTS,
    RunConfig,
    load_config,
    validate_config,
)
from .commands import (
    cmd_config,
    cmd_entropy,
    cmd_flow,
    cmd_generic,
    cmd_solve,
    cmd_spectrum,
    cmd_verify,
)
from .utils import console, setup_logging

__all__ = [
    # Config
    "BUILTIN_DEFAULTS",
    "RunConfig",
    "load_config",
    "validate_config",
    # Commands
    "cmd_verify",
    "cmd_flow",
    "cmd_spectrum",
    "cmd_entropy",
    "cmd_solve",
    "cmd_generic",
    "cmd_config",
    # Utils
    "console",
    "setup_logging",
]

__version__ = "0.1.0"
