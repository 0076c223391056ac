"""
Exception hierarchy for the shrinklab engine.

The CLI maps these onto exit codes; everything raised by the engine derives
from ShrinkLabError.
"""

from typing import Any, Optional


class ShrinkLabError(Exception):
    """Base class for all engine errors."""


class GeometryError(ShrinkLabError, ValueError):
    """A surface violates its invariants or an operation would break them.

    Attributes:
        node: Index of the offending node, when one can be named.
    """

    def __init__(self, message: str, node: Optional[int] = None):
        if node is not None:
            message = f"{message} (node {node})"
        super().__init__(message)
        self.node = node


class NotAShrinkerError(ShrinkLabError, ValueError):
    """An operation that requires a verified shrinker received something else."""

    def __init__(self, message: str, residual_max: Optional[float] = None):
        super().__init__(message)
        self.residual_max = residual_max


class ShootingError(ShrinkLabError):
    """Shooting or ODE integration for a shrinker profile failed."""


class ConvergenceError(ShrinkLabError):
    """An iterative solver did not converge."""


class StepRejected(ShrinkLabError):
    """A flow step was rejected; the caller must retry with a smaller step.

    Attributes:
        dt: The rejected step size.
    """

    def __init__(self, message: str, dt: float):
        super().__init__(message)
        self.dt = dt


class FlowError(ShrinkLabError):
    """A flow run failed. Carries the trace accumulated before the failure."""

    def __init__(self, message: str, trace: Any = None):
        super().__init__(message)
        self.trace = trace


class GoldenFileMissing(ShrinkLabError):
    """A golden data file needed by a command has not been produced yet."""
