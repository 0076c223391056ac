"""
shrinklab engine - numerical core.

Surfaces, the Gaussian area functional and entropy, shrinker solvers, the
stability operator and its spectrum, and curvature flows. No UI
dependencies; results are dataclasses with ``to_dict``.
"""

from .errors import (
    ConvergenceError,
    FlowError,
    GeometryError,
    GoldenFileMissing,
    NotAShrinkerError,
    ShootingError,
    ShrinkLabError,
    StepRejected,
)
from .types import (
    CheckResult,
    EntropyResult,
    FEvaluation,
    FlowSample,
    FlowTrace,
    JumpRecord,
    SpectrumReport,
    StabilityReport,
    TangentCandidate,
    TangentClass,
    Termination,
    Topology,
    Verdict,
)
from .surfaces import (
    DiscreteCurve,
    ProfileSurface,
    RoundProduct,
    create_surface,
    list_registered_surfaces,
    register_surface,
)

__all__ = [
    # Errors
    "ShrinkLabError",
    "GeometryError",
    "NotAShrinkerError",
    "ShootingError",
    "ConvergenceError",
    "StepRejected",
    "FlowError",
    "GoldenFileMissing",
    # Types
    "CheckResult",
    "EntropyResult",
    "FEvaluation",
    "FlowSample",
    "FlowTrace",
    "JumpRecord",
    "SpectrumReport",
    "StabilityReport",
    "TangentCandidate",
    "TangentClass",
    "Termination",
    "Topology",
    "Verdict",
    # Surfaces
    "DiscreteCurve",
    "ProfileSurface",
    "RoundProduct",
    "create_surface",
    "list_registered_surfaces",
    "register_surface",
]
