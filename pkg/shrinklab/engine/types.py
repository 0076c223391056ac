"""
Shared types and data classes for the shrinklab engine.

These types are used across all engine modules and the CLI and have no UI
dependencies. Every report type has a ``to_dict`` producing JSON-compatible
data so reports are byte-stable for a fixed configuration.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


def _floats(values: Any) -> Any:
    """Convert numpy data to plain Python lists/floats for JSON output."""
    if isinstance(values, np.ndarray):
        return values.tolist()
    if isinstance(values, (np.floating, np.integer)):
        return values.item()
    if isinstance(values, (list, tuple)):
        return [_floats(v) for v in values]
    if isinstance(values, dict):
        return {k: _floats(v) for k, v in values.items()}
    return values


class Topology(Enum):
    """Topology of a rotationally symmetric profile."""
    SPHERE = "sphere-like"
    TORUS = "torus-like"
    CYLINDER = "cylinder-like"


class Verdict(Enum):
    """Outcome of a stability test."""
    STABLE = "stable"
    UNSTABLE = "unstable"
    INCONCLUSIVE = "inconclusive"


class TangentClass(Enum):
    """Model shrinker matched by a tangent-flow candidate."""
    SPHERE = "sphere"
    CYLINDER = "cylinder"
    CIRCLE = "circle"
    LINE = "line"
    OTHER = "other"
    UNRESOLVED = "unresolved"


class Termination(Enum):
    """Why a flow leg stopped."""
    EXTINCTION = "extinction"
    SINGULARITY = "singularity"
    TIME_BUDGET = "time_budget"
    STEP_BUDGET = "step_budget"
    NEAR_SHRINKER = "near_shrinker"


@dataclass(eq=False)
class LocalGeometry:
    """Per-node geometry of a discretized hypersurface.

    Positions and normals are ambient vectors; for profile surfaces they are
    taken in the meridian half-plane y = 0, which carries all rotation
    invariant quantities.
    """
    positions: np.ndarray
    normals: np.ndarray
    H: np.ndarray
    A2: np.ndarray
    measure: np.ndarray
    tangents: np.ndarray
    principal: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.H)

    @property
    def support(self) -> np.ndarray:
        """⟨x, n⟩ per node."""
        return np.einsum("ij,ij->i", self.positions, self.normals)

    @property
    def radius_sq(self) -> np.ndarray:
        """|x|² per node."""
        return np.einsum("ij,ij->i", self.positions, self.positions)


@dataclass(frozen=True)
class RoundProductGeometry:
    """Exact constants of a round product S^k x R^(n-k)."""
    H: float
    A2: float
    density: float

    def to_dict(self) -> Dict[str, float]:
        return {"H": self.H, "A2": self.A2, "density": self.density}


@dataclass
class FEvaluation:
    """One evaluation of the Gaussian area F_{x0,t0}."""
    value: float
    x0: Tuple[float, ...]
    t0: float
    truncation_radius: float
    tail_bound: float
    n_nodes: int = 0

    @property
    def accepted(self) -> bool:
        """True when the truncation bound is negligible against the value.

        Rejected evaluations keep their value but carry ``accepted: false``
        into every report they are written to.
        """
        return self.tail_bound <= 1e-8 * max(self.value, 1e-300)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "x0": list(self.x0),
            "t0": self.t0,
            "truncation_radius": self.truncation_radius,
            "tail_bound": self.tail_bound,
            "accepted": self.accepted,
            "n_nodes": self.n_nodes,
        }


@dataclass
class EntropyResult:
    """Result of the entropy maximization over centres and scales."""
    lam: float
    x0: Tuple[float, ...]
    t0: float
    optimizer_trace: List[Tuple[Tuple[float, ...], float, float]] = field(default_factory=list)
    multistart_count: int = 0
    converged: bool = True
    gradient_norm: float = 0.0

    @property
    def argmax(self) -> Tuple[Tuple[float, ...], float]:
        return self.x0, self.t0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "argmax": {"x0": list(self.x0), "t0": self.t0},
            "multistart_count": self.multistart_count,
            "converged": self.converged,
            "gradient_norm": self.gradient_norm,
            "optimizer_trace": [
                {"x0": list(x), "t0": t, "value": v} for x, t, v in self.optimizer_trace
            ],
        }


@dataclass(eq=False)
class MonotoneSeries:
    """A sampled quantity expected to be non-increasing in its parameter.

    Attributes:
        params: Sample parameters (times, path parameters), increasing.
        values: Sampled values.
        tolerance: Allowed increase per step.
        label: Description of the probe.
    """
    params: np.ndarray
    values: np.ndarray
    tolerance: float = 1e-6
    label: str = ""

    @property
    def max_increase(self) -> float:
        if len(self.values) < 2:
            return 0.0
        return float(np.max(np.diff(self.values)))

    @property
    def non_increasing(self) -> bool:
        return self.max_increase <= self.tolerance

    def spread(self) -> float:
        """max - min of the values."""
        return float(np.ptp(self.values)) if len(self.values) else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "params": _floats(self.params),
            "values": _floats(self.values),
            "tolerance": self.tolerance,
            "max_increase": self.max_increase,
            "non_increasing": self.non_increasing,
        }


@dataclass
class VolumeGrowthReport:
    """Worst ratio Vol(B_r(x0) ∩ Σ) / r^n over the sampled balls."""
    passed: bool
    V: float
    worst_ratio: float
    worst_center: Tuple[float, ...]
    worst_radius: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "V": self.V,
            "worst_ratio": self.worst_ratio,
            "worst_center": list(self.worst_center),
            "worst_radius": self.worst_radius,
        }


@dataclass(eq=False)
class ShrinkerResidual:
    """Per-node residual H - ⟨x,n⟩/2 with its norms."""
    values: np.ndarray
    max: float
    l2: float

    def accepted(self, l2_tol: float = 1e-5, max_tol: float = 1e-4) -> bool:
        return self.l2 < l2_tol and self.max < max_tol

    def to_dict(self) -> Dict[str, Any]:
        return {"max": self.max, "l2": self.l2, "n_nodes": int(len(self.values))}


@dataclass(eq=False)
class ShootingResult:
    """Outcome of a shooting solve for a shrinker curve or profile."""
    surface: Any
    parameters: Dict[str, Any]
    closure_defect: float
    conserved_drift: Optional[float] = None
    residual_max: Optional[float] = None
    classification: str = ""
    trajectory: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "parameters": _floats(self.parameters),
            "closure_defect": self.closure_defect,
            "conserved_drift": self.conserved_drift,
            "residual_max": self.residual_max,
            "classification": self.classification,
        }
        if self.surface is not None:
            data["surface"] = self.surface.to_dict()
        return data


@dataclass
class SelfSimilarityReport:
    """Comparison of a short MCF run with the self-similar flow √(−t)·Σ."""
    passed: bool
    hausdorff: float
    slice_residual: float
    t_end: float
    tolerance: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "hausdorff": self.hausdorff,
            "slice_residual": self.slice_residual,
            "t_end": self.t_end,
            "tolerance": self.tolerance,
        }


@dataclass
class MinimalConeReport:
    """Verdict on a shrinker with vanishing mean curvature."""
    is_cone: bool
    through_origin: bool
    hyperplane_expected: bool
    max_support: float
    max_A: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "is_cone": self.is_cone,
            "through_origin": self.through_origin,
            "hyperplane_expected": self.hyperplane_expected,
            "max_support": self.max_support,
            "max_A": self.max_A,
        }


@dataclass
class IdentityReport:
    """Weighted integral identity defects, normalized by the weighted area."""
    defects: Dict[str, float]
    weighted_area: float

    @property
    def max_defect(self) -> float:
        return max(self.defects.values()) if self.defects else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"defects": dict(self.defects), "weighted_area": self.weighted_area}


@dataclass(eq=False)
class WeightedOperator:
    """Discretization of L = Δ + |A|² + ½ - ½⟨x,∇·⟩ in divergence form.

    ``L u = -(K u) / w + P u`` where K is the symmetric weighted stiffness
    matrix, w the node weights e^{-|x|²/4}dμ and P = |A|² + ½. The product
    diag(w)·L is symmetric by construction.

    Attributes:
        stiffness: Sparse symmetric matrix K.
        weights: Node weights w_i.
        potential: |A|² + ½ per node.
        boundary: "periodic", "open" or "dirichlet".
        index: Surface node index of each operator row.
        radius: Dirichlet ball radius, when restricted.
    """
    stiffness: Any
    weights: np.ndarray
    potential: np.ndarray
    boundary: str
    index: np.ndarray
    radius: Optional[float] = None

    @property
    def size(self) -> int:
        return len(self.weights)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Apply L to a node field."""
        return -(self.stiffness @ u) / self.weights + self.potential * u

    def drift_laplacian(self, u: np.ndarray) -> np.ndarray:
        """Apply the drift Laplacian 𝓛 = L - |A|² - ½."""
        return -(self.stiffness @ u) / self.weights

    def dense(self) -> np.ndarray:
        """Dense matrix of L."""
        K = self.stiffness.toarray()
        return -K / self.weights[:, None] + np.diag(self.potential)

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        """Weighted inner product Σ w u v."""
        return float(np.sum(self.weights * u * v))


@dataclass(eq=False)
class SpectrumReport:
    """Lowest eigenpairs of L under Lu = -μu."""
    eigenvalues: np.ndarray
    eigenfunctions: Optional[np.ndarray]
    weights: Optional[np.ndarray] = None
    analytic: bool = False
    multiplicities: Optional[List[int]] = None

    @property
    def mu1(self) -> float:
        return float(self.eigenvalues[0])

    def to_dict(self, include_functions: bool = False) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "eigenvalues": _floats(self.eigenvalues),
            "analytic": self.analytic,
        }
        if self.multiplicities is not None:
            data["multiplicities"] = list(self.multiplicities)
        if include_functions and self.eigenfunctions is not None:
            data["eigenfunctions"] = _floats(self.eigenfunctions.T)
        return data


@dataclass(eq=False)
class StabilityReport:
    """F-stability and entropy-stability verdicts for a shrinker."""
    mu1: float
    H_eigen_defect: float
    translation_eigen_defects: List[float]
    f_stability: Verdict
    witness: Optional[np.ndarray] = None
    witness_second_variation: Optional[float] = None
    best_h: Optional[float] = None
    best_y: Optional[np.ndarray] = None
    reduced_minimum: Optional[float] = None
    spectral_route: Verdict = Verdict.INCONCLUSIVE
    consistent: bool = True
    tolerance: float = 1e-6
    entropy_stability: str = ""
    classification: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu1": self.mu1,
            "H_eigen_defect": self.H_eigen_defect,
            "translation_eigen_defects": _floats(self.translation_eigen_defects),
            "f_stability": self.f_stability.value,
            "witness_second_variation": self.witness_second_variation,
            "best_h": self.best_h,
            "best_y": _floats(self.best_y),
            "reduced_minimum": self.reduced_minimum,
            "spectral_route": self.spectral_route.value,
            "consistent": self.consistent,
            "tolerance": self.tolerance,
            "entropy_stability": self.entropy_stability,
            "classification": self.classification,
        }


@dataclass(eq=False)
class FlowSample:
    """A (time, surface) sample of a flow with its monitors."""
    time: float
    surface: Any
    monitors: Dict[str, float] = field(default_factory=dict)
    leg: int = 0

    def to_dict(self, include_surface: bool = True) -> Dict[str, Any]:
        data: Dict[str, Any] = {"time": self.time, "leg": self.leg, "monitors": _floats(self.monitors)}
        if include_surface:
            data["surface"] = self.surface.to_dict()
        return data


@dataclass(eq=False)
class JumpRecord:
    """A replacement jump between two legs of a piecewise flow."""
    time: float
    old_surface: Any
    new_surface: Any
    entropy_before: float
    entropy_after: float
    area_dilation: float
    amplitude: float

    @property
    def entropy_drop(self) -> float:
        return self.entropy_before - self.entropy_after

    def to_dict(self) -> Dict[str, Any]:
        return {
            "time": self.time,
            "entropy_before": self.entropy_before,
            "entropy_after": self.entropy_after,
            "entropy_drop": self.entropy_drop,
            "area_dilation": self.area_dilation,
            "amplitude": self.amplitude,
            "old_surface": self.old_surface.to_dict(),
            "new_surface": self.new_surface.to_dict(),
        }


@dataclass(eq=False)
class FlowTrace:
    """Time-indexed sequence of surfaces with monitors and jump records."""
    samples: List[FlowSample] = field(default_factory=list)
    jumps: List[JumpRecord] = field(default_factory=list)
    termination: Optional[Termination] = None
    verdict: str = ""
    notes: List[str] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.samples])

    @property
    def final(self) -> FlowSample:
        return self.samples[-1]

    def monitor(self, name: str) -> np.ndarray:
        """Series of a monitor; NaN where it was not sampled."""
        return np.array([s.monitors.get(name, np.nan) for s in self.samples], dtype=float)

    def leg(self, index: int) -> List[FlowSample]:
        return [s for s in self.samples if s.leg == index]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "termination": self.termination.value if self.termination else None,
            "verdict": self.verdict,
            "notes": list(self.notes),
            "n_samples": len(self.samples),
            "jumps": [j.to_dict() for j in self.jumps],
        }


@dataclass(eq=False)
class TangentCandidate:
    """Parabolic rescalings of a flow near a singular point and their fit."""
    classification: TangentClass
    singular_point: np.ndarray
    singular_time: float
    scales: List[float] = field(default_factory=list)
    rescaled: List[Any] = field(default_factory=list)
    distances: Dict[str, float] = field(default_factory=dict)
    per_scale: List[str] = field(default_factory=list)
    diameter_ratios: List[float] = field(default_factory=list)
    disagreement: bool = False
    residual: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "classification": self.classification.value,
            "singular_point": _floats(self.singular_point),
            "singular_time": self.singular_time,
            "scales": _floats(self.scales),
            "distances": _floats(self.distances),
            "per_scale": list(self.per_scale),
            "diameter_ratios": _floats(self.diameter_ratios),
            "disagreement": self.disagreement,
            "residual": self.residual,
        }


@dataclass
class CheckResult:
    """Outcome of one verification check on one surface."""
    check: str
    surface: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "check": self.check,
            "surface": self.surface,
            "passed": self.passed,
            "value": _floats(self.value),
            "tolerance": self.tolerance,
            "detail": self.detail,
        }
