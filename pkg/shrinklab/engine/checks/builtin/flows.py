"""
Flow checks: self-similar shrinking and constancy of the Gaussian density.
"""

from typing import TYPE_CHECKING, Any, Dict

from ...flow import FlowConfig, monotonicity_audit, run_flow
from ...shrinker import self_shrinking_flow_consistency

if TYPE_CHECKING:
    from ..manager import CheckManager

DISCRETIZED = ["curve", "profile"]


def self_similar_defect(surface: Any) -> Dict[str, Any]:
    """Distance between the evolved shrinker and √(−t)·Σ at t = −0.8."""
    report = self_shrinking_flow_consistency(surface)
    return {
        "value": max(report.hausdorff, report.slice_residual / 10.0),
        "detail": f"hausdorff {report.hausdorff:.3g}, slice residual {report.slice_residual:.3g}",
    }


def density_spread(surface: Any) -> Dict[str, Any]:
    """Spread of ∫Φ about the space-time origin along the flow from t = −1."""
    config = FlowConfig(t_start=-1.0, t_end=-0.5, adaptive=False, dt_max=1e-3, sample_every=50)
    trace = run_flow(surface, config)
    audit = monotonicity_audit(trace, [((0.0,) * surface.ambient_dim, 0.0)])
    series = audit["series"][0]
    return {
        "value": series.spread(),
        "detail": f"max increase {audit['worst_increase']:.3g}",
    }


def register_checks(manager: 'CheckManager'):
    """Register flow checks with the manager."""

    manager.register_function(
        name="self_similar_flow",
        description="MCF from t = -1 stays the dilated shrinker",
        handler=self_similar_defect,
        tolerance=1e-3,
        kinds=DISCRETIZED,
    )

    manager.register_function(
        name="density_constancy",
        description="Gaussian density about the origin is constant on the self-similar flow",
        handler=density_spread,
        tolerance=1e-4,
        kinds=DISCRETIZED,
    )
