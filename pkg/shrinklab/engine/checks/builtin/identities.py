"""
Shrinker equation and weighted integral identities.
"""

from typing import TYPE_CHECKING, Any, Dict

from ...shrinker import identity_suite, residual
from ...surfaces import ProfileSurface
from ...types import Topology
from ..base import BaseCheck

if TYPE_CHECKING:
    from ..manager import CheckManager


def is_torus(surface: Any) -> bool:
    return isinstance(surface, ProfileSurface) and surface.topology is Topology.TORUS


class ResidualCheck(BaseCheck):
    """max |H − ⟨x,n⟩/2| over the nodes."""

    name = "shrinker_residual"
    description = "Pointwise residual of the shrinker equation"
    tolerance = 1e-4

    def measure(self, surface: Any) -> Dict[str, Any]:
        res = residual(surface)
        return {"value": res.max, "detail": f"weighted l2 {res.l2:.3g}"}


class IdentityCheck(BaseCheck):
    """Largest defect of the weighted moment identities."""

    name = "weighted_identities"
    description = "Weighted moment identities of shrinkers"
    tolerance = 1e-6

    def tolerance_for(self, surface: Any) -> float:
        # the computed torus carries its shooting error
        return 1e-4 if is_torus(surface) else self.tolerance

    def measure(self, surface: Any) -> Dict[str, Any]:
        report = identity_suite(surface)
        worst = max(report.defects, key=report.defects.get)
        return {"value": report.max_defect, "detail": f"worst: {worst}"}


def register_checks(manager: 'CheckManager'):
    """Register identity checks with the manager."""
    manager.register_check(ResidualCheck())
    manager.register_check(IdentityCheck())
