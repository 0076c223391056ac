"""
Spectral checks of the stability operator.
"""

from typing import TYPE_CHECKING, Any, Dict

import numpy as np

from ...spectral import simons_defect, spectrum, verify_eigenfunctions
from ...surfaces import RoundProduct

if TYPE_CHECKING:
    from ..manager import CheckManager

DISCRETIZED = ["curve", "profile"]


def eigenfunction_defect(surface: Any) -> Dict[str, Any]:
    """Largest of the LH = H and L⟨v,n⟩ = ½⟨v,n⟩ defects."""
    out = verify_eigenfunctions(surface)
    translations = max(out["translations"])
    return {
        "value": max(out["H"], translations),
        "detail": f"H {out['H']:.3g}, translations {translations:.3g}",
    }


def mu1_excess(surface: Any) -> Dict[str, Any]:
    """μ₁ + ½; never positive on a shrinker."""
    mu1 = spectrum(surface, count=1).mu1
    return {"value": mu1 + 0.5, "detail": f"mu1 {mu1:.6f}"}


def _curved(surface: Any) -> bool:
    if isinstance(surface, RoundProduct):
        return False
    return bool(np.all(surface.local_geometry().A2 > 0))


def register_checks(manager: 'CheckManager'):
    """Register spectral checks with the manager."""

    manager.register_function(
        name="eigenfunction_identities",
        description="H and the normal translations are eigenfunctions of L",
        handler=eigenfunction_defect,
        tolerance=1e-4,
    )

    manager.register_function(
        name="mu1_bound",
        description="Lowest eigenvalue of L is at most -1/2",
        handler=mu1_excess,
        tolerance=1e-3,
    )

    manager.register_function(
        name="simons_inequality",
        description="L|A| - |A| is non-negative where |A| > 0",
        handler=simons_defect,
        tolerance=1e-3,
        kinds=DISCRETIZED,
        predicate=_curved,
        lower_bound=True,
    )
