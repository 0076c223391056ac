"""
Base check abstract class.

All verification checks implement this interface.
"""

from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Optional

from ..types import CheckResult


class BaseCheck(ABC):
    """Abstract base class for verification checks.

    A check evaluates one invariant on one surface and compares a scalar
    defect with a tolerance. Checks can be restricted to surface kinds
    (``kinds``) and can opt out of individual surfaces (``applies_to``).
    """

    # Check metadata (override in subclasses)
    name: str = "base_check"
    description: str = "Base check description"
    tolerance: float = 1e-6

    # Surface kinds this check runs on (None = all)
    kinds: Optional[List[str]] = None

    @abstractmethod
    def measure(self, surface: Any) -> Dict[str, Any]:
        """Evaluate the invariant.

        Returns:
            Dict with ``value`` (the defect) and optionally ``detail``.
        """

    def passes(self, value: float, tolerance: float) -> bool:
        """Default rule: the defect does not exceed the tolerance."""
        return value <= tolerance

    def applies_to(self, surface: Any) -> bool:
        """Check whether this check runs on a surface."""
        if self.kinds is None:
            return True
        return getattr(surface, "kind", None) in self.kinds

    def run(self, label: str, surface: Any, tolerance: Optional[float] = None) -> CheckResult:
        """Measure and judge.

        Args:
            label: Surface name used in the report.
            surface: Surface to check.
            tolerance: Override of the check's default tolerance.
        """
        tol = self.tolerance_for(surface) if tolerance is None else tolerance
        outcome = self.measure(surface)
        value = float(outcome["value"])
        return CheckResult(
            check=self.name,
            surface=label,
            passed=bool(self.passes(value, tol)),
            value=value,
            tolerance=tol,
            detail=outcome.get("detail", ""),
        )

    def tolerance_for(self, surface: Any) -> float:
        """Default tolerance on a given surface."""
        return self.tolerance

    def get_definition(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "tolerance": self.tolerance,
            "kinds": self.kinds,
        }


class FunctionCheck(BaseCheck):
    """A check that wraps a function returning the defect.

    Allows creating checks from functions without subclassing.
    """

    def __init__(
        self,
        name: str,
        description: str,
        handler: Callable[[Any], Any],
        tolerance: float = 1e-6,
        kinds: Optional[List[str]] = None,
        predicate: Optional[Callable[[Any], bool]] = None,
        lower_bound: bool = False,
    ):
        """Create a check from a function.

        Args:
            name: Check name.
            description: Check description.
            handler: Function of the surface returning a float or a dict with
                ``value`` and ``detail``.
            tolerance: Default tolerance.
            kinds: Surface kinds the check runs on.
            predicate: Extra applicability test.
            lower_bound: Pass when value >= -tolerance instead of
                value <= tolerance.
        """
        self.name = name
        self.description = description
        self._handler = handler
        self.tolerance = tolerance
        self.kinds = kinds
        self._predicate = predicate
        self._lower_bound = lower_bound

    def measure(self, surface: Any) -> Dict[str, Any]:
        result = self._handler(surface)
        if isinstance(result, dict):
            return result
        return {"value": float(result)}

    def passes(self, value: float, tolerance: float) -> bool:
        if self._lower_bound:
            return value >= -tolerance
        return value <= tolerance

    def applies_to(self, surface: Any) -> bool:
        if not super().applies_to(surface):
            return False
        return self._predicate is None or bool(self._predicate(surface))
