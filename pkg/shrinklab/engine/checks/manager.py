"""
Check manager for the verification battery.

Handles check registration, filtering by surface, and execution.
"""

import logging
from typing import Any, Callable, Dict, List, Optional, Sequence

from ..errors import ShrinkLabError
from ..types import CheckResult
from .base import BaseCheck, FunctionCheck

logger = logging.getLogger(__name__)


class CheckManager:
    """Manages check registration and execution.

    Checks are surface-aware and skipped on surfaces they do not apply to.
    """

    def __init__(self):
        """Initialize the check manager."""
        self._checks: Dict[str, BaseCheck] = {}

    def register_check(self, check: BaseCheck):
        """Register a check.

        Args:
            check: Check instance to register
        """
        self._checks[check.name] = check

    def register_function(
        self,
        name: str,
        description: str,
        handler: Callable[[Any], Any],
        tolerance: float = 1e-6,
        kinds: Optional[List[str]] = None,
        predicate: Optional[Callable[[Any], bool]] = None,
        lower_bound: bool = False,
    ):
        """Register a function as a check."""
        self.register_check(FunctionCheck(
            name=name,
            description=description,
            handler=handler,
            tolerance=tolerance,
            kinds=kinds,
            predicate=predicate,
            lower_bound=lower_bound,
        ))

    def get_check(self, name: str) -> Optional[BaseCheck]:
        """Get a specific check by name."""
        return self._checks.get(name)

    def get_available_checks(self, surface: Any = None) -> List[BaseCheck]:
        """Checks in registration order, filtered by applicability when a surface is given."""
        if surface is None:
            return list(self._checks.values())
        return [c for c in self._checks.values() if c.applies_to(surface)]

    def list_checks(self) -> List[Dict[str, Any]]:
        """List registered checks as dictionaries."""
        return [c.get_definition() for c in self._checks.values()]

    def run_check(self, name: str, label: str, surface: Any, tolerance: Optional[float] = None) -> CheckResult:
        """Run one check by name.

        Raises:
            ValueError: If the check is not registered.
        """
        check = self.get_check(name)
        if check is None:
            raise ValueError(f"Check not found: {name}")
        return check.run(label, surface, tolerance)

    def run_suite(
        self,
        surfaces: Dict[str, Any],
        tolerance: Optional[float] = None,
        only: Optional[Sequence[str]] = None,
    ) -> List[CheckResult]:
        """Run every applicable check on every surface.

        Engine errors raised by a check are recorded as failures with the
        error message as detail, so one broken invariant does not hide the
        others.

        Args:
            surfaces: Label to surface mapping, in report order.
            tolerance: Override for every check's default tolerance.
            only: Restrict to these check names.
        """
        results = []
        for label, surface in surfaces.items():
            for check in self.get_available_checks(surface):
                if only and check.name not in only:
                    continue
                try:
                    result = check.run(label, surface, tolerance)
                except (ShrinkLabError, ValueError) as exc:
                    tol = check.tolerance_for(surface) if tolerance is None else tolerance
                    result = CheckResult(check=check.name, surface=label, passed=False,
                                         value=float("nan"), tolerance=tol, detail=f"error: {exc}")
                logger.info("%s on %s: %s (%.3g, tol %.0e)", check.name, label,
                            "pass" if result.passed else "FAIL", result.value, result.tolerance)
                results.append(result)
        return results

    def clear(self):
        """Remove all registered checks."""
        self._checks.clear()
