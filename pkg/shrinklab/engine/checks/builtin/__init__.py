"""
Built-in checks for the verification battery.

These checks are registered automatically by the verify command.
"""

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ..manager import CheckManager


def register_all_builtin_checks(manager: 'CheckManager'):
    """Register all built-in checks with the manager.

    Args:
        manager: CheckManager instance
    """
    from . import flows, identities, spectra

    identities.register_checks(manager)
    spectra.register_checks(manager)
    flows.register_checks(manager)
