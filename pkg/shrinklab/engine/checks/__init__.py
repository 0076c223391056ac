"""Verification checks for the shrinker library."""

from .base import BaseCheck, FunctionCheck
from .manager import CheckManager

__all__ = ["BaseCheck", "FunctionCheck", "CheckManager"]
