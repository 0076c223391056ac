"""Tests for the shrinklab package."""
