"""Shared fixtures for the shrinklab test suite."""
import pytest

from shrinklab.engine.reports import write_golden
from shrinklab.engine.shrinker import golden_record, solve_angenent_torus


@pytest.fixture(scope="session")
def torus_solution():
    """One shooting solve of the shrinking torus, shared by every slow test."""
    return solve_angenent_torus(tol=1e-10)


@pytest.fixture(scope="session")
def torus(torus_solution):
    """The solved torus profile."""
    return torus_solution.surface


@pytest.fixture
def golden_out(tmp_path, torus_solution):
    """An output directory that already holds the golden torus file."""
    write_golden(tmp_path, golden_record(torus_solution))
    return tmp_path
