"""Unit tests for shrinklab.engine.shrinker."""
import math

import numpy as np
import pytest

from shrinklab.engine.errors import NotAShrinkerError, ShootingError
from shrinklab.engine.functionals import entropy, f_functional
from shrinklab.engine.geometry import hausdorff_distance
from shrinklab.engine.shrinker import (
    golden_record,
    identity_suite,
    minimal_cone_check,
    require_shrinker,
    residual,
    self_shrinking_flow_consistency,
    shoot_sphere_profile,
    shrinker_curve_ode,
    shrinker_curve_sweep,
    solve_angenent_torus,
)
from shrinklab.engine.surfaces import RoundProduct, library
from shrinklab.engine.types import Topology


class TestResidual:
    """Tests for the shrinker residual H − ⟨x,n⟩/2."""

    def test_model_shrinkers_vanish(self):
        """Test that circle, sphere, cylinder and line have zero residual."""
        for surface in (library.circle(), library.sphere(), library.cylinder(), library.line()):
            res = residual(surface)
            assert res.max < 1e-8
            assert res.accepted()

    def test_wrong_radius_is_rejected(self):
        """Test that a circle of the wrong radius fails the gate."""
        res = residual(library.circle(radius=1.0))
        assert res.max == pytest.approx(0.5, abs=1e-10)
        with pytest.raises(NotAShrinkerError) as excinfo:
            require_shrinker(library.circle(radius=1.0))
        assert excinfo.value.residual_max == pytest.approx(0.5, abs=1e-10)

    def test_ellipse_is_not_a_shrinker(self):
        """Test that require_shrinker raises on an ellipse."""
        with pytest.raises(NotAShrinkerError, match="not a self-shrinker"):
            require_shrinker(library.ellipse())

    def test_round_products(self):
        """Test the closed-form residual of round products."""
        assert residual(RoundProduct(4, 2)).max == pytest.approx(0.0, abs=1e-12)
        assert residual(RoundProduct(3, 1, radius=1.0)).max == pytest.approx(0.5)


class TestCurveShooting:
    """Tests for the shrinking-curve ODE."""

    def test_circle_orbit_closes(self):
        """Test that H0 = 1/√2 integrates to the circle of radius √2."""
        result = shrinker_curve_ode(1.0 / math.sqrt(2.0))
        assert result.classification == "closed"
        assert result.closure_defect < 1e-8
        assert result.parameters["turning_number"] == 1
        assert result.parameters["immersed"] is False
        assert result.parameters["length"] == pytest.approx(2.0 * math.pi * math.sqrt(2.0), rel=1e-6)
        assert result.conserved_drift < 1e-8
        assert result.residual_max < 1e-5
        np.testing.assert_allclose(np.linalg.norm(result.surface.nodes, axis=1), math.sqrt(2.0), atol=1e-6)

    def test_zero_curvature_rejected(self):
        """Test that H0 = 0 is refused as the straight-line branch."""
        with pytest.raises(ValueError, match="straight line"):
            shrinker_curve_ode(0.0)

    def test_unreachable_start_rejected(self):
        """Test that a start point too close to the origin is refused."""
        with pytest.raises(ValueError, match="no tangent direction"):
            shrinker_curve_ode(1.0, position=(0.5, 0.0))

    def test_sweep_classifies_every_orbit(self):
        """Test that a sweep labels orbits and bounded ones respect the level bound."""
        results = shrinker_curve_sweep([0.5, 1.0 / math.sqrt(2.0), 1.0], max_length=20.0)
        assert [r.parameters["H0"] for r in results] == pytest.approx([0.5, 1.0 / math.sqrt(2.0), 1.0])
        assert results[1].classification == "closed"
        for result in results:
            assert result.classification in ("closed", "bounded")
            if result.classification == "bounded":
                assert result.surface is None
                assert result.parameters["max_radius_sq"] <= result.parameters["level_bound"] + 1e-6
                assert result.conserved_drift < 1e-6


class TestProfileShooting:
    """Tests for rotationally symmetric profile shooting."""

    def test_sphere_from_pole(self):
        """Test that shooting from the pole (0, −2) returns to (0, 2)."""
        result = shoot_sphere_profile()
        assert result.classification == "sphere"
        assert result.parameters["north_pole"] == pytest.approx(2.0, abs=1e-2)
        assert result.surface.topology is Topology.SPHERE
        assert result.residual_max < 1e-2

    def test_pole_must_lie_below_origin(self):
        """Test that z0 >= 0 raises ValueError."""
        with pytest.raises(ValueError, match="south pole"):
            shoot_sphere_profile(z0=0.5)

    def test_unknown_torus_start(self):
        """Test that the torus solver rejects an unknown start."""
        with pytest.raises(ValueError, match="start must be"):
            solve_angenent_torus(start="middle")

    def test_invalid_torus_window(self):
        """Test that the torus solver rejects a degenerate window."""
        with pytest.raises(ValueError, match="invalid shooting window"):
            solve_angenent_torus(window=(3.0, 2.0))


@pytest.mark.slow
class TestShrinkingTorus:
    """Tests for the solved shrinking torus."""

    def test_profile_is_a_closed_loop_off_the_axis(self, torus_solution):
        """Test the closure, position and residual of the torus profile."""
        assert torus_solution.classification == "torus"
        assert torus_solution.closure_defect < 1e-6
        assert torus_solution.parameters["min_r"] > 0.0
        assert torus_solution.parameters["n_nodes"] == 4096
        assert torus_solution.residual_max < 1e-5
        assert residual(torus_solution.surface).max < 1e-5
        assert torus_solution.surface.topology is Topology.TORUS

    def test_inner_start_finds_the_same_profile(self, torus):
        """Test that shooting from the innermost point reproduces the profile."""
        inner = solve_angenent_torus(start="inner", tol=1e-10)
        assert hausdorff_distance(torus.nodes, inner.surface.nodes) < 1e-5

    def test_coarse_profile_misses_the_residual_target(self):
        """Test that a profile too coarse for the residual target is refused."""
        with pytest.raises(ShootingError, match="residual"):
            solve_angenent_torus(tol=1e-10, n_nodes=256)

    def test_entropy_is_attained_at_the_origin(self, torus):
        """Test that the torus entropy lies near 1.85 and equals F_{0,1}."""
        lam = entropy(torus).lam
        assert 1.8 < lam < 1.9
        assert f_functional(torus, (0.0, 0.0, 0.0), 1.0).value == pytest.approx(lam, rel=1e-3)

    def test_identities_hold(self, torus):
        """Test the weighted identities on the torus."""
        assert identity_suite(torus, l2_tol=1e-3, max_tol=1e-3).max_defect < 1e-3

    def test_golden_record(self, torus_solution):
        """Test that the golden record carries the profile and its parameters."""
        record = golden_record(torus_solution)
        assert record["kind"] == "angenent_torus"
        assert record["surface"]["type"] == "profile"
        assert record["parameters"]["start"] == "outer"


class TestIdentities:
    """Tests for the weighted integral identities."""

    def test_circle(self):
        """Test that every identity holds on the polygonal circle."""
        report = identity_suite(library.circle())
        assert set(report.defects) == {
            "volume", "first_moment", "third_moment", "fourth_moment", "tangential_mass", "h_square",
        }
        assert report.max_defect < 1e-9

    def test_sphere(self):
        """Test that the sphere profile meets the identities to round-off."""
        report = identity_suite(library.sphere())
        assert report.max_defect < 1e-10
        assert report.weighted_area == pytest.approx(16.0 * math.pi * math.exp(-1.0), rel=1e-10)

    def test_defects_shrink_under_refinement(self):
        """Test that doubling the node count at least halves every defect above round-off."""
        factories = (
            lambda n: library.circle(n_nodes=n),
            lambda n: library.sphere(n_nodes=n + 1),
            lambda n: library.cylinder(n_nodes=n + 1),
            lambda n: library.line(n_nodes=n + 1),
        )
        for make in factories:
            coarse = identity_suite(make(64)).defects
            fine = identity_suite(make(128)).defects
            for name, value in fine.items():
                assert value <= max(0.5 * coarse[name], 1e-12), name

    def test_round_product(self):
        """Test the closed-form identities of a cylinder model."""
        report = identity_suite(RoundProduct(3, 1))
        assert report.max_defect < 1e-12
        assert report.weighted_area == 1.0

    def test_requires_shrinker(self):
        """Test that the identities refuse a non-shrinker."""
        with pytest.raises(NotAShrinkerError):
            identity_suite(library.ellipse())


class TestSelfSimilarFlow:
    """Tests for flowing a shrinker and comparing with its dilations."""

    def test_circle_shrinks_self_similarly(self):
        """Test that the flowed circle matches √(−t)·Σ."""
        report = self_shrinking_flow_consistency(library.circle(n_nodes=128))
        assert report.passed
        assert report.hausdorff < 1e-3

    def test_end_time_must_precede_extinction(self):
        """Test that t_end outside (−1, 0) is refused."""
        with pytest.raises(ValueError, match="t_end"):
            self_shrinking_flow_consistency(library.circle(), t_end=0.5)


class TestMinimalCone:
    """Tests for the H ≡ 0 classification."""

    def test_line_is_a_hyperplane(self):
        """Test that the line through the origin is classified as a hyperplane."""
        report = minimal_cone_check(library.line())
        assert report.is_cone
        assert report.through_origin
        assert report.hyperplane_expected

    def test_hyperplane_product(self):
        """Test that the k = 0 product is a hyperplane."""
        assert minimal_cone_check(RoundProduct(3, 0)).hyperplane_expected

    def test_curved_shrinkers_rejected(self):
        """Test that shrinkers with H ≠ 0 are refused."""
        with pytest.raises(NotAShrinkerError):
            minimal_cone_check(library.circle())
        with pytest.raises(NotAShrinkerError):
            minimal_cone_check(RoundProduct(3, 2))
