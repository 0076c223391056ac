"""Unit tests for shrinklab.engine.flow."""
import math

import numpy as np
import pytest

from shrinklab.engine.errors import GeometryError, StepRejected
from shrinklab.engine.flow import (
    FlowConfig,
    avoidance_check,
    evolve,
    extract_tangent,
    generic_piecewise_flow,
    mcf_step,
    monotonicity_audit,
    normalize,
    parabolic_distance,
    rescaled_step,
    run_flow,
)
from shrinklab.engine.surfaces import RoundProduct, library
from shrinklab.engine.types import TangentClass, Termination


def _shrinking_circle_trace():
    config = FlowConfig(cfl=1e-3, sample_every=200, area_floor=1e-2)
    return run_flow(library.circle(radius=1.0, n_nodes=64), config)


class TestFlowConfig:
    """Tests for flow settings."""

    def test_defaults_are_valid(self):
        """Test that the default settings validate cleanly."""
        assert FlowConfig().validate() == []

    def test_validation_errors(self):
        """Test that bad settings are reported together."""
        errors = FlowConfig(kind="bogus", cfl=0.0, max_jumps=-1, jump_nodes=0, t_start=1.0, t_end=0.5).validate()
        assert any("flow.kind" in e for e in errors)
        assert any("flow.cfl" in e for e in errors)
        assert any("flow.max_jumps" in e for e in errors)
        assert any("flow.jump_nodes" in e for e in errors)
        assert any("flow.t_end" in e for e in errors)

    def test_from_mapping(self):
        """Test building settings from a flat mapping with probes."""
        config = FlowConfig.from_mapping({
            "kind": "rescaled",
            "probes": [{"x0": [0.0, 0.0], "t0": 1.0}],
            "unknown": 3,
        })
        assert config.kind == "rescaled"
        assert config.probes == [((0.0, 0.0), 1.0)]
        assert config.to_dict()["probes"] == [{"x0": [0.0, 0.0], "t0": 1.0}]


class TestSteps:
    """Tests for single flow steps."""

    def test_polygon_moves_radially(self):
        """Test that one step maps a regular polygon to R/(1 + dt/R²)."""
        moved = mcf_step(library.circle(radius=1.0, n_nodes=64), 1e-3)
        np.testing.assert_allclose(np.linalg.norm(moved.nodes, axis=1), 1.0 / 1.001, atol=1e-12)

    def test_line_is_stationary(self):
        """Test that a straight line does not move under MCF."""
        line = library.line(n_nodes=65)
        moved = mcf_step(line, 1e-2)
        np.testing.assert_allclose(moved.nodes, line.nodes, atol=1e-12)

    def test_rescaled_fixed_points(self):
        """Test that the shrinking circle and cylinder are fixed by the rescaled flow."""
        circle = library.circle()
        cylinder = library.cylinder(n_nodes=65)
        for _ in range(5):
            circle = rescaled_step(circle, 1e-2)
            cylinder = rescaled_step(cylinder, 1e-2)
        np.testing.assert_allclose(np.linalg.norm(circle.nodes, axis=1), math.sqrt(2.0), atol=1e-12)
        np.testing.assert_allclose(cylinder.nodes[:, 0], math.sqrt(2.0), atol=1e-12)

    def test_rescaled_line_stays_flat(self):
        """Test that the rescaled line stays on y = 0."""
        line = library.line(n_nodes=65)
        for _ in range(5):
            line = rescaled_step(line, 1e-2)
        np.testing.assert_allclose(line.nodes[:, 1], 0.0, atol=1e-14)

    def test_rescaled_sphere_stays_round(self):
        """Test that the sphere of radius 2 is nearly fixed by the rescaled flow."""
        sphere = library.sphere(n_nodes=129)
        for _ in range(10):
            sphere = rescaled_step(sphere, 1e-2)
        np.testing.assert_allclose(np.hypot(sphere.nodes[:, 0], sphere.nodes[:, 1]), 2.0, atol=5e-3)

    def test_oversized_step_rejected(self):
        """Test that a step that collapses a small circle is rejected."""
        with pytest.raises(StepRejected, match="exceeds"):
            mcf_step(library.circle(radius=0.1, n_nodes=64), 1.0)

    def test_invalid_arguments(self):
        """Test argument checks of a single step."""
        with pytest.raises(ValueError, match="ends"):
            mcf_step(library.line(), 1e-3, ends="bogus")
        with pytest.raises(ValueError, match="positive"):
            mcf_step(library.circle(), 0.0)
        with pytest.raises(GeometryError, match="closed form"):
            mcf_step(RoundProduct(3, 1), 1e-3)

    def test_normalize_curve(self):
        """Test that normalization recentres a curve and sets its area to 2π."""
        shifted = library.ellipse(1.0, 3.0, n_nodes=128).translate((2.0, -1.0))
        normal = normalize(shifted)
        assert normal.enclosed_area() == pytest.approx(2.0 * math.pi, rel=1e-9)
        np.testing.assert_allclose(normal.centroid(), 0.0, atol=1e-9)

    def test_normalize_needs_closed_surface(self):
        """Test that open surfaces cannot be normalized."""
        with pytest.raises(ValueError, match="closed"):
            normalize(library.line())


class TestEvolve:
    """Tests for fixed-step flows against exact solutions."""

    def test_circle_radius(self):
        """Test that the circle follows R² = 1 − 2t."""
        circle = evolve(library.circle(radius=1.0, n_nodes=64), 0.0, 0.25, dt=1e-4)
        np.testing.assert_allclose(np.linalg.norm(circle.nodes, axis=1), math.sqrt(0.5), atol=1e-3)

    def test_first_order_in_time(self):
        """Test that halving the step halves the radius-law error on the shrinking circle."""
        errors = []
        for dt in (4e-3, 2e-3, 1e-3, 5e-4):
            circle = evolve(library.circle(radius=1.0, n_nodes=64), 0.0, 0.25, dt=dt)
            errors.append(abs(np.linalg.norm(circle.nodes, axis=1).mean() - math.sqrt(0.5)))
        factors = np.array(errors[:-1]) / np.array(errors[1:])
        assert np.all((factors >= 1.7) & (factors <= 2.3)), factors

    def test_sphere_radius(self):
        """Test that the sphere follows R² = 4 − 4t."""
        sphere = evolve(library.sphere(radius=2.0, n_nodes=257), 0.0, 0.5, dt=1e-4)
        np.testing.assert_allclose(np.hypot(sphere.nodes[:, 0], sphere.nodes[:, 1]), math.sqrt(2.0), rtol=1e-3)

    def test_normalized_flow_rounds_an_ellipse(self):
        """Test that the normalized flow drives an ellipse to the round circle."""
        ellipse = library.ellipse(1.0, 2.0, n_nodes=128)
        assert ellipse.isoperimetric_ratio() > 1.1
        after = evolve(ellipse, 0.0, 5.0, dt=1e-3, kind="normalized")
        assert after.isoperimetric_ratio() == pytest.approx(1.0, abs=1e-3)

    def test_empty_interval_rejected(self):
        """Test that t_end must exceed t_start."""
        with pytest.raises(ValueError, match="t_end"):
            evolve(library.circle(), 1.0, 1.0, dt=1e-3)


class TestRunFlow:
    """Tests for the adaptive flow runner."""

    def test_circle_extinction_time(self):
        """Test that the unit circle becomes extinct at t = 1/2."""
        trace = _shrinking_circle_trace()
        assert trace.termination is Termination.EXTINCTION
        assert trace.final.time == pytest.approx(0.5, abs=2e-3)
        assert np.all(np.diff(trace.times) > 0)
        assert trace.monitor("area")[-1] < 1e-2 * trace.monitor("area")[0]

    def test_time_budget_and_probes(self):
        """Test that probe densities are sampled and non-increasing."""
        config = FlowConfig(cfl=1e-3, t_end=0.4, sample_every=50, probes=[((0.0, 0.0), 1.0)])
        trace = run_flow(library.ellipse(1.0, 2.0, n_nodes=128), config)
        assert trace.termination is Termination.TIME_BUDGET
        assert trace.final.time == pytest.approx(0.4)
        density = trace.monitor("density_0")
        assert np.all(np.diff(density) <= 1e-6)
        audit = monotonicity_audit(trace, [((0.0, 0.0), 1.0)])
        assert audit["passed"]

    def test_round_products_refused(self):
        """Test that the runner needs a discretized surface."""
        with pytest.raises(ValueError, match="closed form"):
            run_flow(RoundProduct(3, 1))

    def test_invalid_config_refused(self):
        """Test that an invalid configuration raises ValueError."""
        with pytest.raises(ValueError, match="flow.kind"):
            run_flow(library.circle(), FlowConfig(kind="bogus"))


class TestTangentFlows:
    """Tests for tangent-flow extraction."""

    def test_parabolic_distance(self):
        """Test the parabolic distance between space-time points."""
        assert parabolic_distance(((0.0, 0.0), 0.0), ((3.0, 4.0), 1.0)) == pytest.approx(5.0)
        assert parabolic_distance(((0.0, 0.0), 0.0), ((0.0, 0.0), 4.0)) == pytest.approx(2.0)

    def test_shrinking_circle_tangent(self):
        """Test that a shrinking circle blows up to the circle of radius √2."""
        candidate = extract_tangent(_shrinking_circle_trace())
        assert candidate.classification is TangentClass.CIRCLE
        assert candidate.singular_time == pytest.approx(0.5, abs=2e-3)
        np.testing.assert_allclose(candidate.singular_point, 0.0, atol=1e-9)
        assert len(candidate.scales) >= 2
        assert candidate.scales == sorted(candidate.scales)
        assert not candidate.disagreement
        assert candidate.distances["circle"] < 0.05

    def test_empty_trace(self):
        """Test that extraction needs pre-singular samples."""
        trace = run_flow(library.circle(n_nodes=64), FlowConfig(t_end=1e-3))
        trace.samples = trace.samples[:1]
        with pytest.raises(ValueError, match="insufficient pre-singular samples"):
            extract_tangent(trace)


class TestPiecewiseFlow:
    """Tests for the generic piecewise flow."""

    def test_circle_is_round_extinction(self):
        """Test that a circle ends in round extinction without jumps."""
        trace = generic_piecewise_flow(library.circle(radius=1.0, n_nodes=64),
                                       FlowConfig(cfl=1e-3, sample_every=200, area_floor=1e-2))
        assert trace.verdict == "round extinction"
        assert trace.jumps == []

    def test_budget_without_singularity(self):
        """Test the verdict when the time budget runs out first."""
        trace = generic_piecewise_flow(library.circle(radius=1.0, n_nodes=64), FlowConfig(t_end=0.05))
        assert trace.verdict == "no singularity within budget"
        assert trace.termination is Termination.TIME_BUDGET

    def test_open_surface_refused(self):
        """Test that the piecewise flow starts from a closed surface."""
        with pytest.raises(ValueError, match="closed curve or profile"):
            generic_piecewise_flow(library.line())

    @pytest.mark.slow
    def test_dumbbell_neck_pinch(self):
        """Test that the dumbbell pinches at its neck with a cylindrical tangent."""
        trace = generic_piecewise_flow(library.dumbbell(), FlowConfig(max_jumps=0))
        assert trace.termination is Termination.SINGULARITY
        assert trace.verdict == "non-compact singularity"
        candidate = extract_tangent(trace)
        assert abs(candidate.singular_point[2]) < 0.1
        assert candidate.distances["sphere"] == math.inf
        assert candidate.classification is TangentClass.CYLINDER

    @pytest.mark.slow
    def test_torus_replacement_lowers_entropy(self, torus):
        """Test that a rescaled torus is replaced by a lower-entropy perturbation."""
        config = FlowConfig(kind="rescaled", t_end=0.5, max_jumps=1)
        trace = generic_piecewise_flow(torus, config)
        assert len(trace.jumps) == 1
        jump = trace.jumps[0]
        assert jump.entropy_drop >= config.jump_epsilon
        assert 1.8 < jump.entropy_before < 1.9
        assert jump.area_dilation == pytest.approx(1.0, abs=0.1)
        assert jump.new_surface.area() == pytest.approx(jump.old_surface.area(), rel=1e-12)
        assert trace.verdict in ("no singularity within budget", "jump budget exhausted")
        assert {s.leg for s in trace.samples} == {0, 1}


class TestAvoidance:
    """Tests for the avoidance principle between nested curves."""

    def test_nested_circles_stay_nested(self):
        """Test that an inner circle stays inside an outer one until it vanishes."""
        outer = library.circle(radius=2.0, n_nodes=64)
        inner = library.circle(radius=1.0, n_nodes=64, center=(0.3, 0.0))
        result = avoidance_check(outer, inner)
        assert result["passed"]
        assert result["min_gap"] > 0.0
        assert result["extinction_time"] == pytest.approx(0.5, abs=1e-2)

    def test_inner_must_start_inside(self):
        """Test that swapped curves are refused."""
        with pytest.raises(ValueError, match="strictly inside"):
            avoidance_check(library.circle(radius=1.0, n_nodes=64), library.circle(radius=2.0, n_nodes=64))
