"""Unit tests for shrinklab.engine.functionals."""
import math

import numpy as np
import pytest

from shrinklab.engine.errors import GeometryError, NotAShrinkerError
from shrinklab.engine.functionals import (
    critical_residual,
    density_trace,
    entropy,
    entropy_grid_search,
    entropy_series,
    f_functional,
    f_gradient,
    general_first_variation,
    lambda_bound_slope,
    product_reduce_f,
    radial_path_monotonicity,
    volume_growth_check,
)
from shrinklab.engine.surfaces import RoundProduct, library
from shrinklab.engine.types import FlowSample, FlowTrace

CIRCLE_ENTROPY = math.sqrt(2.0 * math.pi / math.e)
SPHERE_ENTROPY = 4.0 / math.e


def _central_difference(surface, x0, t0, h=1e-6):
    """Finite-difference (∂F/∂x0, ∂F/∂t0)."""
    x0 = np.asarray(x0, dtype=float)
    grad = np.zeros_like(x0)
    for i in range(len(x0)):
        e = np.zeros_like(x0)
        e[i] = h
        grad[i] = (f_functional(surface, x0 + e, t0).value - f_functional(surface, x0 - e, t0).value) / (2 * h)
    dt = (f_functional(surface, x0, t0 + h).value - f_functional(surface, x0, t0 - h).value) / (2 * h)
    return grad, dt


def _shrinking_circles(times, extinction=0.5):
    samples = [
        FlowSample(time=t, surface=library.circle(radius=math.sqrt(2.0 * (extinction - t)), n_nodes=128))
        for t in times
    ]
    return FlowTrace(samples=samples)


class TestFFunctional:
    """Tests for F_{x0,t0} evaluation."""

    def test_line_values(self):
        """Test that the line has F = exp(−d²/4t0) at distance d."""
        line = library.line()
        assert f_functional(line, (0.0, 0.0), 1.0).value == pytest.approx(1.0, abs=1e-8)
        assert f_functional(line, (3.0, 0.5), 2.0).value == pytest.approx(math.exp(-0.25 / 8.0), abs=1e-8)

    def test_line_tail_is_reported(self):
        """Test that a short line reports a large truncation bound and is not accepted."""
        short = library.line(half_length=1.0, n_nodes=65)
        result = f_functional(short, (0.0, 0.0), 1.0)
        assert result.value == pytest.approx(1.0, abs=1e-4)
        assert result.tail_bound > 0.1
        assert not result.accepted
        assert result.to_dict()["accepted"] is False
        assert result.n_nodes == 65

    def test_tail_bound_dominates_the_continued_rays(self):
        """Test that the truncation bound is at least the weight of the straight continuation."""
        short = library.line(half_length=1.0, n_nodes=65)
        inner = f_functional(short, (0.0, 0.0), 1.0)
        sampled = math.erf(0.5)
        assert inner.tail_bound >= inner.value - sampled

    def test_long_line_is_accepted(self):
        """Test that the default line and cylinder pass the truncation gate at unit scale."""
        line = f_functional(library.line(), (0.0, 0.0), 1.0)
        assert line.tail_bound < 1e-12 and line.accepted
        cylinder = f_functional(library.cylinder(), (0.0, 0.0, 0.0), 1.0)
        assert cylinder.tail_bound < 1e-12 and cylinder.accepted

    def test_circle_closed_form(self):
        """Test F_{0,1} of the shrinking circle against √(2π/e)."""
        result = f_functional(library.circle(), (0.0, 0.0), 1.0)
        assert result.value == pytest.approx(CIRCLE_ENTROPY, rel=1e-4)
        assert result.tail_bound == 0.0
        assert result.accepted
        assert result.truncation_radius == pytest.approx(math.sqrt(2.0))

    def test_sphere_quadrature_matches_closed_form(self):
        """Test the profile quadrature against the exact round-sphere integral."""
        sphere = library.sphere(radius=2.0, n_nodes=257)
        model = RoundProduct(3, 2)
        for x0, t0 in (((0.0, 0.0, 0.0), 1.0), ((0.0, 0.0, 0.5), 0.7), ((0.4, 0.0, -0.3), 1.5)):
            assert f_functional(sphere, x0, t0).value == pytest.approx(model.f_value(x0, t0), rel=1e-3)
        assert f_functional(sphere, (0.0, 0.0, 0.0), 1.0).value == pytest.approx(SPHERE_ENTROPY, rel=1e-3)

    def test_quadrature_converges_at_second_order(self):
        """Test that the F error drops at least threefold per doubling of the nodes."""
        cases = (
            ([library.circle(n_nodes=n) for n in (64, 128, 256)], (0.0, 0.0), CIRCLE_ENTROPY),
            ([library.sphere(n_nodes=n) for n in (65, 129, 257)], (0.0, 0.0, 0.0), SPHERE_ENTROPY),
        )
        for surfaces, x0, exact in cases:
            errors = [abs(f_functional(s, x0, 1.0).value - exact) for s in surfaces]
            assert errors[0] > 0.0
            assert all(coarse >= 3.0 * fine for coarse, fine in zip(errors, errors[1:]))

    def test_cylinder_matches_round_product(self):
        """Test that the continued cylinder matches S¹ x R at the origin."""
        value = f_functional(library.cylinder(), (0.0, 0.0, 0.0), 1.0).value
        assert value == pytest.approx(RoundProduct(3, 1).f_value(np.zeros(3), 1.0), rel=1e-3)

    def test_round_product_values(self):
        """Test the closed-form F of the analytic products."""
        assert f_functional(RoundProduct(2, 1), (0.0, 0.0), 1.0).value == pytest.approx(CIRCLE_ENTROPY)
        assert f_functional(RoundProduct(3, 2), (0.0, 0.0, 0.0), 1.0).value == pytest.approx(SPHERE_ENTROPY)
        assert f_functional(RoundProduct(3, 0), (1.0, 0.0, 0.0), 1.0).value == pytest.approx(math.exp(-0.25))

    def test_product_reduction_ignores_flat_directions(self):
        """Test that moving the centre along the flat factor leaves F unchanged."""
        cylinder = RoundProduct(3, 1)
        base = product_reduce_f(cylinder, (0.2, 0.0, 0.0), 0.7)
        shifted = product_reduce_f(cylinder, (0.2, 0.0, 5.0), 0.7)
        assert shifted.value == pytest.approx(base.value, rel=1e-12)
        assert base.tail_bound == 0.0 and base.accepted
        assert product_reduce_f(cylinder, (0.0, 0.0, 0.0), 1.0).value == pytest.approx(CIRCLE_ENTROPY)

    def test_translation_and_scaling_invariance(self):
        """Test F_{x0+v,t0}(Σ+v) = F_{x0,t0}(Σ) and F_{αx0,α²t0}(αΣ) = F_{x0,t0}(Σ)."""
        curve = library.ellipse(1.0, 2.0, n_nodes=128)
        base = f_functional(curve, (0.3, -0.1), 0.8).value
        moved = f_functional(curve.translate((1.5, -2.0)), (1.8, -2.1), 0.8).value
        scaled = f_functional(curve.dilate(3.0), (0.9, -0.3), 7.2).value
        assert moved == pytest.approx(base, rel=1e-12)
        assert scaled == pytest.approx(base, rel=1e-12)

    def test_invalid_scale_rejected(self):
        """Test that non-positive t0 raises ValueError."""
        with pytest.raises(ValueError, match="t0 must be positive"):
            f_functional(library.circle(), (0.0, 0.0), 0.0)
        with pytest.raises(ValueError):
            f_functional(RoundProduct(2, 1), (0.0, 0.0), -1.0)

    def test_wrong_centre_dimension_rejected(self):
        """Test that a centre with the wrong number of coordinates is refused."""
        with pytest.raises(GeometryError, match="coordinates"):
            f_functional(library.circle(), (0.0, 0.0, 0.0), 1.0)


class TestFGradient:
    """Tests for the analytic gradient of F in (x0, t0)."""

    def test_curve_gradient_matches_finite_differences(self):
        """Test the closed-curve gradient against central differences."""
        curve = library.circle(radius=1.0, n_nodes=128)
        gx, gt = f_gradient(curve, (0.3, -0.2), 0.7)
        fx, ft = _central_difference(curve, (0.3, -0.2), 0.7)
        np.testing.assert_allclose(gx, fx, atol=1e-7)
        assert gt == pytest.approx(ft, abs=1e-7)

    def test_open_curve_gradient_includes_tails(self):
        """Test the gradient of a short line, where the end rays dominate."""
        short = library.line(half_length=1.0, n_nodes=65)
        gx, gt = f_gradient(short, (0.4, 0.3), 1.2)
        fx, ft = _central_difference(short, (0.4, 0.3), 1.2)
        np.testing.assert_allclose(gx, fx, atol=1e-7)
        assert gt == pytest.approx(ft, abs=1e-7)

    def test_profile_gradient_matches_finite_differences(self):
        """Test the profile gradient, including the rotation-angle factor."""
        sphere = library.sphere(radius=2.0, n_nodes=129)
        gx, gt = f_gradient(sphere, (0.4, 0.0, 0.3), 0.9)
        fx, ft = _central_difference(sphere, (0.4, 0.0, 0.3), 0.9)
        np.testing.assert_allclose(gx, fx, atol=1e-6)
        assert gt == pytest.approx(ft, abs=1e-6)

    def test_round_product_gradient(self):
        """Test the closed-form product gradient against central differences."""
        product = RoundProduct(3, 1)
        gx, gt = f_gradient(product, (0.5, 0.2, 1.0), 0.8)
        fx, ft = _central_difference(product, (0.5, 0.2, 1.0), 0.8)
        np.testing.assert_allclose(gx, fx, atol=1e-7)
        assert gt == pytest.approx(ft, abs=1e-7)


class TestEntropy:
    """Tests for the entropy maximization."""

    def test_circle_entropy(self):
        """Test that the circle attains √(2π/e) at its centre and scale R²/2."""
        result = entropy(library.circle())
        assert result.lam == pytest.approx(CIRCLE_ENTROPY, rel=1e-3)
        np.testing.assert_allclose(result.x0, (0.0, 0.0), atol=1e-3)
        assert result.t0 == pytest.approx(1.0, rel=1e-3)
        assert result.multistart_count == 45

    def test_sphere_entropy(self):
        """Test that the sphere attains 4/e."""
        result = entropy(library.sphere())
        assert result.lam == pytest.approx(SPHERE_ENTROPY, rel=2e-3)
        x0, t0 = result.argmax
        np.testing.assert_allclose(x0, (0.0, 0.0, 0.0), atol=1e-2)
        assert t0 == pytest.approx(1.0, rel=1e-2)

    def test_line_entropy(self):
        """Test that the line has entropy one."""
        assert entropy(library.line()).lam == pytest.approx(1.0, abs=1e-6)

    def test_dilation_invariance(self):
        """Test that entropy does not change under dilation."""
        small = entropy(library.circle(radius=1.0)).lam
        large = entropy(library.circle(radius=3.0)).lam
        assert small == pytest.approx(large, rel=1e-7)

    def test_round_product_entropy(self):
        """Test the closed-form entropy of a cylinder model."""
        result = entropy(RoundProduct(3, 1))
        assert result.t0 == 1.0
        assert result.lam == pytest.approx(CIRCLE_ENTROPY)

    def test_grid_search_bounds_ascent(self):
        """Test that a grid search never beats the ascent and lands close to it."""
        curve = library.circle()
        ascent = entropy(curve).lam
        grid = entropy_grid_search(curve, n_space=32, n_time=16).lam
        assert grid <= ascent + 1e-9
        assert grid == pytest.approx(ascent, abs=1e-2)

    def test_entropy_series(self):
        """Test that entropy along concentric circles is flat."""
        surfaces = [library.circle(radius=r, n_nodes=128) for r in (1.0, 0.8, 0.6)]
        series = entropy_series(surfaces, [0.0, 0.1, 0.2])
        assert series.non_increasing
        assert series.spread() < 1e-7


class TestVariations:
    """Tests for first variations and monotonicity probes."""

    def test_circle_is_critical(self):
        """Test that the shrinking circle is a critical point of F_{0,1}."""
        circle = library.circle()
        np.testing.assert_allclose(critical_residual(circle, (0.0, 0.0), 1.0), 0.0, atol=1e-12)
        assert general_first_variation(circle, (0.0, 0.0), 1.0, 1.0) == pytest.approx(0.0, abs=1e-10)
        assert general_first_variation(circle, (0.0, 0.0), 1.0, 0.0, h=1.0, y=(1.0, 0.0)) == pytest.approx(
            0.0, abs=1e-10)

    def test_first_variation_matches_dilation(self):
        """Test that f = ⟨x,n⟩ on a circle reproduces dF/dα of a dilation."""
        circle = library.circle(radius=1.0, n_nodes=256)
        support = circle.local_geometry().support
        analytic = general_first_variation(circle, (0.0, 0.0), 1.0, support)
        eps = 1e-6
        numeric = (f_functional(circle.dilate(1 + eps), (0.0, 0.0), 1.0).value
                   - f_functional(circle.dilate(1 - eps), (0.0, 0.0), 1.0).value) / (2 * eps)
        assert analytic == pytest.approx(numeric, rel=1e-3)

    def test_lambda_bound_slope(self):
        """Test that ∂F/∂t0 stays above −(λ/4)·sup H²."""
        curve = library.ellipse(1.0, 2.0, n_nodes=128)
        slope, bound = lambda_bound_slope(curve, (0.2, 0.1), 0.5)
        assert slope >= bound

    def test_volume_growth(self):
        """Test the Euclidean volume growth bound on the circle."""
        circle = library.circle()
        assert volume_growth_check(circle, 10.0).passed
        report = volume_growth_check(circle, 0.1)
        assert not report.passed
        assert report.worst_ratio > 0.1

    def test_radial_path_is_non_increasing(self):
        """Test that F along s -> (s·y, 1 + s²) decreases on the circle."""
        series = radial_path_monotonicity(library.circle(), (1.0, 0.0), 1.0, np.linspace(0.0, 1.0, 11),
                                          tolerance=1e-8)
        assert series.non_increasing
        assert series.values[0] == pytest.approx(CIRCLE_ENTROPY, rel=1e-4)

    def test_radial_path_requires_shrinker(self):
        """Test that the radial path refuses a non-shrinker."""
        with pytest.raises(NotAShrinkerError):
            radial_path_monotonicity(library.ellipse(), (1.0, 0.0), 1.0, [0.0, 0.5])


class TestDensityTrace:
    """Tests for Gaussian density along a flow trace."""

    def test_constant_at_extinction_point(self):
        """Test that shrinking circles have constant density at their extinction point."""
        trace = _shrinking_circles([0.0, 0.1, 0.2, 0.3])
        series = density_trace(trace, (0.0, 0.0), 0.5)
        assert series.spread() < 1e-10
        assert series.values[0] == pytest.approx(CIRCLE_ENTROPY, rel=1e-4)

    def test_non_increasing_elsewhere(self):
        """Test that density with a later t0 is non-increasing."""
        trace = _shrinking_circles([0.0, 0.1, 0.2, 0.3])
        assert density_trace(trace, (0.2, 0.0), 0.6).non_increasing

    def test_t0_inside_trace_rejected(self):
        """Test that t0 must lie beyond every sample time."""
        trace = _shrinking_circles([0.0, 0.1, 0.2])
        with pytest.raises(ValueError, match="inside the trace time range"):
            density_trace(trace, (0.0, 0.0), 0.2)
