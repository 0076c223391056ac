"""Unit tests for shrinklab.engine.surfaces."""
import math

import numpy as np
import pytest

from shrinklab.engine.errors import GeometryError, GoldenFileMissing
from shrinklab.engine.surfaces import (
    DiscreteCurve,
    ProfileSurface,
    RoundProduct,
    create_surface,
    get_surface_factory,
    library,
    list_registered_surfaces,
    register_surface,
    surface_from_dict,
)
from shrinklab.engine.types import Topology


class TestDiscreteCurve:
    """Tests for polygonal curves."""

    def test_circle_curvature_and_normal(self):
        """Test that a counter-clockwise circle has H = 1/R and outward normals."""
        curve = library.circle(radius=2.0, n_nodes=128)
        g = curve.local_geometry()
        np.testing.assert_allclose(g.H, 0.5, atol=1e-10)
        assert np.all(np.einsum("ij,ij->i", g.normals, g.positions) > 0)

    def test_ellipse_curvature_converges_at_second_order(self):
        """Test that the nodal curvature error on an ellipse falls fourfold per doubling."""
        errors = []
        for n in (128, 256, 512, 1024):
            g = library.ellipse(a=1.0, b=2.0, n_nodes=n).local_geometry()
            x, y = g.positions[:, 0], g.positions[:, 1]
            t = np.arctan2(y / 2.0, x)
            exact = 2.0 / (np.sin(t) ** 2 + 4.0 * np.cos(t) ** 2) ** 1.5
            errors.append(float(np.max(np.abs(g.H - exact))))
        rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert np.all((rates > 1.8) & (rates < 2.2))

    def test_reversed_orientation_flips_sign(self):
        """Test that orientation -1 flips the normal and the sign of H."""
        base = library.circle(radius=1.0, n_nodes=64)
        flipped = DiscreteCurve(base.nodes, closed=True, orientation=-1)
        np.testing.assert_allclose(flipped.local_geometry().H, -base.local_geometry().H)
        np.testing.assert_allclose(flipped.local_geometry().normals, -base.local_geometry().normals)

    def test_too_few_nodes(self):
        """Test that fewer than eight nodes are rejected."""
        pts = np.column_stack([np.cos(np.arange(5)), np.sin(np.arange(5))])
        with pytest.raises(GeometryError, match="at least 8 nodes"):
            DiscreteCurve(pts)

    def test_coincident_nodes(self):
        """Test that repeated consecutive nodes are rejected."""
        pts = library.circle(n_nodes=16).nodes.copy()
        pts[3] = pts[2]
        with pytest.raises(GeometryError, match="coincide"):
            DiscreteCurve(pts)

    def test_figure_eight_rejected_unless_immersed(self):
        """Test that a self-crossing closed curve needs the immersed flag."""
        t = 2.0 * np.pi * (np.arange(64) + 0.5) / 64
        pts = np.column_stack([np.cos(t), 0.5 * np.sin(2.0 * t)])
        with pytest.raises(GeometryError, match="not simple"):
            DiscreteCurve(pts)
        curve = DiscreteCurve(pts, immersed=True)
        assert curve.immersed

    def test_bad_orientation(self):
        """Test that orientation must be +1 or -1."""
        with pytest.raises(GeometryError):
            DiscreteCurve(library.circle(n_nodes=16).nodes, orientation=0)

    def test_enclosed_area_and_isoperimetric_ratio(self):
        """Test polygon area and the isoperimetric ratio of a round circle."""
        curve = library.circle(radius=1.5, n_nodes=512)
        assert curve.enclosed_area() == pytest.approx(math.pi * 1.5 ** 2, rel=1e-4)
        assert curve.isoperimetric_ratio() == pytest.approx(1.0, abs=1e-4)
        assert library.ellipse(1.0, 2.0).isoperimetric_ratio() > 1.1

    def test_open_curve_has_no_enclosed_area(self):
        """Test that enclosed area is refused on open curves."""
        with pytest.raises(GeometryError):
            library.line().enclosed_area()

    def test_centroid_follows_translation(self):
        """Test that the centroid moves with the curve."""
        curve = library.ellipse(1.0, 2.0, n_nodes=128).translate((0.5, -1.0))
        np.testing.assert_allclose(curve.centroid(), [0.5, -1.0], atol=1e-9)

    def test_translate_needs_plane_vector(self):
        """Test that curves refuse three-component translations."""
        with pytest.raises(GeometryError):
            library.circle().translate((0.0, 0.0, 1.0))

    def test_line_is_open_and_flat(self):
        """Test that the library line is open with zero curvature."""
        line = library.line(half_length=5.0, n_nodes=101)
        assert not line.is_closed
        assert not line.is_periodic
        np.testing.assert_allclose(line.local_geometry().H, 0.0, atol=1e-12)


class TestProfileSurface:
    """Tests for rotationally symmetric profiles."""

    def test_sphere_curvature(self):
        """Test that the round sphere of radius 2 has H = 1 and |A|² = 1/2."""
        g = library.sphere(radius=2.0, n_nodes=129).local_geometry()
        np.testing.assert_allclose(g.H, 1.0, atol=1e-9)
        np.testing.assert_allclose(g.A2, 0.5, atol=1e-9)

    def test_sphere_area(self):
        """Test that the node measure integrates to the sphere area."""
        assert library.sphere(radius=2.0).area() == pytest.approx(16.0 * math.pi, rel=1e-3)

    def test_arc_quadrature_on_the_sphere(self):
        """Test that arc points lie on the sphere with radial normals and exact total area."""
        points, normals, kappa, weights = library.sphere(radius=2.0, n_nodes=65).arc_quadrature()
        np.testing.assert_allclose(np.hypot(points[:, 0], points[:, 1]), 2.0, atol=1e-12)
        np.testing.assert_allclose(normals, points / 2.0, atol=1e-12)
        np.testing.assert_allclose(kappa, 0.5, atol=1e-12)
        assert weights.sum() == pytest.approx(16.0 * math.pi, rel=1e-12)

    def test_arc_quadrature_on_straight_profiles(self):
        """Test that straight segments give flat arcs with the frustum area."""
        cylinder = library.cylinder(radius=1.5, half_length=2.0, n_nodes=9)
        points, normals, kappa, weights = cylinder.arc_quadrature(order=3)
        assert len(points) == 8 * 3
        np.testing.assert_allclose(points[:, 0], 1.5)
        np.testing.assert_allclose(normals, np.tile([1.0, 0.0], (24, 1)), atol=1e-15)
        np.testing.assert_allclose(kappa, 0.0)
        assert weights.sum() == pytest.approx(2.0 * math.pi * 1.5 * 4.0, rel=1e-12)

    def test_cylinder_geometry(self):
        """Test that the cylinder has H = 1/R and flat meridians."""
        g = library.cylinder(radius=math.sqrt(2.0), n_nodes=65).local_geometry()
        np.testing.assert_allclose(g.H, 1.0 / math.sqrt(2.0), atol=1e-12)
        assert library.cylinder().topology is Topology.CYLINDER

    def test_poles(self):
        """Test that sphere-like profiles report both end nodes as poles."""
        sphere = library.sphere(n_nodes=33)
        np.testing.assert_array_equal(sphere.poles, [0, 32])
        assert library.cylinder().poles.size == 0

    def test_negative_radius_rejected(self):
        """Test that nodes with r < 0 are rejected."""
        nodes = library.cylinder(n_nodes=17).nodes.copy()
        nodes[4, 0] = -0.1
        with pytest.raises(GeometryError, match="non-negative"):
            ProfileSurface(nodes, topology=Topology.CYLINDER)

    def test_sphere_profile_must_end_on_axis(self):
        """Test that a sphere-like profile away from the axis is rejected."""
        nodes = library.sphere(n_nodes=33).nodes.copy()
        nodes[-1, 0] = 0.3
        with pytest.raises(GeometryError, match="axis"):
            ProfileSurface(nodes, topology=Topology.SPHERE)

    def test_translation_along_axis_only(self):
        """Test that profiles translate along the z-axis and nowhere else."""
        sphere = library.sphere(n_nodes=33)
        moved = sphere.translate((0.0, 0.0, 1.0))
        np.testing.assert_allclose(moved.nodes[:, 1], sphere.nodes[:, 1] + 1.0)
        with pytest.raises(GeometryError, match="rotational symmetry"):
            sphere.translate((1.0, 0.0, 0.0))

    def test_embed_into_meridian_plane(self):
        """Test that (r, z) vectors embed as (r, 0, z)."""
        sphere = library.sphere(n_nodes=17)
        out = sphere.embed(np.array([[1.0, 2.0]]))
        np.testing.assert_array_equal(out, [[1.0, 0.0, 2.0]])
        np.testing.assert_array_equal(sphere.restrict(out), [[1.0, 2.0]])

    def test_loop_area_only_for_torus(self):
        """Test that the profile loop area needs a torus-like profile."""
        with pytest.raises(GeometryError):
            library.sphere().enclosed_profile_area()

    def test_dumbbell_has_thin_neck(self):
        """Test that the dumbbell narrows to its neck radius at z = 0."""
        bell = library.dumbbell()
        middle = np.abs(bell.nodes[:, 1]) < 0.05
        assert bell.nodes[middle, 0].max() == pytest.approx(0.2, abs=1e-6)
        assert bell.topology is Topology.SPHERE

    def test_dumbbell_rejects_wide_neck(self):
        """Test that the neck must be thinner than the lobes."""
        with pytest.raises(GeometryError):
            library.dumbbell(lobe_radius=1.0, neck_radius=1.2)


class TestBaseOperations:
    """Tests for operations shared by all discretized surfaces."""

    def test_dilate(self):
        """Test that dilation scales nodes and area."""
        circle = library.circle(radius=1.0, n_nodes=64)
        bigger = circle.dilate(3.0)
        np.testing.assert_allclose(bigger.nodes, 3.0 * circle.nodes)
        assert bigger.area() == pytest.approx(3.0 * circle.area(), rel=1e-12)

    def test_dilate_rejects_non_positive(self):
        """Test that non-positive dilation factors are rejected."""
        with pytest.raises(GeometryError):
            library.circle().dilate(0.0)

    def test_resample_keeps_type_and_count(self):
        """Test that resampling keeps the node count and topology."""
        ellipse = library.ellipse(1.0, 3.0, n_nodes=96)
        out = ellipse.resample()
        assert isinstance(out, DiscreteCurve)
        assert out.n_nodes == 96
        assert out.adjacent_edge_ratio() < 1.05

    def test_diameter(self):
        """Test the extrinsic diameter of a circle and of a sphere."""
        assert library.circle(radius=1.0, n_nodes=64).diameter() == pytest.approx(2.0, rel=1e-12)
        assert library.sphere(radius=2.0, n_nodes=65).diameter() == pytest.approx(4.0, rel=1e-12)

    def test_serialization_restores_surface(self):
        """Test that serialized curves and profiles come back unchanged."""
        for surface in (library.ellipse(n_nodes=32), library.sphere(n_nodes=33)):
            restored = surface_from_dict(surface.to_dict())
            assert type(restored) is type(surface)
            np.testing.assert_array_equal(restored.nodes, surface.nodes)
        product = surface_from_dict(RoundProduct(3, 1).to_dict())
        assert product == RoundProduct(3, 1)

    def test_unknown_schema(self):
        """Test that foreign records are refused."""
        with pytest.raises(GeometryError, match="schema"):
            surface_from_dict({"schema": "other/1", "type": "curve"})


class TestRoundProduct:
    """Tests for analytic round products."""

    def test_default_radius_is_shrinker(self):
        """Test that the default radius is √(2k)."""
        p = RoundProduct(3, 1)
        assert p.radius == pytest.approx(math.sqrt(2.0))
        assert p.is_shrinker
        assert not RoundProduct(3, 1, radius=1.0).is_shrinker

    def test_sphere_geometry(self):
        """Test the exact constants of the round sphere of radius 2."""
        g = RoundProduct(3, 2).geometry()
        assert g.H == pytest.approx(1.0)
        assert g.A2 == pytest.approx(0.5)
        assert g.density == pytest.approx(4.0 / math.e, rel=1e-12)

    def test_hyperplane(self):
        """Test that k = 0 is the flat hyperplane with density one."""
        g = RoundProduct(3, 0).geometry()
        assert (g.H, g.A2, g.density) == (0.0, 0.0, 1.0)

    def test_invalid_dimensions(self):
        """Test that impossible dimension pairs are rejected."""
        with pytest.raises(GeometryError):
            RoundProduct(2, 2)
        with pytest.raises(GeometryError):
            RoundProduct(3, 1, radius=-1.0)

    def test_discretize(self):
        """Test that low-dimensional products discretize to library models."""
        assert isinstance(RoundProduct(2, 1).discretize(n_nodes=64), DiscreteCurve)
        cyl = RoundProduct(3, 1).discretize(n_nodes=64)
        assert isinstance(cyl, ProfileSurface)
        assert cyl.topology is Topology.CYLINDER
        with pytest.raises(GeometryError):
            RoundProduct(4, 1).discretize()


class TestSurfaceRegistry:
    """Tests for the surface registry."""

    def test_library_names_registered(self):
        """Test that every library shrinker is registered."""
        names = list_registered_surfaces()
        for name in library.shrinker_names() + ["ellipse", "dumbbell", "round_product"]:
            assert name in names

    def test_create_surface(self):
        """Test creating a surface by name with parameters."""
        curve = create_surface("circle", radius=1.0, n_nodes=32)
        assert curve.n_nodes == 32
        assert curve.local_geometry().H[0] == pytest.approx(1.0)

    def test_unknown_surface(self):
        """Test that unknown names raise KeyError."""
        with pytest.raises(KeyError, match="Unknown surface"):
            create_surface("klein_bottle")

    def test_register_custom_surface(self):
        """Test registering a new factory."""
        register_surface("unit_circle_test", lambda: library.circle(radius=1.0, n_nodes=16))
        assert get_surface_factory("unit_circle_test") is not None
        assert create_surface("unit_circle_test").n_nodes == 16

    def test_torus_without_golden_file(self, tmp_path):
        """Test that the torus factory explains how to create its golden file."""
        with pytest.raises(GoldenFileMissing, match="shrinklab solve"):
            library.torus(tmp_path / "missing.json")
