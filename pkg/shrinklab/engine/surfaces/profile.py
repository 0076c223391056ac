"""
Surfaces of revolution about the z-axis, described by a profile in the (r, z) half-plane.
"""

from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..errors import GeometryError
from ..types import LocalGeometry, Topology
from .base import (
    SCHEMA_TAG,
    BaseSurface,
    EdgeSet,
    check_nodes,
    circle_frame,
    first_self_intersection,
    uniform_resample,
)

TWO_PI = 2.0 * np.pi


class ProfileSurface(BaseSurface):
    """A rotationally symmetric surface in R³ generated by a profile curve.

    Orientation: the profile is traversed so that the enclosed side lies to
    the left (south pole to north pole for sphere-like profiles,
    counter-clockwise for torus-like loops, upward for cylinder-like ones);
    the outward normal is the right-hand rotation of the profile tangent.

    Node measures are the lumped areas of the dual cells, which stay positive
    at the poles and sum to the exact area of the piecewise-linear surface.
    """

    kind = "profile"
    dim = 2
    ambient_dim = 3

    def __init__(self, profile: Any, topology: Topology = Topology.SPHERE, check_simple: bool = True):
        """Create a profile surface.

        Args:
            profile: (r, z) node pairs, shape (M, 2).
            topology: Profile topology.
            check_simple: Test torus-like loops for self-intersections.

        Raises:
            GeometryError: If an invariant fails.
        """
        topology = Topology(topology)
        arr = np.array(profile, dtype=float)
        if topology is Topology.SPHERE and arr.ndim == 2 and len(arr) >= 2:
            arr[0, 0] = 0.0 if abs(arr[0, 0]) < 1e-12 else arr[0, 0]
            arr[-1, 0] = 0.0 if abs(arr[-1, 0]) < 1e-12 else arr[-1, 0]
        self._profile = check_nodes(arr)
        self.topology = topology
        self._geometry: Optional[LocalGeometry] = None
        self._validate(check_simple)

    def _validate(self, check_simple: bool):
        r = self._profile[:, 0]
        negative = np.flatnonzero(r < 0)
        if negative.size:
            raise GeometryError("profile radius must be non-negative", node=int(negative[0]))
        if self.topology is Topology.SPHERE:
            if r[0] != 0.0 or r[-1] != 0.0:
                raise GeometryError("sphere-like profile must start and end on the axis")
            interior = np.flatnonzero(r[1:-1] <= 0) + 1
        else:
            interior = np.flatnonzero(r <= 0)
        if interior.size:
            raise GeometryError("profile touches the axis away from a pole", node=int(interior[0]))
        p = self._profile
        closed = self.topology is Topology.TORUS
        steps = np.roll(p, -1, axis=0) - p if closed else np.diff(p, axis=0)
        zero = np.flatnonzero(np.linalg.norm(steps, axis=1) <= 1e-14 * max(float(np.abs(p).max()), 1.0))
        if zero.size:
            raise GeometryError("consecutive profile nodes coincide", node=int(zero[0]))
        if closed and check_simple:
            crossing = first_self_intersection(p, closed=True)
            if crossing is not None:
                raise GeometryError("torus-like profile loop is not simple", node=crossing)

    # =========================================================================
    # BaseSurface interface
    # =========================================================================

    @property
    def nodes(self) -> np.ndarray:
        return self._profile

    @property
    def is_closed(self) -> bool:
        return self.topology is not Topology.CYLINDER

    @property
    def poles(self) -> np.ndarray:
        """Indices of nodes on the axis."""
        if self.topology is Topology.SPHERE:
            return np.array([0, self.n_nodes - 1])
        return np.array([], dtype=int)

    def embed(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        return np.column_stack([values[:, 0], np.zeros(len(values)), values[:, 1]])

    def restrict(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=float)[:, [0, 2]]

    def edges(self) -> EdgeSet:
        p = self._profile
        n = len(p)
        i = np.arange(n if self.topology is Topology.TORUS else n - 1)
        j = (i + 1) % n
        length = np.linalg.norm(p[j] - p[i], axis=1)
        r_mid = 0.5 * (p[i, 0] + p[j, 0])
        return EdgeSet(i=i, j=j, flux=TWO_PI * r_mid / length,
                       midpoints=self.embed(0.5 * (p[i] + p[j])))

    def _dual_measure(self) -> np.ndarray:
        p = self._profile
        e = self.edges()
        length = np.linalg.norm(p[e.j] - p[e.i], axis=1)
        ri, rj = p[e.i, 0], p[e.j, 0]
        measure = np.zeros(len(p))
        np.add.at(measure, e.i, TWO_PI * length * (3.0 * ri + rj) / 8.0)
        np.add.at(measure, e.j, TWO_PI * length * (ri + 3.0 * rj) / 8.0)
        return measure

    def arc_quadrature(self, order: int = 4):
        """Gauss-Legendre points on circular arcs through consecutive nodes.

        Each segment is replaced by the arc through its two nodes whose
        curvature is the mean of the node curvatures. The arcs coincide with
        the profile wherever the profile lies on a circle, so integrals over
        round spheres are exact up to the Gauss error; elsewhere the
        reconstruction error is third order in the spacing.

        Args:
            order: Gauss points per segment.

        Returns:
            Tuple (points (M, 2), unit normals (M, 2), profile curvature (M,),
            area weights 2π·r·ds (M,)).
        """
        p = self._profile
        e = self.edges()
        kappa_nodes = -self.local_geometry().principal[:, 0]
        kappa = 0.5 * (kappa_nodes[e.i] + kappa_nodes[e.j])
        chord = p[e.j] - p[e.i]
        length = np.linalg.norm(chord, axis=1)
        half = 0.5 * kappa * length
        alpha = np.arcsin(np.clip(half, -1.0, 1.0))
        bent = np.abs(half) > 1e-12
        arc = length * np.where(bent, alpha / np.where(bent, half, 1.0), 1.0)
        start = np.arctan2(chord[:, 1], chord[:, 0]) - alpha

        xi, wq = np.polynomial.legendre.leggauss(order)
        sigma = 0.5 * arc[:, None] * (xi[None, :] + 1.0)
        turn = kappa[:, None] * sigma
        # secant from the segment start: σ·sinc(κσ/2) along the mid heading
        step = sigma * np.sinc(turn / TWO_PI)
        heading = start[:, None] + 0.5 * turn
        r = p[e.i, 0][:, None] + step * np.cos(heading)
        z = p[e.i, 1][:, None] + step * np.sin(heading)
        direction = start[:, None] + turn
        points = np.column_stack([r.ravel(), z.ravel()])
        normals = np.column_stack([np.sin(direction).ravel(), -np.cos(direction).ravel()])
        weights = TWO_PI * r * (0.5 * arc[:, None] * wq[None, :])
        return points, normals, np.repeat(kappa, order), weights.ravel()

    def local_geometry(self) -> LocalGeometry:
        if self._geometry is not None:
            return self._geometry
        p = self._profile
        n = len(p)
        if self.topology is Topology.TORUS:
            tangent, kappa = circle_frame(np.roll(p, 1, axis=0), p, np.roll(p, -1, axis=0))
        elif self.topology is Topology.SPHERE:
            mirror = np.array([-1.0, 1.0])
            prev = np.vstack([p[1] * mirror, p[:-1]])
            nxt = np.vstack([p[1:], p[-2] * mirror])
            tangent, kappa = circle_frame(prev, p, nxt)
            tangent[0] = [1.0, 0.0]
            tangent[-1] = [-1.0, 0.0]
        else:
            tangent = np.empty_like(p)
            kappa = np.empty(n)
            tangent[1:-1], kappa[1:-1] = circle_frame(p[:-2], p[1:-1], p[2:])
            for end, step in ((0, p[1] - p[0]), (-1, p[-1] - p[-2])):
                tangent[end] = step / np.linalg.norm(step)
            kappa[0], kappa[-1] = kappa[1], kappa[-2]

        nu = np.column_stack([tangent[:, 1], -tangent[:, 0]])
        r = p[:, 0]
        rotational = np.empty(n)
        on_axis = r == 0.0
        rotational[~on_axis] = nu[~on_axis, 0] / r[~on_axis]
        # removable singularity: the two principal curvatures agree at a pole
        rotational[on_axis] = kappa[on_axis]

        H = kappa + rotational
        tangents = np.stack([
            self.embed(tangent),
            np.tile([0.0, 1.0, 0.0], (n, 1)),
        ], axis=1)
        self._geometry = LocalGeometry(
            positions=self.embed(p),
            normals=self.embed(nu),
            H=H,
            A2=kappa ** 2 + rotational ** 2,
            measure=self._dual_measure(),
            tangents=tangents,
            principal=np.column_stack([-kappa, -rotational]),
        )
        return self._geometry

    def with_nodes(self, nodes: np.ndarray, check_simple: bool = True) -> "ProfileSurface":
        return ProfileSurface(nodes, topology=self.topology, check_simple=check_simple)

    def resample(self, n_nodes: Optional[int] = None, check_simple: bool = True) -> "ProfileSurface":
        n_nodes = n_nodes or self.n_nodes
        out = uniform_resample(self._profile, n_nodes, closed=self.topology is Topology.TORUS)
        if self.topology is Topology.SPHERE:
            out[1:-1, 0] = np.maximum(out[1:-1, 0], 1e-12)
        return self.with_nodes(out, check_simple)

    def translate(self, v: Sequence[float]) -> "ProfileSurface":
        shift = np.asarray(v, dtype=float)
        if shift.shape != (3,):
            raise GeometryError(f"profile translation must be a 3-vector, got shape {shift.shape}")
        if shift[0] != 0.0 or shift[1] != 0.0:
            raise GeometryError("translation off the z-axis breaks rotational symmetry")
        return self.with_nodes(self._profile + np.array([0.0, shift[2]]))

    def _pair_distances(self, block: np.ndarray, pts: np.ndarray) -> np.ndarray:
        # farthest points of two parallel circles lie on opposite meridians
        dr = block[:, None, 0] + pts[None, :, 0]
        dz = block[:, None, 1] - pts[None, :, 1]
        return np.hypot(dr, dz)

    def enclosed_profile_area(self) -> float:
        """Area enclosed by a torus-like profile loop in the meridian plane."""
        if self.topology is not Topology.TORUS:
            raise GeometryError("profile loop area is defined for torus-like profiles only")
        r, z = self._profile[:, 0], self._profile[:, 1]
        return 0.5 * float(np.sum(r * np.roll(z, -1) - np.roll(r, -1) * z))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": SCHEMA_TAG,
            "type": self.kind,
            "nodes": self._profile.tolist(),
            "flags": {"topology": self.topology.value},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProfileSurface":
        flags = data.get("flags", {})
        return cls(data["nodes"], topology=Topology(flags.get("topology", Topology.SPHERE.value)))
