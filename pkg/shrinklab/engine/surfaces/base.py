"""
Base surface abstract class.

All discretized surface models implement this interface. A discretized surface
is a set of nodes with a finite-volume structure: every node owns a cell of
measure ``dμ_i`` and neighbouring nodes are joined by edges with a flux
coefficient, so quadrature, Laplacians and the weighted stability operator are
all assembled from the same data.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..errors import GeometryError

SCHEMA_TAG = "shrinklab.surface/1"


@dataclass(frozen=True, eq=False)
class EdgeSet:
    """Edges of the finite-volume graph.

    Attributes:
        i: First node of each edge.
        j: Second node of each edge.
        flux: Flux coefficient (cross-section over edge length).
        midpoints: Edge midpoints in ambient coordinates.
    """
    i: np.ndarray
    j: np.ndarray
    flux: np.ndarray
    midpoints: np.ndarray


class BaseSurface(ABC):
    """Abstract base class for discretized hypersurface models.

    Subclasses are immutable after construction; operations return new
    instances.
    """

    # Model metadata (override in subclasses)
    kind: str = "base"
    dim: int = 0
    ambient_dim: int = 0

    @property
    @abstractmethod
    def nodes(self) -> np.ndarray:
        """Node coordinates in the model plane (curve plane or meridian plane)."""

    @property
    def n_nodes(self) -> int:
        """Number of nodes."""
        return len(self.nodes)

    @property
    @abstractmethod
    def is_closed(self) -> bool:
        """True when the hypersurface is compact without boundary."""

    @abstractmethod
    def local_geometry(self):
        """Per-node geometry (normal, H, |A|², measure)."""

    @abstractmethod
    def edges(self) -> EdgeSet:
        """Finite-volume edges of the discretization."""

    @abstractmethod
    def with_nodes(self, nodes: np.ndarray, check_simple: bool = True) -> "BaseSurface":
        """Return a surface of the same type and flags with new node positions."""

    @abstractmethod
    def resample(self, n_nodes: Optional[int] = None, check_simple: bool = True) -> "BaseSurface":
        """Redistribute nodes to quasi-uniform arclength."""

    @abstractmethod
    def embed(self, values: np.ndarray) -> np.ndarray:
        """Map model-plane vectors (N, 2) to ambient vectors (N, ambient_dim)."""

    def restrict(self, vectors: np.ndarray) -> np.ndarray:
        """Inverse of ``embed``: ambient vectors back to the model plane."""
        return np.asarray(vectors, dtype=float)

    @abstractmethod
    def translate(self, v: Sequence[float]) -> "BaseSurface":
        """Translate by an ambient vector."""

    def dilate(self, alpha: float) -> "BaseSurface":
        """Dilate about the origin by alpha > 0.

        Raises:
            GeometryError: If alpha is not positive.
        """
        if not alpha > 0:
            raise GeometryError(f"dilation factor must be positive, got {alpha}")
        return self.with_nodes(self.nodes * float(alpha))

    def edge_lengths(self) -> np.ndarray:
        """Lengths of the edges in the model plane, in edge order."""
        e = self.edges()
        return np.linalg.norm(self.nodes[e.j] - self.nodes[e.i], axis=1)

    def needs_resample(self, ratio: float = 1.5) -> bool:
        """True when the longest edge exceeds ``ratio`` times the shortest."""
        lengths = self.edge_lengths()
        return bool(lengths.max() > ratio * lengths.min())

    def adjacent_edge_ratio(self) -> float:
        """Largest length ratio between neighbouring edges (1 for uniform nodes)."""
        lengths = self.edge_lengths()
        if len(lengths) == self.n_nodes:
            cur, nxt = lengths, np.roll(lengths, -1)
        else:
            cur, nxt = lengths[:-1], lengths[1:]
        return float(np.max(np.maximum(cur / nxt, nxt / cur)))

    @property
    def is_periodic(self) -> bool:
        """True when the node sequence wraps around (closed curves, torus profiles)."""
        return len(self.edges().i) == self.n_nodes

    def area(self) -> float:
        """Total measure (length for curves, area for surfaces)."""
        return float(self.local_geometry().measure.sum())

    def diameter(self) -> float:
        """Extrinsic diameter of the surface in ambient space."""
        pts = self.nodes
        best = 0.0
        for start in range(0, len(pts), 512):
            best = max(best, float(self._pair_distances(pts[start:start + 512], pts).max()))
        return best

    def _pair_distances(self, block: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Ambient distances between every node of ``block`` and of ``pts``."""
        return np.linalg.norm(block[:, None, :] - pts[None, :, :], axis=2)

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible record with schema tag."""


def check_nodes(points: Any, min_nodes: int = 8) -> np.ndarray:
    """Validate a node array and return it as a read-only float array.

    Args:
        points: Array-like of shape (N, 2).
        min_nodes: Minimum node count.

    Returns:
        Read-only float64 array.

    Raises:
        GeometryError: On wrong shape, too few nodes, or non-finite entries.
    """
    arr = np.array(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError(f"nodes must have shape (N, 2), got {arr.shape}")
    if len(arr) < min_nodes:
        raise GeometryError(f"at least {min_nodes} nodes required, got {len(arr)}")
    bad = np.flatnonzero(~np.isfinite(arr).all(axis=1))
    if bad.size:
        raise GeometryError("non-finite node coordinate", node=int(bad[0]))
    arr.setflags(write=False)
    return arr


def circle_frame(prev: np.ndarray, cur: np.ndarray, nxt: np.ndarray):
    """Three-point tangent and curvature from the circle through each triple.

    The tangent is that of the circumscribed circle at the middle point and
    the curvature is the signed inverse circumradius (positive for a left
    turn). Both are exact for nodes on a circle and second order for smooth
    curves sampled quasi-uniformly.

    Args:
        prev: Previous points (N, 2).
        cur: Current points (N, 2).
        nxt: Next points (N, 2).

    Returns:
        Tuple (unit tangents (N, 2), signed curvature (N,)).

    Raises:
        GeometryError: If two consecutive points coincide.
    """
    e_minus = cur - prev
    e_plus = nxt - cur
    lm = np.linalg.norm(e_minus, axis=1)
    lp = np.linalg.norm(e_plus, axis=1)
    scale = max(float(np.abs(cur).max()), 1.0)
    for lengths in (lm, lp):
        degenerate = np.flatnonzero(lengths <= 1e-14 * scale)
        if degenerate.size:
            raise GeometryError("degenerate edge of zero length", node=int(degenerate[0]))
    tangent = (lm / lp)[:, None] * e_plus + (lp / lm)[:, None] * e_minus
    tangent /= np.linalg.norm(tangent, axis=1)[:, None]
    chord = np.linalg.norm(e_minus + e_plus, axis=1)
    cross = e_minus[:, 0] * e_plus[:, 1] - e_minus[:, 1] * e_plus[:, 0]
    kappa = 2.0 * cross / (lm * lp * chord)
    return tangent, kappa


def first_self_intersection(points: np.ndarray, closed: bool = True) -> Optional[int]:
    """Index of the first segment that properly crosses a non-adjacent one.

    Args:
        points: Polygon nodes (N, 2).
        closed: Whether the last node connects back to the first.

    Returns:
        Segment index, or None when the polygon is simple.
    """
    a = points
    b = np.roll(points, -1, axis=0) if closed else points[1:]
    if not closed:
        a = points[:-1]
    m = len(a)

    def orient(p, q, r):
        return np.sign((q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1])
                       - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0]))

    for i in range(m - 2):
        js = np.arange(i + 2, m)
        if closed and i == 0:
            js = js[js != m - 1]
        if js.size == 0:
            continue
        p1, p2 = a[i], b[i]
        q1, q2 = a[js], b[js]
        d1 = orient(p1, p2, q1)
        d2 = orient(p1, p2, q2)
        d3 = orient(q1, q2, p1[None, :])
        d4 = orient(q1, q2, p2[None, :])
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return i
    return None


def uniform_resample(points: np.ndarray, n_nodes: int, closed: bool) -> np.ndarray:
    """Resample a polyline to ``n_nodes`` points equally spaced in spline arclength.

    Closed polygons use a periodic cubic spline in chord length; open ones a
    natural spline with the end nodes kept fixed.
    """
    from scipy.interpolate import CubicSpline

    if closed:
        pts = np.vstack([points, points[:1]])
    else:
        pts = points
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    u = np.concatenate([[0.0], np.cumsum(seg)])
    spline = CubicSpline(u, pts, bc_type="periodic" if closed else "natural", axis=0)
    # arclength of the spline on a fine grid, inverted by interpolation
    fine = np.linspace(0.0, u[-1], 16 * len(pts) + 1)
    fine_pts = spline(fine)
    fine_s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(fine_pts, axis=0), axis=1))])
    if closed:
        targets = np.linspace(0.0, fine_s[-1], n_nodes + 1)[:-1]
    else:
        targets = np.linspace(0.0, fine_s[-1], n_nodes)
    params = np.interp(targets, fine_s, fine)
    out = spline(params)
    if not closed:
        out[0], out[-1] = points[0], points[-1]
    return out


def polyline_resample(points: np.ndarray, n_nodes: int, closed: bool) -> np.ndarray:
    """Linear arclength resampling of a dense polyline."""
    pts = np.vstack([points, points[:1]]) if closed else points
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    targets = np.linspace(0.0, s[-1], n_nodes + 1)[:-1] if closed else np.linspace(0.0, s[-1], n_nodes)
    return np.column_stack([np.interp(targets, s, pts[:, 0]), np.interp(targets, s, pts[:, 1])])
