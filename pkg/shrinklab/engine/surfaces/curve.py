"""
Polygonal plane curves, the one-dimensional hypersurface model.
"""

from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..errors import GeometryError
from ..types import LocalGeometry
from .base import (
    SCHEMA_TAG,
    BaseSurface,
    EdgeSet,
    check_nodes,
    circle_frame,
    first_self_intersection,
    uniform_resample,
)


class DiscreteCurve(BaseSurface):
    """A closed or open polygonal curve in the plane.

    The outward unit normal is the right-hand rotation of the tangent times
    ``orientation``; for a counter-clockwise circle with orientation +1 the
    normal points away from the centre and H = 1/R > 0.

    Open curves model truncated non-compact curves such as lines; their end
    nodes are treated as fixed boundary nodes.
    """

    kind = "curve"
    dim = 1
    ambient_dim = 2

    def __init__(
        self,
        points: Any,
        closed: bool = True,
        orientation: int = 1,
        immersed: bool = False,
        check_simple: bool = True,
    ):
        """Create a curve.

        Args:
            points: Node positions, shape (N, 2), N >= 8.
            closed: Whether the last node joins the first.
            orientation: +1 or -1, sign of the outward normal.
            immersed: Allow self-intersections (Abresch-Langer type curves).
            check_simple: Run the O(N²) simplicity test for embedded closed
                curves. Flow steps skip it and validate at sample times.

        Raises:
            GeometryError: If an invariant fails.
        """
        if orientation not in (1, -1):
            raise GeometryError(f"orientation must be +1 or -1, got {orientation}")
        self._points = check_nodes(points)
        self.closed = bool(closed)
        self.orientation = int(orientation)
        self.immersed = bool(immersed)
        self._geometry: Optional[LocalGeometry] = None

        p = self._points
        steps = np.roll(p, -1, axis=0) - p if self.closed else np.diff(p, axis=0)
        lengths = np.linalg.norm(steps, axis=1)
        scale = max(float(np.abs(self._points).max()), 1.0)
        zero = np.flatnonzero(lengths <= 1e-14 * scale)
        if zero.size:
            raise GeometryError("consecutive nodes coincide", node=int(zero[0]))
        if self.closed and not self.immersed and check_simple:
            crossing = first_self_intersection(self._points, closed=True)
            if crossing is not None:
                raise GeometryError("closed curve is not simple", node=crossing)

    # =========================================================================
    # BaseSurface interface
    # =========================================================================

    @property
    def nodes(self) -> np.ndarray:
        return self._points

    @property
    def is_closed(self) -> bool:
        return self.closed

    def embed(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=float)

    def edges(self) -> EdgeSet:
        n = self.n_nodes
        i = np.arange(n if self.closed else n - 1)
        j = (i + 1) % n
        length = np.linalg.norm(self._points[j] - self._points[i], axis=1)
        return EdgeSet(i=i, j=j, flux=1.0 / length,
                       midpoints=0.5 * (self._points[i] + self._points[j]))

    def local_geometry(self) -> LocalGeometry:
        if self._geometry is not None:
            return self._geometry
        p = self._points
        if self.closed:
            prev, nxt = np.roll(p, 1, axis=0), np.roll(p, -1, axis=0)
            tangent, kappa = circle_frame(prev, p, nxt)
            lengths = np.linalg.norm(nxt - p, axis=1)
            measure = 0.5 * (lengths + np.roll(lengths, 1))
        else:
            tangent = np.empty_like(p)
            kappa = np.empty(len(p))
            tangent[1:-1], kappa[1:-1] = circle_frame(p[:-2], p[1:-1], p[2:])
            for end, other in ((0, 1), (-1, -2)):
                step = p[end] - p[other] if end == -1 else p[other] - p[end]
                tangent[end] = step / np.linalg.norm(step)
            kappa[0], kappa[-1] = kappa[1], kappa[-2]
            lengths = np.linalg.norm(np.diff(p, axis=0), axis=1)
            measure = np.zeros(len(p))
            measure[:-1] += 0.5 * lengths
            measure[1:] += 0.5 * lengths

        normals = self.orientation * np.column_stack([tangent[:, 1], -tangent[:, 0]])
        H = self.orientation * kappa
        self._geometry = LocalGeometry(
            positions=p.copy(),
            normals=normals,
            H=H,
            A2=H ** 2,
            measure=measure,
            tangents=tangent[:, None, :],
            principal=-H[:, None],
        )
        return self._geometry

    def with_nodes(self, nodes: np.ndarray, check_simple: bool = True) -> "DiscreteCurve":
        return DiscreteCurve(nodes, closed=self.closed, orientation=self.orientation,
                             immersed=self.immersed, check_simple=check_simple)

    def resample(self, n_nodes: Optional[int] = None, check_simple: bool = True) -> "DiscreteCurve":
        n_nodes = n_nodes or self.n_nodes
        return self.with_nodes(uniform_resample(self._points, n_nodes, self.closed), check_simple)

    def translate(self, v: Sequence[float]) -> "DiscreteCurve":
        shift = np.asarray(v, dtype=float)
        if shift.shape != (2,):
            raise GeometryError(f"curve translation must be a plane vector, got shape {shift.shape}")
        return self.with_nodes(self._points + shift)

    # =========================================================================
    # Curve-specific helpers
    # =========================================================================

    def enclosed_area(self) -> float:
        """Signed area enclosed by a closed polygon (positive counter-clockwise)."""
        if not self.closed:
            raise GeometryError("enclosed area is defined for closed curves only")
        x, y = self._points[:, 0], self._points[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def centroid(self) -> np.ndarray:
        """Area centroid of a closed polygon."""
        x, y = self._points[:, 0], self._points[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = 0.5 * cross.sum()
        return np.array([np.sum((x + xn) * cross), np.sum((y + yn) * cross)]) / (6.0 * area)

    def isoperimetric_ratio(self) -> float:
        """L² / (4π·Area); equal to 1 exactly for round circles."""
        return self.area() ** 2 / (4.0 * np.pi * abs(self.enclosed_area()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": SCHEMA_TAG,
            "type": self.kind,
            "nodes": self._points.tolist(),
            "flags": {
                "closed": self.closed,
                "orientation": self.orientation,
                "immersed": self.immersed,
            },
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DiscreteCurve":
        flags = data.get("flags", {})
        return cls(
            data["nodes"],
            closed=flags.get("closed", True),
            orientation=flags.get("orientation", 1),
            immersed=flags.get("immersed", False),
        )
