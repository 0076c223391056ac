"""
Pointwise geometry and normal-graph perturbations of discretized surfaces.

The discrete Laplacian is the finite-volume one assembled from the edge
fluxes and node measures of the surface, the same data that the weighted
stability operator is built from.
"""

import logging
from typing import Any, Sequence, Tuple, Union

import numpy as np

from .errors import GeometryError
from .surfaces import BaseSurface, RoundProduct
from .types import LocalGeometry, RoundProductGeometry

logger = logging.getLogger(__name__)

GRAPH_AMPLITUDE_LIMIT = 0.5
QUASI_UNIFORM_RATIO = 1.1


def local_geometry(surface: BaseSurface) -> LocalGeometry:
    """Per-node normal, H, |A|² and measure of a discretized surface."""
    if isinstance(surface, RoundProduct):
        raise GeometryError("round products carry analytic geometry; use round_product_geometry")
    return surface.local_geometry()


def round_product_geometry(p: RoundProduct) -> RoundProductGeometry:
    """Exact H, |A|² and Gaussian density of a round product."""
    return p.geometry()


def dilate(surface: Any, alpha: float) -> Any:
    return surface.dilate(alpha)


def translate(surface: Any, v: Sequence[float]) -> Any:
    return surface.translate(v)


def _field(surface: BaseSurface, f: Union[float, np.ndarray]) -> np.ndarray:
    values = np.broadcast_to(np.asarray(f, dtype=float), (surface.n_nodes,)).copy()
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise GeometryError("non-finite perturbation field", node=int(bad[0]))
    return values


def laplacian(surface: BaseSurface, f: Union[float, np.ndarray]) -> np.ndarray:
    """Finite-volume Laplace-Beltrami operator applied to a node field.

    For profile surfaces this is the Laplacian of the rotation-invariant
    extension of ``f``.
    """
    f = _field(surface, f)
    e = surface.edges()
    flow = e.flux * (f[e.j] - f[e.i])
    out = np.zeros(surface.n_nodes)
    np.add.at(out, e.i, flow)
    np.add.at(out, e.j, -flow)
    return out / surface.local_geometry().measure


def arclength_derivative(surface: BaseSurface, f: Union[float, np.ndarray]) -> np.ndarray:
    """Derivative of a node field along the curve or profile arclength.

    Interior nodes use the second-order three-point formula for uneven
    spacing. Poles of sphere-like profiles get zero; open ends are one-sided.
    """
    f = _field(surface, f)
    p = surface.nodes
    n = len(p)
    if surface.is_periodic:
        prev_i, next_i = np.roll(np.arange(n), 1), np.roll(np.arange(n), -1)
        interior = np.arange(n)
    else:
        prev_i, next_i = np.arange(n) - 1, np.arange(n) + 1
        interior = np.arange(1, n - 1)
    out = np.zeros(n)
    im, ip = prev_i[interior], next_i[interior]
    lm = np.linalg.norm(p[interior] - p[im], axis=1)
    lp = np.linalg.norm(p[ip] - p[interior], axis=1)
    out[interior] = (lm ** 2 * f[ip] - lp ** 2 * f[im] - (lm ** 2 - lp ** 2) * f[interior]) / (
        lm * lp * (lm + lp))
    if not surface.is_periodic:
        poles = getattr(surface, "poles", np.array([], dtype=int))
        for end, other, sign in ((0, 1, 1.0), (n - 1, n - 2, -1.0)):
            if end in poles:
                continue
            out[end] = sign * (f[other] - f[end]) / np.linalg.norm(p[other] - p[end])
    return out


def gradient(surface: BaseSurface, f: Union[float, np.ndarray]) -> np.ndarray:
    """Tangential gradient ∇f as ambient vectors (N, ambient_dim)."""
    g = surface.local_geometry()
    return arclength_derivative(surface, f)[:, None] * g.tangents[:, 0, :]


def normal_graph(
    surface: BaseSurface,
    f: Union[float, np.ndarray],
    s: float,
    resample: Union[bool, None] = None,
) -> BaseSurface:
    """The normal graph {x + s·f(x)·n(x)} as a surface of the same type.

    Args:
        surface: Base surface.
        f: Node field (or constant).
        s: Amplitude.
        resample: True to always resample, False to keep the displaced
            nodes, None to resample only when adjacent edges drift apart by
            more than 10%.

    Raises:
        GeometryError: If |s·f|·max|A| >= 0.5 somewhere (the graph may fold).
    """
    if isinstance(surface, RoundProduct):
        raise GeometryError("normal graphs are built on discretized surfaces")
    f = _field(surface, f)
    if s == 0.0 or not np.any(f):
        return surface
    g = surface.local_geometry()
    amplitude = np.abs(s * f) * float(np.sqrt(g.A2.max()))
    worst = int(np.argmax(amplitude))
    if amplitude[worst] >= GRAPH_AMPLITUDE_LIMIT:
        raise GeometryError(
            f"normal graph amplitude {amplitude[worst]:.3g} exceeds {GRAPH_AMPLITUDE_LIMIT}",
            node=worst,
        )
    moved = surface.nodes + (s * f)[:, None] * surface.restrict(g.normals)
    out = surface.with_nodes(moved)
    if resample or (resample is None and out.adjacent_edge_ratio() > QUASI_UNIFORM_RATIO):
        logger.debug("Resampling normal graph of %s (%d nodes)", surface.kind, surface.n_nodes)
        out = out.resample()
    return out


def linearized_H_and_normal(
    surface: BaseSurface, f: Union[float, np.ndarray]
) -> Tuple[np.ndarray, np.ndarray]:
    """First-order change of H and n under the normal variation f·n.

    Returns:
        (H′ = −Δf − |A|²f, n′ = −∇f)
    """
    g = surface.local_geometry()
    f = _field(surface, f)
    return -laplacian(surface, f) - g.A2 * f, -gradient(surface, f)


def finite_difference_H_and_normal(
    surface: BaseSurface, f: Union[float, np.ndarray], s: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Forward differences (H_s − H)/s and (n_s − n)/s along the normal graph."""
    base = surface.local_geometry()
    moved = normal_graph(surface, f, s, resample=False).local_geometry()
    return (moved.H - base.H) / s, (moved.normals - base.normals) / s


def mean_curvature_vector_defect(surface: BaseSurface) -> float:
    """|∫ H n dμ| relative to ∫ |H| dμ; zero for closed surfaces.

    For profiles only the axial component survives the rotation average.
    """
    g = surface.local_geometry()
    weighted = (g.H * g.measure)[:, None] * g.normals
    total = weighted.sum(axis=0)
    if surface.kind == "profile":
        total = total[[2]]
    scale = float(np.sum(np.abs(g.H) * g.measure))
    return float(np.linalg.norm(total)) / max(scale, 1e-300)


# =============================================================================
# Distances between discretized shapes
# =============================================================================

def point_to_polyline(points: np.ndarray, polyline: np.ndarray, closed: bool) -> np.ndarray:
    """Distance from each point to the nearest segment of a polyline."""
    a = polyline
    b = np.roll(polyline, -1, axis=0) if closed else polyline[1:]
    if not closed:
        a = polyline[:-1]
    seg = b - a
    seg_len2 = np.maximum(np.einsum("ij,ij->i", seg, seg), 1e-300)
    out = np.empty(len(points))
    for start in range(0, len(points), 256):
        block = points[start:start + 256]
        rel = block[:, None, :] - a[None, :, :]
        u = np.clip(np.einsum("pik,ik->pi", rel, seg) / seg_len2, 0.0, 1.0)
        nearest = a[None, :, :] + u[:, :, None] * seg[None, :, :]
        out[start:start + 256] = np.min(np.linalg.norm(block[:, None, :] - nearest, axis=2), axis=1)
    return out


def hausdorff_distance(a: np.ndarray, b: np.ndarray, closed: bool = True) -> float:
    """Symmetric Hausdorff distance between two polylines given by their nodes."""
    return float(max(point_to_polyline(a, b, closed).max(), point_to_polyline(b, a, closed).max()))
