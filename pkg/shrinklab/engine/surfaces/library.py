"""
Built-in surface library.

Every factory places nodes exactly on the analytic shape at quasi-uniform
arclength, so discretization error comes from the stencils alone.
"""

import json
import logging
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import GeometryError, GoldenFileMissing
from ..types import Topology
from .curve import DiscreteCurve
from .profile import ProfileSurface

logger = logging.getLogger(__name__)

SQRT2 = float(np.sqrt(2.0))


def _arclength_nodes(
    shape: Callable[[np.ndarray], np.ndarray],
    t_start: float,
    t_end: float,
    n_nodes: int,
    closed: bool,
    oversample: int = 64,
) -> np.ndarray:
    """Evaluate ``shape`` at parameters equally spaced in arclength."""
    fine_t = np.linspace(t_start, t_end, oversample * n_nodes + 1)
    fine = shape(fine_t)
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(fine, axis=0), axis=1))])
    if closed:
        targets = np.linspace(0.0, s[-1], n_nodes + 1)[:-1]
    else:
        targets = np.linspace(0.0, s[-1], n_nodes)
    return shape(np.interp(targets, s, fine_t))


def _piecewise_path(pieces: Sequence[Tuple], n_nodes: int) -> np.ndarray:
    """Nodes equally spaced along a path of circular arcs and segments.

    Pieces are ``("arc", centre, radius, angle_start, angle_end)`` or
    ``("segment", start, end)``; each piece is parametrized exactly by
    arclength.
    """
    lengths = []
    for piece in pieces:
        if piece[0] == "arc":
            lengths.append(piece[2] * abs(piece[4] - piece[3]))
        else:
            lengths.append(float(np.linalg.norm(np.subtract(piece[2], piece[1]))))
    bounds = np.concatenate([[0.0], np.cumsum(lengths)])
    targets = np.linspace(0.0, bounds[-1], n_nodes)
    out = np.empty((n_nodes, 2))
    which = np.clip(np.searchsorted(bounds, targets, side="right") - 1, 0, len(pieces) - 1)
    for k, piece in enumerate(pieces):
        sel = which == k
        u = (targets[sel] - bounds[k]) / lengths[k]
        if piece[0] == "arc":
            _, centre, radius, a0, a1 = piece
            angle = a0 + u * (a1 - a0)
            out[sel] = np.asarray(centre) + radius * np.column_stack([np.cos(angle), np.sin(angle)])
        else:
            _, p0, p1 = piece
            out[sel] = np.asarray(p0) + u[:, None] * (np.asarray(p1) - np.asarray(p0))
    return out


# =============================================================================
# Curves
# =============================================================================

def circle(radius: float = SQRT2, n_nodes: int = 256,
           center: Sequence[float] = (0.0, 0.0)) -> DiscreteCurve:
    """Counter-clockwise circle with outward normal (the shrinker for radius √2)."""
    if not radius > 0:
        raise GeometryError(f"circle radius must be positive, got {radius}")
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    pts = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)]) + np.asarray(center)
    return DiscreteCurve(pts, closed=True)


def ellipse(a: float = 1.0, b: float = 2.0, n_nodes: int = 256) -> DiscreteCurve:
    """Axis-aligned ellipse with semi-axes (a, b) centred at the origin."""
    if not (a > 0 and b > 0):
        raise GeometryError(f"ellipse semi-axes must be positive, got ({a}, {b})")

    def shape(t):
        return np.column_stack([a * np.cos(t), b * np.sin(t)])

    return DiscreteCurve(_arclength_nodes(shape, 0.0, 2.0 * np.pi, n_nodes, closed=True))


def line(half_length: float = 12.0, n_nodes: int = 257, offset: float = 0.0) -> DiscreteCurve:
    """The horizontal line y = offset, truncated to |x| <= half_length."""
    x = np.linspace(-half_length, half_length, n_nodes)
    return DiscreteCurve(np.column_stack([x, np.full(n_nodes, offset)]), closed=False)


# =============================================================================
# Profiles
# =============================================================================

def sphere(radius: float = 2.0, n_nodes: int = 257) -> ProfileSurface:
    """Round sphere about the origin (the shrinker for radius 2)."""
    if not radius > 0:
        raise GeometryError(f"sphere radius must be positive, got {radius}")
    phi = np.linspace(-0.5 * np.pi, 0.5 * np.pi, n_nodes)
    return ProfileSurface(np.column_stack([radius * np.cos(phi), radius * np.sin(phi)]),
                          topology=Topology.SPHERE)


def ellipsoid(a: float = 1.0, c: float = 1.5, n_nodes: int = 257) -> ProfileSurface:
    """Ellipsoid of revolution with equatorial radius a and polar semi-axis c."""
    if not (a > 0 and c > 0):
        raise GeometryError(f"ellipsoid semi-axes must be positive, got ({a}, {c})")

    def shape(t):
        return np.column_stack([a * np.cos(t), c * np.sin(t)])

    nodes = _arclength_nodes(shape, -0.5 * np.pi, 0.5 * np.pi, n_nodes, closed=False)
    nodes[0, 0] = nodes[-1, 0] = 0.0
    return ProfileSurface(nodes, topology=Topology.SPHERE)


def cylinder(radius: float = SQRT2, half_length: float = 12.0, n_nodes: int = 257) -> ProfileSurface:
    """Round cylinder about the z-axis, truncated to |z| <= half_length."""
    if not radius > 0:
        raise GeometryError(f"cylinder radius must be positive, got {radius}")
    z = np.linspace(-half_length, half_length, n_nodes)
    return ProfileSurface(np.column_stack([np.full(n_nodes, radius), z]), topology=Topology.CYLINDER)


def dumbbell(
    lobe_radius: float = 1.5,
    neck_radius: float = 0.2,
    fillet: float = 0.3,
    lobe_centre: float = 2.2,
    n_nodes: int = 513,
) -> ProfileSurface:
    """Two spheres joined by a thin neck, smoothed by concave fillet arcs.

    Args:
        lobe_radius: Radius of the two spherical lobes.
        neck_radius: Radius of the cylindrical neck.
        fillet: Radius of the arcs joining lobes to the neck.
        lobe_centre: Lobe centres sit at z = ±lobe_centre.
        n_nodes: Profile node count.
    """
    R, rho, f, c = lobe_radius, neck_radius, fillet, lobe_centre
    reach = (R + f) ** 2 - (rho + f) ** 2
    if reach <= 0 or not 0 < rho < R:
        raise GeometryError("dumbbell fillet cannot join lobe and neck")
    z_f = c - np.sqrt(reach)
    if z_f <= 0:
        raise GeometryError("dumbbell lobes overlap; increase lobe_centre")
    tangency = np.arctan2(c - z_f, rho + f)
    pieces = [
        ("arc", (0.0, -c), R, -0.5 * np.pi, tangency),
        ("arc", (rho + f, -z_f), f, np.pi + tangency - 2.0 * np.pi, -np.pi),
        ("segment", (rho, -z_f), (rho, z_f)),
        ("arc", (rho + f, z_f), f, np.pi, np.pi - tangency),
        ("arc", (0.0, c), R, -tangency, 0.5 * np.pi),
    ]
    nodes = _piecewise_path(pieces, n_nodes)
    nodes[0, 0] = nodes[-1, 0] = 0.0
    return ProfileSurface(nodes, topology=Topology.SPHERE)


def torus(golden_path: Union[str, Path], n_nodes: Optional[int] = None) -> ProfileSurface:
    """Load the computed shrinking torus profile from its golden file.

    Raises:
        GoldenFileMissing: If the golden file does not exist.
    """
    path = Path(golden_path)
    if not path.exists():
        raise GoldenFileMissing(
            f"golden torus file not found at {path}; run 'shrinklab solve' or scripts/make_golden.py to create it"
        )
    with open(path, "r") as f:
        data = json.load(f)
    surface = ProfileSurface.from_dict(data["surface"])
    logger.debug("Loaded golden torus with %d nodes from %s", surface.n_nodes, path)
    if n_nodes and n_nodes != surface.n_nodes:
        surface = surface.resample(n_nodes)
    return surface


def round_product(ambient_dim: int = 3, sphere_dim: int = 1, radius: Optional[float] = None):
    """Analytic round product S^k x R^(n-k)."""
    from .product import RoundProduct

    return RoundProduct(ambient_dim, sphere_dim, radius)


def shrinker_names() -> List[str]:
    """Library entries that are shrinkers at their default parameters."""
    return ["circle", "sphere", "cylinder", "line", "torus"]
