"""
Gaussian-weighted functionals: F_{x0,t0}, the entropy λ, their variations and
monotonicity probes.

F_{x0,t0}(Σ) = (4πt0)^{-n/2} ∫_Σ e^{-|x-x0|²/4t0} dμ is evaluated by node
quadrature on curves and profiles. Profiles integrate the rotation angle in
closed form (a modified Bessel factor), and the straight ends of open curves
and cylinder-like profiles are continued to infinity in closed form. The
reported tail bound is the Gaussian weight that any end leaving the ball
through its last node can carry when its measure in B_r grows at most like a
ray or a cylinder, which bounds the error of the continuation.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import erfc, ive

from .errors import GeometryError
from .surfaces import DiscreteCurve, ProfileSurface, RoundProduct
from .types import (
    EntropyResult,
    FEvaluation,
    FlowTrace,
    MonotoneSeries,
    Topology,
    VolumeGrowthReport,
)

logger = logging.getLogger(__name__)

TAIL_TOLERANCE = 1e-8
ARMIJO = 1e-4


def _check_t0(t0: float):
    if not t0 > 0:
        raise ValueError(f"t0 must be positive, got {t0}")


def _end_tail(distance: np.ndarray, t: float, dim: int, circumference: float = 1.0) -> np.ndarray:
    """Bound on the normalized Gaussian weight of an end outside B_distance.

    The end is taken to have measure at most 2·circumference·r inside B_r,
    as a ray (circumference 1) or a round cylinder end does. Integrating the
    weight against that growth gives 4·circumference·√t·Γ(3/2, distance²/4t).
    """
    s = distance / (2.0 * np.sqrt(t))
    upper_gamma = 0.5 * np.sqrt(np.pi) * erfc(s) + s * np.exp(-s * s)
    return (4.0 * np.pi * t) ** (-0.5 * dim) * 4.0 * circumference * np.sqrt(t) * upper_gamma


# =============================================================================
# Vectorized kernels: values and gradients at many centres for one t0
# =============================================================================

@dataclass
class _Kernel:
    value: np.ndarray
    grad_x: Optional[np.ndarray]
    grad_t: Optional[np.ndarray]
    tail: np.ndarray


def _curve_kernel(curve: DiscreteCurve, centers: np.ndarray, t: float, grad: bool) -> _Kernel:
    g = curve.local_geometry()
    P, m = g.positions, g.measure
    pref = (4.0 * np.pi * t) ** -0.5
    D = P[None, :, :] - centers[:, None, :]
    d2 = np.einsum("gnk,gnk->gn", D, D)
    E = np.exp(-d2 / (4.0 * t)) * m
    value = pref * E.sum(axis=1)
    tail = np.zeros(len(centers))
    grad_x = grad_t = None
    if grad:
        grad_x = pref * np.einsum("gn,gnk->gk", E, D) / (2.0 * t)
        grad_t = pref * np.sum(E * (d2 / (4.0 * t * t) - 1.0 / (2.0 * t)), axis=1)

    if not curve.is_closed:
        for end, other in ((0, 1), (-1, -2)):
            direction = P[end] - P[other]
            direction = direction / np.linalg.norm(direction)
            q = P[end][None, :] - centers
            b = q @ direction
            perp = q - b[:, None] * direction[None, :]
            c2 = np.einsum("gk,gk->g", perp, perp)
            ray = 0.5 * np.exp(-c2 / (4.0 * t)) * erfc(b / (2.0 * np.sqrt(t)))
            value = value + ray
            tail = tail + _end_tail(np.sqrt(b * b + c2), t, dim=1)
            if grad:
                full = np.exp(-(b * b + c2) / (4.0 * t))
                grad_x = (grad_x + direction[None, :] * (full / (2.0 * np.sqrt(np.pi * t)))[:, None]
                          + ray[:, None] * perp / (2.0 * t))
                grad_t = grad_t + ray * c2 / (4.0 * t * t) + b * full / (4.0 * np.sqrt(np.pi) * t ** 1.5)
    return _Kernel(value, grad_x, grad_t, tail)


def _profile_kernel(surface: ProfileSurface, centers: np.ndarray, t: float, grad: bool) -> _Kernel:
    g = surface.local_geometry()
    r, z = surface.nodes[:, 0], surface.nodes[:, 1]
    m = g.measure
    rho = np.hypot(centers[:, 0], centers[:, 1])
    z0 = centers[:, 2]
    pref = 1.0 / (4.0 * np.pi * t)
    dr = r[None, :] - rho[:, None]
    dz = z[None, :] - z0[:, None]
    q = r[None, :] * rho[:, None] / (2.0 * t)
    i0 = ive(0, q)
    Phi = np.exp(-(dr * dr + dz * dz) / (4.0 * t)) * i0 * m
    value = pref * Phi.sum(axis=1)
    tail = np.zeros(len(centers))
    d_rho = d_z0 = grad_t = None
    if grad:
        ratio = ive(1, q) / i0
        d_rho = pref * np.sum(Phi * (-rho[:, None] + r[None, :] * ratio), axis=1) / (2.0 * t)
        d_z0 = pref * np.sum(Phi * dz, axis=1) / (2.0 * t)
        radial = r[None, :] ** 2 + rho[:, None] ** 2 + dz * dz
        grad_t = pref * np.sum(Phi * (radial / (4.0 * t * t) - q * ratio / t - 1.0 / t), axis=1)

    if surface.topology is Topology.CYLINDER:
        n = len(r)
        for end, other in ((0, 1), (n - 1, n - 2)):
            R = r[end]
            direction = np.sign(z[end] - z[other])
            beta = direction * (z[end] - z0) / (2.0 * np.sqrt(t))
            qR = R * rho / (2.0 * t)
            ring0 = ive(0, qR)
            ring = np.exp(-(R - rho) ** 2 / (4.0 * t)) * ring0
            ray = R * np.sqrt(np.pi) / (2.0 * np.sqrt(t)) * ring * erfc(beta)
            value = value + ray
            gap = np.hypot(R - rho, z[end] - z0)
            tail = tail + _end_tail(gap, t, dim=2, circumference=2.0 * np.pi * R)
            if grad:
                ratio_R = ive(1, qR) / ring0
                edge = np.exp(-beta * beta)
                d_rho = d_rho + ray * (-rho + R * ratio_R) / (2.0 * t)
                d_z0 = d_z0 + R * ring * direction * edge / (2.0 * t)
                grad_t = (grad_t
                          + ray * (-0.5 / t + (R * R + rho * rho) / (4.0 * t * t) - qR * ratio_R / t)
                          + R * ring * beta * edge / (2.0 * t ** 1.5))

    grad_x = None
    if grad:
        grad_x = np.zeros_like(centers)
        safe = rho > 0
        grad_x[safe, 0] = d_rho[safe] * centers[safe, 0] / rho[safe]
        grad_x[safe, 1] = d_rho[safe] * centers[safe, 1] / rho[safe]
        grad_x[:, 2] = d_z0
    return _Kernel(value, grad_x, grad_t, tail)


def _product_kernel(p: RoundProduct, centers: np.ndarray, t: float, grad: bool) -> _Kernel:
    value = np.array([p.f_value(c, t) for c in centers])
    grad_x = grad_t = None
    if grad:
        pairs = [p.f_gradient(c, t) for c in centers]
        grad_x = np.array([gx for gx, _ in pairs])
        grad_t = np.array([gt for _, gt in pairs])
    return _Kernel(value, grad_x, grad_t, np.zeros(len(centers)))


def _kernel(surface: Any, centers: np.ndarray, t: float, grad: bool = False) -> _Kernel:
    _check_t0(t)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if isinstance(surface, RoundProduct):
        return _product_kernel(surface, centers, t, grad)
    if centers.shape[1] != surface.ambient_dim:
        raise GeometryError(
            f"centre must have {surface.ambient_dim} coordinates, got {centers.shape[1]}")
    if isinstance(surface, ProfileSurface):
        return _profile_kernel(surface, centers, t, grad)
    if isinstance(surface, DiscreteCurve):
        return _curve_kernel(surface, centers, t, grad)
    raise TypeError(f"unsupported surface type: {type(surface).__name__}")


def _truncation_radius(surface: Any, x0: np.ndarray) -> float:
    if isinstance(surface, RoundProduct):
        return 0.0
    pos = surface.local_geometry().positions
    return float(np.max(np.linalg.norm(pos - x0, axis=1)))


# =============================================================================
# F-functional
# =============================================================================

def f_functional(surface: Any, x0: Sequence[float], t0: float) -> FEvaluation:
    """Evaluate F_{x0,t0}(Σ).

    Raises:
        ValueError: If t0 <= 0.
    """
    if isinstance(surface, RoundProduct):
        return product_reduce_f(surface, x0, t0)
    x0 = np.asarray(x0, dtype=float)
    k = _kernel(surface, x0[None, :], t0)
    result = FEvaluation(
        value=float(k.value[0]),
        x0=tuple(float(v) for v in x0),
        t0=float(t0),
        truncation_radius=_truncation_radius(surface, x0),
        tail_bound=float(k.tail[0]),
        n_nodes=surface.n_nodes,
    )
    if not result.accepted:
        logger.warning("F at x0=%s t0=%.4g: tail %.3g exceeds %.0e of value %.6g",
                       result.x0, t0, result.tail_bound, TAIL_TOLERANCE, result.value)
    return result


def f_gradient(surface: Any, x0: Sequence[float], t0: float) -> Tuple[np.ndarray, float]:
    """(∂F/∂x0, ∂F/∂t0) at (x0, t0)."""
    x0 = np.asarray(x0, dtype=float)
    if isinstance(surface, RoundProduct):
        _check_t0(t0)
        return surface.f_gradient(x0, t0)
    k = _kernel(surface, x0[None, :], t0, grad=True)
    return k.grad_x[0], float(k.grad_t[0])


def product_reduce_f(p: RoundProduct, x0: Sequence[float], t0: float) -> FEvaluation:
    """F of a round product: exact sphere integral times unit flat marginals."""
    _check_t0(t0)
    x0 = np.asarray(x0, dtype=float)
    return FEvaluation(
        value=p.f_value(x0, t0),
        x0=tuple(float(v) for v in x0),
        t0=float(t0),
        truncation_radius=0.0,
        tail_bound=0.0,
        n_nodes=0,
    )


# =============================================================================
# Entropy
# =============================================================================

class _Chart:
    """Ascent coordinates y = (centre coordinates, log t0) for one surface type."""

    def __init__(self, surface: Any):
        self.surface = surface
        self.profile = isinstance(surface, ProfileSurface)

    def center(self, y: np.ndarray) -> np.ndarray:
        if self.profile:
            return np.array([y[0], 0.0, y[1]])
        return np.asarray(y[:-1], dtype=float)

    def project(self, y: np.ndarray) -> np.ndarray:
        y = y.copy()
        if self.profile:
            y[0] = max(y[0], 0.0)
        y[-1] = np.clip(y[-1], self.log_t_lo, self.log_t_hi)
        return y

    def evaluate(self, y: np.ndarray) -> Tuple[float, np.ndarray]:
        t = float(np.exp(y[-1]))
        k = _kernel(self.surface, self.center(y)[None, :], t, grad=True)
        gx = k.grad_x[0]
        spatial = gx[[0, 2]] if self.profile else gx
        return float(k.value[0]), np.concatenate([spatial, [t * k.grad_t[0]]])

    def projected_gradient(self, y: np.ndarray, g: np.ndarray) -> np.ndarray:
        g = g.copy()
        if self.profile and y[0] <= 0.0 and g[0] < 0:
            g[0] = 0.0
        if (y[-1] <= self.log_t_lo and g[-1] < 0) or (y[-1] >= self.log_t_hi and g[-1] > 0):
            g[-1] = 0.0
        return g


def time_window(surface: Any) -> Tuple[float, float]:
    """Search window for t0: [1e-3·diam², 10·diam²], floored at the node resolution."""
    diam = surface.diameter()
    spacing = float(surface.edge_lengths().max())
    return max(1e-3 * diam ** 2, 4.0 * spacing ** 2), 10.0 * diam ** 2


def default_starts(surface: Any) -> List[np.ndarray]:
    """3×3 spatial × 5 temporal multistart grid in ascent coordinates."""
    nodes = surface.nodes
    lo, hi = nodes.min(axis=0), nodes.max(axis=0)
    if isinstance(surface, ProfileSurface):
        lo = np.array([0.0, lo[1]])
    t_lo, t_hi = time_window(surface)
    axes = [np.linspace(lo[d], hi[d], 3) for d in range(2)]
    times = np.linspace(np.log(t_lo), np.log(t_hi), 5)
    return [np.array([a, b, lt]) for a in axes[0] for b in axes[1] for lt in times]


def _ascend(chart: _Chart, y0: np.ndarray, max_iter: int, gtol: float):
    y = chart.project(np.asarray(y0, dtype=float))
    f, g = chart.evaluate(y)
    pg = chart.projected_gradient(y, g)
    trace = [(tuple(chart.center(y)), float(np.exp(y[-1])), f)]
    step = 1.0
    for _ in range(max_iter):
        if np.linalg.norm(pg) < gtol:
            break
        for _ in range(60):
            y_new = chart.project(y + step * pg)
            f_new, g_new = chart.evaluate(y_new)
            if f_new >= f + ARMIJO * float(pg @ (y_new - y)) and np.any(y_new != y):
                break
            step *= 0.5
        else:
            break
        s_vec, g_diff = y_new - y, g_new - g
        curvature = -float(s_vec @ g_diff)
        step = float(np.clip(s_vec @ s_vec / curvature, 1e-8, 1e4)) if curvature > 0 else 2.0 * step
        y, f, g = y_new, f_new, g_new
        pg = chart.projected_gradient(y, g)
        trace.append((tuple(chart.center(y)), float(np.exp(y[-1])), f))
    return y, f, float(np.linalg.norm(pg)), trace


def entropy(
    surface: Any,
    starts: Optional[Sequence[Sequence[float]]] = None,
    max_iter: int = 500,
    gtol: float = 1e-8,
) -> EntropyResult:
    """λ(Σ) = sup F_{x0,t0}(Σ) by multistart gradient ascent in (x0, log t0).

    Args:
        surface: Closed curve or profile, open curve or cylinder-like profile
            with straight ends, or a round product (closed form).
        starts: Starting points in ascent coordinates (centre, log t0); the
            default is the 3×3×5 grid of ``default_starts``.
        max_iter: Iteration cap per start.
        gtol: Gradient-norm stopping threshold.

    Returns:
        EntropyResult with the best maximum found. Ties within 1e-12 go to
        the largest t0, then to the lexicographically smallest centre.
    """
    if isinstance(surface, RoundProduct):
        k, R = surface.sphere_dim, surface.radius
        t0 = 1.0 if k == 0 else R * R / (2.0 * k)
        x0 = np.zeros(surface.ambient_dim)
        return EntropyResult(lam=surface.f_value(x0, t0), x0=tuple(x0.tolist()), t0=t0,
                             multistart_count=0, converged=True, gradient_norm=0.0)

    chart = _Chart(surface)
    t_lo, t_hi = time_window(surface)
    chart.log_t_lo, chart.log_t_hi = float(np.log(t_lo)), float(np.log(t_hi))
    starts = list(starts) if starts is not None else default_starts(surface)

    best = None
    for y0 in starts:
        y, f, gnorm, trace = _ascend(chart, np.asarray(y0, dtype=float), max_iter, gtol)
        center = tuple(float(v) for v in chart.center(y))
        t0 = float(np.exp(y[-1]))
        candidate = (f, t0, center, gnorm, trace)
        if best is None or f > best[0] * (1 + 1e-12):
            best = candidate
        elif abs(f - best[0]) <= 1e-12 * best[0]:
            if t0 > best[1] or (t0 == best[1] and center < best[2]):
                best = candidate

    f, t0, center, gnorm, trace = best
    converged = gnorm < gtol
    if not converged:
        logger.warning("Entropy ascent stopped with gradient norm %.3g (threshold %.0e)", gnorm, gtol)
    return EntropyResult(lam=f, x0=center, t0=t0, optimizer_trace=trace,
                         multistart_count=len(starts), converged=converged, gradient_norm=gnorm)


def entropy_grid_search(
    surface: Any,
    n_space: int = 64,
    n_time: int = 32,
    margin: float = 0.25,
) -> EntropyResult:
    """Brute-force λ over a dense grid of centres and log-spaced scales."""
    if isinstance(surface, RoundProduct):
        return entropy(surface)
    nodes = surface.nodes
    lo, hi = nodes.min(axis=0), nodes.max(axis=0)
    pad = margin * surface.diameter()
    if isinstance(surface, ProfileSurface):
        rho = np.linspace(0.0, hi[0] + pad, n_space)
        zs = np.linspace(lo[1] - pad, hi[1] + pad, n_space)
        A, B = np.meshgrid(rho, zs, indexing="ij")
        centers = np.column_stack([A.ravel(), np.zeros(A.size), B.ravel()])
    else:
        xs = np.linspace(lo[0] - pad, hi[0] + pad, n_space)
        ys = np.linspace(lo[1] - pad, hi[1] + pad, n_space)
        A, B = np.meshgrid(xs, ys, indexing="ij")
        centers = np.column_stack([A.ravel(), B.ravel()])
    t_lo, t_hi = time_window(surface)
    best = (-np.inf, 0.0, None)
    for t in np.exp(np.linspace(np.log(t_lo), np.log(t_hi), n_time)):
        values = _kernel(surface, centers, float(t)).value
        i = int(np.argmax(values))
        if values[i] > best[0]:
            best = (float(values[i]), float(t), centers[i])
    return EntropyResult(lam=best[0], x0=tuple(best[2].tolist()), t0=best[1],
                         multistart_count=len(centers) * n_time, converged=True)


# =============================================================================
# Variations and monotonicity probes
# =============================================================================

def critical_residual(surface: Any, x0: Sequence[float], t0: float) -> np.ndarray:
    """H − ⟨x−x0, n⟩/2t0 per node; zero exactly at critical points of F_{x0,t0}."""
    _check_t0(t0)
    g = surface.local_geometry()
    rel = g.positions - np.asarray(x0, dtype=float)
    return g.H - np.einsum("ij,ij->i", rel, g.normals) / (2.0 * t0)


def general_first_variation(
    surface: Any,
    x0: Sequence[float],
    t0: float,
    f: Union[float, np.ndarray],
    h: float = 0.0,
    y: Optional[Sequence[float]] = None,
) -> float:
    """d/ds F_{x0+sy, t0+sh}(Σ + s f n) at s = 0.

    The normal part is the node quadrature of f·(H − ⟨x−x0,n⟩/2t0) against
    the Gaussian; the centre and scale parts come from ``f_gradient``.
    """
    x0 = np.asarray(x0, dtype=float)
    g = surface.local_geometry()
    f = np.broadcast_to(np.asarray(f, dtype=float), (surface.n_nodes,))
    n = surface.dim
    rel = g.positions - x0
    weight = (4.0 * np.pi * t0) ** (-n / 2.0) * np.exp(-np.einsum("ij,ij->i", rel, rel) / (4.0 * t0))
    normal_part = float(np.sum(f * critical_residual(surface, x0, t0) * weight * g.measure))
    grad_x, grad_t = f_gradient(surface, x0, t0)
    y = np.zeros(surface.ambient_dim) if y is None else np.asarray(y, dtype=float)
    return normal_part + float(grad_x @ y) + h * grad_t


def lambda_bound_slope(
    surface: Any, x0: Sequence[float], t0: float, lam: Optional[float] = None
) -> Tuple[float, float]:
    """Return (∂F/∂t0, −(λ/4)·sup H²); the first never falls below the second.

    λ defaults to the entropy of the surface.
    """
    _, slope = f_gradient(surface, x0, t0)
    if lam is None:
        lam = entropy(surface).lam
    sup_h2 = float(np.max(surface.local_geometry().H ** 2))
    return slope, -0.25 * lam * sup_h2


def density_trace(trace: FlowTrace, x0: Sequence[float], t0: float, tolerance: float = 1e-6) -> MonotoneSeries:
    """Huisken density ∫Φ_{(x0,t0)} = F_{x0, t0−t}(M_t) along a flow trace.

    Raises:
        ValueError: If t0 is not beyond every trace time.
    """
    times = trace.times
    if times.size == 0 or np.any(times >= t0):
        raise ValueError(f"t0={t0} lies inside the trace time range")
    if np.any(np.diff(times) <= 0):
        raise ValueError("trace times must be strictly increasing")
    values = np.array([
        f_functional(s.surface, x0, t0 - s.time).value for s in trace.samples
    ])
    return MonotoneSeries(params=times, values=values, tolerance=tolerance,
                          label=f"density x0={tuple(np.round(np.asarray(x0, float), 6))} t0={t0:g}")


def volume_growth_check(
    surface: Any,
    V: float,
    n_centers: int = 16,
    n_radii: int = 12,
) -> VolumeGrowthReport:
    """Check Vol(B_r(x0) ∩ Σ) <= V·r^n over a deterministic sample of balls.

    Centres are evenly spaced nodes plus the origin (on the axis for
    profiles, so every ring lies entirely inside or outside a ball); radii
    are geometric from four edge lengths to the diameter.
    """
    g = surface.local_geometry()
    pos = g.positions
    picks = np.unique(np.linspace(0, surface.n_nodes - 1, n_centers).astype(int))
    if surface.kind == "profile":
        centers = np.column_stack([np.zeros(len(picks) + 1), np.zeros(len(picks) + 1),
                                   np.concatenate([[0.0], pos[picks, 2]])])
    else:
        centers = np.vstack([np.zeros((1, pos.shape[1])), pos[picks]])
    radii = np.geomspace(4.0 * surface.edge_lengths().min(), surface.diameter(), n_radii)
    worst = (0.0, centers[0], radii[0])
    for c in centers:
        dist = np.linalg.norm(pos - c, axis=1)
        for r in radii:
            ratio = float(g.measure[dist < r].sum()) / r ** surface.dim
            if ratio > worst[0]:
                worst = (ratio, c, float(r))
    return VolumeGrowthReport(passed=worst[0] <= V, V=float(V), worst_ratio=worst[0],
                              worst_center=tuple(float(v) for v in worst[1]), worst_radius=worst[2])


def radial_path_monotonicity(
    surface: Any,
    y: Sequence[float],
    a: float,
    s_grid: Sequence[float],
    tolerance: float = 1e-10,
) -> MonotoneSeries:
    """g(s) = F_{s·y, 1+a·s²}(Σ) on a verified shrinker; non-increasing for s > 0.

    Raises:
        NotAShrinkerError: If the surface fails the shrinker residual gate.
        ValueError: If 1 + a·s² <= 0 on the grid.
    """
    from .shrinker import require_shrinker

    require_shrinker(surface)
    s_grid = np.asarray(s_grid, dtype=float)
    scales = 1.0 + a * s_grid ** 2
    if np.any(scales <= 0):
        raise ValueError("1 + a·s² must stay positive on the path")
    y = np.asarray(y, dtype=float)
    values = np.array([f_functional(surface, s * y, t).value for s, t in zip(s_grid, scales)])
    return MonotoneSeries(params=s_grid, values=values, tolerance=tolerance,
                          label=f"radial path y={tuple(y.tolist())} a={a:g}")


def entropy_series(surfaces: Sequence[Any], params: Sequence[float], tolerance: float = 1e-6,
                   warm: Optional[Callable[[Any], Sequence[Sequence[float]]]] = None) -> MonotoneSeries:
    """Entropy along a sequence of surfaces (e.g. flow samples)."""
    values = []
    for surface in surfaces:
        starts = warm(surface) if warm else None
        values.append(entropy(surface, starts=starts).lam)
    return MonotoneSeries(params=np.asarray(params, dtype=float), values=np.asarray(values),
                          tolerance=tolerance, label="entropy")
