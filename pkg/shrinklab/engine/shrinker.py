"""
Self-shrinkers: the residual H − ⟨x,n⟩/2, shooting solvers for shrinking
curves and rotationally symmetric profiles, and the weighted integral
identities that hold on every shrinker.

Both ODE solvers integrate in arclength with a fixed-step classical
Runge-Kutta scheme on plain floats. Dense trajectories are turned into
surfaces by cubic Hermite interpolation in arclength (the ODE supplies the
tangents), which keeps interpolation error far below the stencil error.
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import NotAShrinkerError, ShootingError
from .geometry import hausdorff_distance, point_to_polyline
from .surfaces import DiscreteCurve, ProfileSurface, RoundProduct
from .surfaces.base import first_self_intersection
from .types import (
    IdentityReport,
    MinimalConeReport,
    SelfSimilarityReport,
    ShootingResult,
    ShrinkerResidual,
    Topology,
)

logger = logging.getLogger(__name__)

SHRINKER_L2_TOL = 1e-5
SHRINKER_MAX_TOL = 1e-4
DEFAULT_STEP = 1e-3
AXIS_EPS = 1e-6

OUTER_WINDOW = (2.0, 5.0)
INNER_WINDOW = (0.1, 1.4)

State = Tuple[float, ...]


# =============================================================================
# Residual
# =============================================================================

def residual(surface: Any) -> ShrinkerResidual:
    """Per-node H − ⟨x,n⟩/2 with max and Gaussian-weighted L² norms."""
    if isinstance(surface, RoundProduct):
        k, R = surface.sphere_dim, surface.radius
        value = k / R - R / 2.0 if k else 0.0
        return ShrinkerResidual(values=np.array([value]), max=abs(value), l2=abs(value))
    g = surface.local_geometry()
    values = g.H - 0.5 * g.support
    w = np.exp(-g.radius_sq / 4.0) * g.measure
    l2 = float(np.sqrt(np.sum(w * values ** 2) / np.sum(w)))
    return ShrinkerResidual(values=values, max=float(np.max(np.abs(values))), l2=l2)


def require_shrinker(
    surface: Any, l2_tol: float = SHRINKER_L2_TOL, max_tol: float = SHRINKER_MAX_TOL
) -> ShrinkerResidual:
    """Return the residual, or raise if the surface is not a verified shrinker.

    Raises:
        NotAShrinkerError: If either residual norm exceeds its tolerance.
    """
    res = residual(surface)
    if not res.accepted(l2_tol, max_tol):
        raise NotAShrinkerError(
            f"not a self-shrinker: residual max {res.max:.3g} (tol {max_tol:g}), "
            f"weighted L2 {res.l2:.3g} (tol {l2_tol:g})",
            residual_max=res.max,
        )
    return res


# =============================================================================
# Fixed-step integration
# =============================================================================

def _rk4(rhs: Callable[[State], State], state: State, h: float) -> State:
    k1 = rhs(state)
    k2 = rhs(tuple(s + 0.5 * h * k for s, k in zip(state, k1)))
    k3 = rhs(tuple(s + 0.5 * h * k for s, k in zip(state, k2)))
    k4 = rhs(tuple(s + h * k for s, k in zip(state, k3)))
    return tuple(s + h / 6.0 * (a + 2.0 * b + 2.0 * c + d)
                 for s, a, b, c, d in zip(state, k1, k2, k3, k4))


def _refine_crossing(
    rhs: Callable[[State], State],
    state: State,
    h: float,
    value: Callable[[State], float],
    slope: Callable[[State], float],
) -> Tuple[float, State]:
    """Fraction tau of a step where ``value`` vanishes, by Newton on partial steps."""
    v0, v1 = value(state), value(_rk4(rhs, state, h))
    tau = v0 / (v0 - v1) if v0 != v1 else 0.5
    for _ in range(6):
        trial = _rk4(rhs, state, tau * h)
        d = slope(trial) * h
        if d == 0.0:
            break
        step = value(trial) / d
        tau = min(max(tau - step, 0.0), 1.0)
        if abs(step) < 1e-15:
            break
    return tau, _rk4(rhs, state, tau * h)


def _hermite_nodes(
    s: np.ndarray, points: np.ndarray, tangents: np.ndarray, n_nodes: int, closed: bool
) -> np.ndarray:
    """Nodes equally spaced in arclength along a dense arclength trajectory."""
    spline = CubicHermiteSpline(s, points, tangents, axis=0)
    if closed:
        targets = np.linspace(s[0], s[-1], n_nodes + 1)[:-1]
    else:
        targets = np.linspace(s[0], s[-1], n_nodes)
    return spline(targets)


def _wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi


def _finite(state: State) -> bool:
    return all(math.isfinite(v) for v in state)


# =============================================================================
# Shrinking curves
# =============================================================================

def _curve_rhs(state: State) -> State:
    # (x, y, θ, H): x′ = T, θ′ = H, 2H′ = H⟨x, T⟩
    x, y, th, H = state
    c, s = math.cos(th), math.sin(th)
    return (c, s, H, 0.5 * H * (x * c + y * s))


def _curve_start(H0: float, position: Optional[Sequence[float]]) -> Tuple[float, float, float]:
    if position is None:
        return 2.0 * H0, 0.0, 0.5 * math.pi
    px, py = (float(v) for v in position)
    d = math.hypot(px, py)
    if d == 0.0 or abs(2.0 * H0) > d:
        raise ValueError(
            f"no tangent direction at ({px:g}, {py:g}) gives ⟨x,n⟩ = 2H0 = {2.0 * H0:g}")
    return px, py, math.atan2(py, px) + math.asin(2.0 * H0 / d)


def shrinker_curve_ode(
    H0: float,
    position: Optional[Sequence[float]] = None,
    steps: Optional[int] = None,
    h: float = DEFAULT_STEP,
    max_length: float = 60.0,
    escape_radius: float = 20.0,
    closure_tol: float = 1e-8,
    n_nodes: int = 256,
) -> ShootingResult:
    """Integrate a shrinking curve in arclength from curvature H0.

    The start is chosen on the shrinker: at ``position`` (default (2H0, 0))
    the tangent is rotated so that ⟨x,n⟩ = 2H0. The conserved quantity
    E = H²e^{−|x|²/2} is tracked every step and the orbit is checked for
    closure each time it passes the start along the start tangent.

    Args:
        H0: Initial curvature; zero selects the straight-line branch.
        position: Start point, or None for (2H0, 0).
        steps: Step budget; defaults to ``max_length / h``.
        h: Arclength step.
        max_length: Arclength budget when ``steps`` is not given.
        escape_radius: Bound on |x| that signals a non-closing orbit.
        closure_tol: Combined position and angle defect accepted as closure.
        n_nodes: Nodes of the resampled closed curve.

    Returns:
        ShootingResult classified "closed" (with a DiscreteCurve) or "bounded".

    Raises:
        ValueError: If H0 = 0 or no start tangent exists at ``position``.
        ShootingError: If the orbit escapes or the integration blows up.
    """
    if H0 == 0.0:
        raise ValueError("H0 = 0 gives E = 0: the orbit is a straight line through the origin")
    x0, y0, th0 = _curve_start(float(H0), position)
    c0, s0 = math.cos(th0), math.sin(th0)
    E0 = H0 ** 2 * math.exp(-0.5 * (x0 ** 2 + y0 ** 2))
    n_steps = int(steps) if steps is not None else int(round(max_length / h))
    near = max(50.0 * h, 1e-2)

    def along(st: State) -> float:
        return (st[0] - x0) * c0 + (st[1] - y0) * s0

    def along_slope(st: State) -> float:
        return math.cos(st[2]) * c0 + math.sin(st[2]) * s0

    state: State = (x0, y0, th0, float(H0))
    s = 0.0
    arc, states = [0.0], [state]
    drift = 0.0
    max_r2 = x0 ** 2 + y0 ** 2
    max_H = abs(H0)
    best_return = math.inf
    closed = False
    defect = math.inf

    for _ in range(n_steps):
        new = _rk4(_curve_rhs, state, h)
        if not _finite(new):
            raise ShootingError(f"curve ODE blew up at arclength {s:.4g}")
        r2 = new[0] ** 2 + new[1] ** 2
        if r2 > escape_radius ** 2:
            raise ShootingError(
                f"orbit escaped |x| > {escape_radius:g} at arclength {s:.4g} (H0 = {H0:g})")
        E = new[3] ** 2 * math.exp(-0.5 * r2)
        drift = max(drift, abs(E - E0) / E0)
        max_r2 = max(max_r2, r2)
        max_H = max(max_H, abs(new[3]))

        if s > 10.0 * near and along(state) < 0.0 <= along(new) \
                and math.hypot(new[0] - x0, new[1] - y0) < near:
            tau, cross = _refine_crossing(_curve_rhs, state, h, along, along_slope)
            gap = math.hypot(cross[0] - x0, cross[1] - y0) + abs(_wrap_angle(cross[2] - th0))
            best_return = min(best_return, gap)
            if gap < closure_tol:
                if tau > 1e-9:
                    arc.append(s + tau * h)
                    states.append(cross)
                s += tau * h
                closed, defect = True, gap
                break

        state = new
        s += h
        arc.append(s)
        states.append(state)

    trajectory = np.column_stack([np.array(arc), np.array(states)])
    parameters: Dict[str, Any] = {
        "H0": float(H0),
        "start": [x0, y0],
        "theta0": th0,
        "E0": E0,
        "length": s,
        "step": h,
        "max_radius_sq": max_r2,
        "level_bound": 2.0 * math.log(max_H ** 2 / E0),
    }

    if not closed:
        logger.info("Curve orbit from H0=%g did not close within length %.3g", H0, s)
        return ShootingResult(
            surface=None,
            parameters=parameters,
            closure_defect=best_return if math.isfinite(best_return) else math.hypot(
                states[-1][0] - x0, states[-1][1] - y0),
            conserved_drift=drift,
            classification="bounded",
            trajectory=trajectory,
        )

    th = trajectory[:, 3]
    nodes = _hermite_nodes(trajectory[:, 0], trajectory[:, 1:3],
                           np.column_stack([np.cos(th), np.sin(th)]), n_nodes, closed=True)
    immersed = first_self_intersection(nodes, closed=True) is not None
    curve = DiscreteCurve(nodes, closed=True, immersed=immersed)
    parameters["turning_number"] = int(round((states[-1][2] - th0) / (2.0 * math.pi)))
    parameters["immersed"] = immersed
    logger.info("Curve orbit from H0=%g closed after length %.6g (defect %.2e)", H0, s, defect)
    return ShootingResult(
        surface=curve,
        parameters=parameters,
        closure_defect=defect,
        conserved_drift=drift,
        residual_max=residual(curve).max,
        classification="closed",
        trajectory=trajectory,
    )


def shrinker_curve_sweep(
    h0_values: Sequence[float], max_length: float = 20.0, h: float = DEFAULT_STEP
) -> List[ShootingResult]:
    """Run the curve ODE over a range of initial curvatures.

    Every orbit is classified "closed", "bounded" or "escaped". For bounded
    orbits ``max_radius_sq`` stays below the E-level bound
    2·log(max H²/E), the only alternative to the straight line.
    """
    results = []
    for H0 in h0_values:
        try:
            results.append(shrinker_curve_ode(H0, h=h, max_length=max_length))
        except ShootingError as e:
            logger.warning("H0=%g: %s", H0, e)
            results.append(ShootingResult(
                surface=None,
                parameters={"H0": float(H0)},
                closure_defect=math.nan,
                classification="escaped",
            ))
    return results


# =============================================================================
# Rotationally symmetric profiles
# =============================================================================

def _profile_rhs(state: State) -> State:
    # (r, z, α): normal ν = (sin α, −cos α), H = α′ + sin α / r = ⟨x, ν⟩/2
    r, z, a = state
    c, s = math.cos(a), math.sin(a)
    return (c, s, 0.5 * (r * s - z * c) - s / r)


class _HalfShot:
    """First return of a profile orbit to the plane z = 0."""

    __slots__ = ("outcome", "defect", "arc", "states")

    def __init__(self, outcome: str, defect: float = math.nan,
                 arc: Optional[List[float]] = None, states: Optional[List[State]] = None):
        self.outcome = outcome
        self.defect = defect
        self.arc = arc or []
        self.states = states or []

    @property
    def crossed(self) -> bool:
        return self.outcome == "crossed"


def _shoot_half(r0: float, sign: int, h: float, max_length: float, escape_radius: float) -> _HalfShot:
    state: State = (float(r0), 0.0, sign * 0.5 * math.pi)
    s = 0.0
    arc, states = [0.0], [state]
    for _ in range(int(round(max_length / h))):
        try:
            new = _rk4(_profile_rhs, state, h)
        except ZeroDivisionError:
            return _HalfShot("axis")
        if not _finite(new):
            return _HalfShot("blowup")
        if new[0] < AXIS_EPS:
            return _HalfShot("axis")
        if math.hypot(new[0], new[1]) > escape_radius:
            return _HalfShot("escape")
        if sign * state[1] > 0.0 and sign * new[1] <= 0.0:
            tau, cross = _refine_crossing(
                _profile_rhs, state, h, lambda st: st[1], lambda st: math.sin(st[2]))
            if tau > 1e-9:
                arc.append(s + tau * h)
                states.append(cross)
            else:
                states[-1] = cross
            return _HalfShot("crossed", math.cos(cross[2]), arc, states)
        state = new
        s += h
        arc.append(s)
        states.append(state)
    return _HalfShot("budget")


def _mirrored_loop(shot: _HalfShot, n_nodes: int) -> np.ndarray:
    """Close a half orbit by reflection in z = 0 and resample it."""
    arc = np.array(shot.arc)
    st = np.array(shot.states)
    points, alpha = st[:, :2], st[:, 2]
    tangents = np.column_stack([np.cos(alpha), np.sin(alpha)])
    half = arc[-1]
    flip = np.array([1.0, -1.0])
    lower = slice(-2, 0, -1)
    s_all = np.concatenate([arc, 2.0 * half - arc[lower], [2.0 * half]])
    p_all = np.vstack([points, points[lower] * flip, points[:1]])
    t_all = np.vstack([tangents, -tangents[lower] * flip, tangents[:1]])
    return _hermite_nodes(s_all, p_all, t_all, n_nodes, closed=True)


def _bisect(a: float, b: float, da: float, shoot: Callable[[float], _HalfShot], tol: float):
    while b - a > tol:
        m = 0.5 * (a + b)
        shot = shoot(m)
        if not shot.crossed:
            return None
        if shot.defect == 0.0:
            return m, m
        if (shot.defect > 0.0) == (da > 0.0):
            a, da = m, shot.defect
        else:
            b = m
    return a, b


def solve_angenent_torus(
    window: Optional[Tuple[float, float]] = None,
    tol: float = 1e-12,
    start: str = "outer",
    n_scan: int = 31,
    h: float = DEFAULT_STEP,
    n_nodes: int = 4096,
    max_length: float = 40.0,
    escape_radius: float = 20.0,
    residual_tol: float = 1e-5,
) -> ShootingResult:
    """Solve for the rotationally symmetric shrinking torus by shooting.

    The profile starts perpendicular to the plane z = 0, at the outermost
    point (``start="outer"``) or the innermost point (``start="inner"``), and
    is integrated to its first return to z = 0. It closes up smoothly after
    reflection exactly when it returns perpendicularly, so the defect is
    cos α at the return. The window is scanned, every sign change between
    neighbouring valid shots is bisected to ``tol``, and the first bracket
    that yields a simple loop off the axis is accepted.
    The resampled profile must then meet the shrinker equation to
    ``residual_tol`` at every node; the three-point stencil error drops
    about fourfold per doubling of ``n_nodes``.

    Raises:
        ValueError: On an unknown start.
        ShootingError: If no bracket produces a closed embedded profile, or
            the profile misses ``residual_tol``.
    """
    if start not in ("outer", "inner"):
        raise ValueError(f"start must be 'outer' or 'inner', got {start!r}")
    sign = 1 if start == "outer" else -1
    lo, hi = window or (OUTER_WINDOW if start == "outer" else INNER_WINDOW)
    if not 0.0 < lo < hi:
        raise ValueError(f"invalid shooting window ({lo}, {hi})")

    def shoot(r0: float) -> _HalfShot:
        return _shoot_half(r0, sign, h, max_length, escape_radius)

    grid = np.linspace(lo, hi, n_scan)
    shots = [shoot(r0) for r0 in grid]
    outcomes: Dict[str, int] = {}
    for shot in shots:
        outcomes[shot.outcome] = outcomes.get(shot.outcome, 0) + 1
    brackets = [
        (grid[i], grid[i + 1], shots[i].defect)
        for i in range(n_scan - 1)
        if shots[i].crossed and shots[i + 1].crossed and shots[i].defect * shots[i + 1].defect <= 0.0
    ]
    if not brackets:
        raise ShootingError(
            f"no sign change of the closure defect in window ({lo:g}, {hi:g}); "
            f"scan outcomes {outcomes}")

    for a, b, da in brackets:
        found = _bisect(a, b, da, shoot, tol)
        if found is None:
            logger.info("Bracket (%.6g, %.6g) lost its crossing during bisection", a, b)
            continue
        r0 = 0.5 * (found[0] + found[1])
        shot = shoot(r0)
        if not shot.crossed:
            continue
        nodes = _mirrored_loop(shot, n_nodes)
        if nodes[:, 0].min() <= 0.0 or first_self_intersection(nodes, closed=True) is not None:
            logger.info("Bracket (%.6g, %.6g) closes but not as a simple loop off the axis", a, b)
            continue
        surface = ProfileSurface(nodes, topology=Topology.TORUS)
        res = residual(surface)
        if res.max > residual_tol:
            raise ShootingError(
                f"torus residual {res.max:.2e} exceeds {residual_tol:g} at {n_nodes} nodes; "
                f"raise the node count or lower the step")
        r_cross = shot.states[-1][0]
        logger.info("Torus from %s start: r0=%.12f, return at r=%.12f, defect %.2e",
                    start, r0, r_cross, abs(shot.defect))
        return ShootingResult(
            surface=surface,
            parameters={
                "start": start,
                "r0": r0,
                "crossing_r": r_cross,
                "window": [lo, hi],
                "bracket": [found[0], found[1]],
                "min_r": float(nodes[:, 0].min()),
                "max_r": float(nodes[:, 0].max()),
                "max_abs_z": float(np.abs(nodes[:, 1]).max()),
                "n_nodes": n_nodes,
                "step": h,
                "scan_outcomes": outcomes,
            },
            closure_defect=abs(shot.defect),
            residual_max=res.max,
            classification="torus",
            trajectory=np.column_stack([np.array(shot.arc), np.array(shot.states)]),
        )
    raise ShootingError(
        f"no bracket in ({lo:g}, {hi:g}) produced a simple closed profile; "
        f"{len(brackets)} sign change(s) tried")


def shoot_sphere_profile(
    z0: float = -2.0, h: float = DEFAULT_STEP, n_nodes: int = 257, max_length: float = 40.0
) -> ShootingResult:
    """Shoot a sphere-like profile from the pole (0, z0) on the axis.

    At a pole both principal curvatures equal −z0/4, which fixes the series
    start. Integration stops one step away from the axis and the last gap is
    bridged along the osculating circle.

    Raises:
        ValueError: If z0 >= 0.
        ShootingError: If the orbit never returns to the axis.
    """
    if z0 >= 0.0:
        raise ValueError(f"the south pole must lie below the origin, got z0 = {z0}")
    k = -z0 / 4.0
    eps = h
    state: State = (eps - k * k * eps ** 3 / 6.0, z0 + 0.5 * k * eps ** 2, k * eps)
    s = eps
    arc, points, alpha = [0.0, s], [(0.0, z0), state[:2]], [0.0, state[2]]
    returned = False
    for _ in range(int(round(max_length / h))):
        try:
            new = _rk4(_profile_rhs, state, h)
        except ZeroDivisionError:
            new = (0.0, state[1], state[2])
        if not _finite(new):
            raise ShootingError(f"profile ODE blew up at arclength {s:.4g}")
        if math.hypot(new[0], new[1]) > 20.0:
            raise ShootingError(f"profile escaped at arclength {s:.4g}")
        if new[0] < eps and math.cos(new[2]) < 0.0 and s > 10.0 * eps:
            returned = True
            break
        state = new
        s += h
        arc.append(s)
        points.append(state[:2])
        alpha.append(state[2])
    if not returned:
        raise ShootingError(f"profile from z0 = {z0:g} did not return to the axis")

    r_last, z_last, a_last = state
    beta = 0.5 * (a_last + math.pi)
    chord = -r_last / math.cos(beta)
    arc.append(s + chord)
    points.append((0.0, z_last + chord * math.sin(beta)))
    alpha.append(math.pi)

    a = np.array(alpha)
    nodes = _hermite_nodes(np.array(arc), np.array(points),
                           np.column_stack([np.cos(a), np.sin(a)]), n_nodes, closed=False)
    surface = ProfileSurface(nodes, topology=Topology.SPHERE)
    defect = abs(math.sin(a_last) - _profile_rhs(state)[2] * r_last)
    return ShootingResult(
        surface=surface,
        parameters={"z0": z0, "pole_curvature": k, "north_pole": points[-1][1], "step": h},
        closure_defect=defect,
        residual_max=residual(surface).max,
        classification="sphere",
    )


# =============================================================================
# Weighted identities
# =============================================================================

def _product_identities(p: RoundProduct) -> Dict[str, float]:
    n, k, R = p.ambient_dim - 1, p.sphere_dim, p.radius
    m = n - k
    H2 = (k / R) ** 2 if k else 0.0
    mean_u = R ** 2 / 4.0 + (m - n) / 2.0 if k else (m - n) / 2.0
    r2 = R ** 2 if k else 0.0
    fourth = r2 ** 2 + 4.0 * r2 * m + 4.0 * m * (m + 2) - 2 * n * (2 * n + 4) + 16.0 * H2
    mass2 = abs(r2 - 2.0 * k) / (k + 1) if k else 0.0
    return {
        "volume": abs(r2 + 2.0 * m - 2.0 * n),
        "first_moment": 0.0,
        "third_moment": 0.0,
        "fourth_moment": abs(fourth),
        "tangential_mass": mass2,
        "h_square": abs(mean_u ** 2 + m / 2.0 - n / 2.0 + H2),
    }


def identity_suite(
    surface: Any, l2_tol: float = SHRINKER_L2_TOL, max_tol: float = SHRINKER_MAX_TOL
) -> IdentityReport:
    """Evaluate the weighted integral identities of a verified shrinker.

    Defects, each an integral against e^{−|x|²/4}dμ divided by ∫e^{−|x|²/4}dμ:

    - volume: ∫(|x|² − 2n)
    - first_moment: |∫x|
    - third_moment: |∫x|x|²|
    - fourth_moment: ∫(|x|⁴ − 2n(2n+4) + 16H²)
    - tangential_mass: max over basis vectors w of ∫⟨x,w⟩² − 2|wᵀ|²
    - h_square: ∫((|x|²/4 − n/2)² − n/2 + H²)

    Profiles are integrated on their arc reconstruction (see
    ``ProfileSurface.arc_quadrature``), curves on their node measures.

    Raises:
        NotAShrinkerError: If the residual gate fails.
    """
    require_shrinker(surface, l2_tol, max_tol)
    if isinstance(surface, RoundProduct):
        return IdentityReport(defects=_product_identities(surface), weighted_area=1.0)

    n = surface.dim
    profile = surface.kind == "profile"
    if profile:
        points, nu, kappa, measure = surface.arc_quadrature()
        r, z = points[:, 0], points[:, 1]
        r2 = r ** 2 + z ** 2
        H = kappa + nu[:, 0] / r
    else:
        g = surface.local_geometry()
        x, nu, H = g.positions, g.normals, g.H
        r2 = g.radius_sq
        measure = g.measure
    w = np.exp(-r2 / 4.0) * measure
    total = float(w.sum())

    def avg(values: np.ndarray) -> Any:
        return np.tensordot(w, values, axes=(0, 0)) / total

    if profile:
        # azimuthal averages: the horizontal moments vanish, x₁² averages to r²/2
        first = np.array([0.0, 0.0, avg(z)])
        third = np.array([0.0, 0.0, avg(z * r2)])
        mass = [
            abs(avg(0.5 * r ** 2) - 2.0 * avg(1.0 - 0.5 * nu[:, 0] ** 2)),
            abs(avg(z ** 2) - 2.0 * avg(1.0 - nu[:, 1] ** 2)),
        ]
    else:
        first = avg(x)
        third = avg(x * r2[:, None])
        mass = [abs(avg(x[:, d] ** 2) - 2.0 * avg(1.0 - nu[:, d] ** 2)) for d in range(x.shape[1])]

    defects = {
        "volume": abs(avg(r2 - 2.0 * n)),
        "first_moment": float(np.linalg.norm(first)),
        "third_moment": float(np.linalg.norm(third)),
        "fourth_moment": abs(avg(r2 ** 2 - 2.0 * n * (2.0 * n + 4.0) + 16.0 * H ** 2)),
        "tangential_mass": float(max(mass)),
        "h_square": abs(avg((r2 / 4.0 - n / 2.0) ** 2 - n / 2.0 + H ** 2)),
    }
    return IdentityReport(defects={k: float(v) for k, v in defects.items()}, weighted_area=total)


# =============================================================================
# Self-similar flow and minimal cones
# =============================================================================

def self_shrinking_flow_consistency(
    surface: Any, t_end: float = -0.8, tolerance: float = 1e-3, dt: float = 2e-4
) -> SelfSimilarityReport:
    """Flow a shrinker from t = −1 and compare with √(−t)·Σ.

    The Hausdorff distance is measured between the evolved surface and the
    dilated one; open truncations are compared one-sidedly on their inner
    half, away from the boundary. The slice residual is the largest
    |H + ⟨x,n⟩/2t| over the same nodes of the evolved surface.

    Raises:
        NotAShrinkerError: If the residual gate fails.
        FlowError: If the flow fails.
    """
    from .flow import evolve

    require_shrinker(surface)
    if not -1.0 < t_end < 0.0:
        raise ValueError(f"t_end must lie in (-1, 0), got {t_end}")
    moved = evolve(surface, -1.0, t_end, dt=dt)
    exact = surface.dilate(math.sqrt(-t_end))
    g = moved.local_geometry()
    slice_res = np.abs(g.H + g.support / (2.0 * t_end))
    if surface.is_closed:
        distance = hausdorff_distance(moved.nodes, exact.nodes, closed=surface.is_periodic)
        inner = np.ones(moved.n_nodes, dtype=bool)
    else:
        radius = np.linalg.norm(moved.nodes, axis=1)
        inner = radius < 0.5 * radius.max()
        distance = float(point_to_polyline(moved.nodes[inner], exact.nodes, closed=False).max())
    slice_max = float(slice_res[inner].max())
    passed = distance < tolerance and slice_max < 10.0 * tolerance
    logger.info("Self-similar flow check: Hausdorff %.2e, slice residual %.2e", distance, slice_max)
    return SelfSimilarityReport(
        passed=passed, hausdorff=distance, slice_residual=slice_max,
        t_end=t_end, tolerance=tolerance,
    )


def minimal_cone_check(surface: Any, tol: float = 1e-8) -> MinimalConeReport:
    """Classify a shrinker with H ≡ 0 as a minimal cone.

    H = 0 forces ⟨x,n⟩ = 0, so the surface is invariant under dilations; a
    cone that is smooth through the origin is a hyperplane.

    Raises:
        NotAShrinkerError: If max|H| or the residual exceeds ``tol``.
    """
    if isinstance(surface, RoundProduct):
        if surface.sphere_dim:
            raise NotAShrinkerError("round product with a sphere factor has H ≠ 0",
                                    residual_max=0.0)
        return MinimalConeReport(True, True, True, 0.0, 0.0)
    g = surface.local_geometry()
    res = residual(surface)
    max_H = float(np.abs(g.H).max())
    if max_H >= tol or res.max >= tol:
        raise NotAShrinkerError(
            f"minimal cone check needs H ≡ 0 on a shrinker: max|H| = {max_H:.3g}, "
            f"residual {res.max:.3g}", residual_max=res.max)
    max_support = float(np.abs(g.support).max())
    is_cone = max_support < tol
    through_origin = bool(point_to_polyline(np.zeros((1, 2)), surface.nodes,
                                            closed=surface.is_periodic)[0] < tol)
    max_A = float(np.sqrt(g.A2.max()))
    return MinimalConeReport(
        is_cone=is_cone,
        through_origin=through_origin,
        hyperplane_expected=is_cone and through_origin and max_A < tol,
        max_support=max_support,
        max_A=max_A,
    )


# =============================================================================
# Golden torus data
# =============================================================================

def golden_record(result: ShootingResult) -> Dict[str, Any]:
    """Golden-file record of a torus solve: the profile and its oracle parameters."""
    return {
        "kind": "angenent_torus",
        "parameters": result.to_dict()["parameters"],
        "closure_defect": result.closure_defect,
        "residual_max": result.residual_max,
        "surface": result.surface.to_dict(),
    }
