"""
Mean curvature flow and rescaled flow on curves and profile surfaces.

Steps are linearly implicit in the Laplacian of the position vector and
explicit in the geometry: with lumped node measures M and the finite-volume
stiffness K of the current surface,

    (M + dt·K) x⁺ = M x                  (MCF, ∂x = Δx = −H n)
    (M + ds·K) x⁺ = (1 + ds/2) M x       (rescaled flow, ∂x = Δx + x/2)

For profiles the radial coordinate carries the extra −r/r² term of the
ambient Laplacian, taken implicitly. The runner adapts dt to the curvature,
samples monitors, detects extinction and singularities, and the piecewise
driver replaces near-singular slices by entropy-decreasing perturbations.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import FlowError, GeometryError, StepRejected
from .functionals import density_trace, entropy, f_functional
from .geometry import normal_graph
from .shrinker import residual
from .spectral import assemble_L, eigen
from .surfaces import BaseSurface, DiscreteCurve, ProfileSurface, RoundProduct
from .surfaces.base import first_self_intersection, uniform_resample
from .types import (
    FlowSample,
    FlowTrace,
    JumpRecord,
    TangentCandidate,
    TangentClass,
    Termination,
    Topology,
)

logger = logging.getLogger(__name__)

FLOW_KINDS = ("mcf", "rescaled", "normalized")
END_CONDITIONS = ("neumann", "clamped")
MAX_HALVINGS = 20
QUASI_UNIFORM_RATIO = 1.1
TANGENT_TOLERANCE = 0.05
RADIUS_SLACK = 0.25
LINE_WINDOW = 2.0
AMPLITUDE_START = 0.4

# Radius of each model shrinker in rescaled units (unit width for lines)
MODEL_SCALE = {
    TangentClass.CIRCLE: math.sqrt(2.0),
    TangentClass.LINE: 1.0,
    TangentClass.SPHERE: 2.0,
    TangentClass.CYLINDER: math.sqrt(2.0),
}


@dataclass
class FlowConfig:
    """Settings of one flow run.

    Attributes:
        kind: "mcf", "rescaled" (about the space-time origin) or
            "normalized" (rescaled, then recentred and area-normalized).
        t_start: Initial time (rescaled time s for the rescaled kinds).
        t_end: Time budget end; None runs until a termination event or
            ``max_steps``.
        max_steps: Step budget.
        dt_max: Upper bound of the step.
        cfl: Adaptive steps are min(dt_max, cfl / max|A|²).
        adaptive: Use adaptive steps; otherwise every step is ``dt_max``.
        step_limit: A step is rejected when dt·max|A|² exceeds this after it.
        area_floor: Extinction when the area drops below this fraction of
            the initial area (closed surfaces only).
        singular_factor: Singularity when max|A| exceeds this multiple of
            the initial curvature scale.
        refine_threshold: Double the node count when max|A|·h_max exceeds it.
        max_nodes: Node cap for refinement; past it the run stops as
            singular (under-resolved).
        ends: Boundary rows of open surfaces, "neumann" or "clamped".
        sample_every: Steps between monitor samples.
        monitor_entropy: Evaluate the entropy at every sample.
        probes: (x0, t0) pairs whose densities are sampled as monitors.
        jump_epsilon: Entropy drop required of a replacement.
        line_search_steps: Halvings of the replacement amplitude.
        jump_nodes: Node cap of the rescaled slice a replacement is built on;
            the leg after a jump starts at this resolution.
        max_jumps: Replacement budget of the piecewise flow.
        near_shrinker_tol: Gaussian-weighted residual below which a
            rescaled slice counts as a time slice of a self-similar flow.
    """
    kind: str = "mcf"
    t_start: float = 0.0
    t_end: Optional[float] = None
    max_steps: int = 200000
    dt_max: float = 1e-3
    cfl: float = 2e-4
    adaptive: bool = True
    step_limit: float = 0.05
    area_floor: float = 1e-3
    singular_factor: float = 1e3
    refine_threshold: float = 0.2
    max_nodes: int = 4096
    ends: str = "neumann"
    sample_every: int = 100
    monitor_entropy: bool = False
    probes: List[Tuple[Tuple[float, ...], float]] = field(default_factory=list)
    jump_epsilon: float = 1e-3
    line_search_steps: int = 8
    jump_nodes: int = 512
    max_jumps: int = 4
    near_shrinker_tol: float = 0.05

    def validate(self) -> List[str]:
        """Return a list of problems; empty when the settings are usable."""
        errors = []
        if self.kind not in FLOW_KINDS:
            errors.append(f"flow.kind must be one of {FLOW_KINDS}, got {self.kind!r}")
        if self.ends not in END_CONDITIONS:
            errors.append(f"flow.ends must be one of {END_CONDITIONS}, got {self.ends!r}")
        for name in ("dt_max", "cfl", "step_limit", "area_floor", "singular_factor",
                     "refine_threshold", "jump_epsilon", "near_shrinker_tol"):
            if not getattr(self, name) > 0:
                errors.append(f"flow.{name} must be positive")
        for name in ("max_steps", "sample_every", "max_nodes", "line_search_steps", "jump_nodes"):
            if getattr(self, name) < 1:
                errors.append(f"flow.{name} must be at least 1")
        if self.max_jumps < 0:
            errors.append("flow.max_jumps must be non-negative")
        if self.t_end is not None and self.t_end <= self.t_start:
            errors.append("flow.t_end must exceed flow.t_start")
        return errors

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["probes"] = [{"x0": list(x0), "t0": t0} for x0, t0 in self.probes]
        return data

    @classmethod
    def from_mapping(cls, values: Dict[str, Any]) -> "FlowConfig":
        """Build from a flat mapping; unknown keys are ignored."""
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in values.items() if k in known}
        if "probes" in kwargs:
            kwargs["probes"] = [
                (tuple(p["x0"]), float(p["t0"])) if isinstance(p, dict) else (tuple(p[0]), float(p[1]))
                for p in kwargs["probes"]
            ]
        return cls(**kwargs)


# =============================================================================
# Single steps
# =============================================================================

def _stiffness(surface: BaseSurface) -> sp.csr_matrix:
    e = surface.edges()
    n = surface.n_nodes
    rows = np.concatenate([e.i, e.j, e.i, e.j])
    cols = np.concatenate([e.i, e.j, e.j, e.i])
    vals = np.concatenate([e.flux, e.flux, -e.flux, -e.flux])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _open_ends(surface: BaseSurface) -> bool:
    if isinstance(surface, DiscreteCurve):
        return not surface.closed
    return surface.topology is Topology.CYLINDER


def _constraints(surface: BaseSurface, coord: int, factor: float, ends: str):
    """Replacement rows (row, col, value) and right-hand sides for pinned nodes."""
    p = surface.nodes
    n = len(p)
    rows: List[int] = []
    entries: List[Tuple[int, int, float]] = []
    rhs: List[float] = []
    if _open_ends(surface):
        for end, nb in ((0, 1), (n - 1, n - 2)):
            rows.append(end)
            if ends == "clamped":
                entries.append((end, end, 1.0))
                rhs.append(float(p[end, coord]))
            else:
                entries += [(end, end, 1.0), (end, nb, -1.0)]
                rhs.append(factor * float(p[end, coord] - p[nb, coord]))
    if isinstance(surface, ProfileSurface) and surface.topology is Topology.SPHERE and coord == 0:
        for pole in surface.poles:
            rows.append(int(pole))
            entries.append((int(pole), int(pole), 1.0))
            rhs.append(0.0)
    return np.array(rows, dtype=int), entries, np.array(rhs)


def _advance(surface: BaseSurface, dt: float, growth: float, ends: str,
             step_limit: float, resample: Optional[bool]) -> BaseSurface:
    if isinstance(surface, RoundProduct):
        raise GeometryError("round products evolve in closed form; flows need a discretized surface")
    if ends not in END_CONDITIONS:
        raise ValueError(f"ends must be one of {END_CONDITIONS}, got {ends!r}")
    if not dt > 0:
        raise ValueError(f"step must be positive, got {dt}")
    nodes = surface.nodes
    n = len(nodes)
    M = surface.local_geometry().measure
    K = _stiffness(surface)
    factor = 1.0 + dt * growth
    out = np.empty_like(nodes)
    for c in range(2):
        diag = M.copy()
        if isinstance(surface, ProfileSurface) and c == 0:
            r = nodes[:, 0]
            off_axis = r > 0
            diag[off_axis] += dt * M[off_axis] / r[off_axis] ** 2
        A = (sp.diags(diag) + dt * K).tocsr()
        b = factor * M * nodes[:, c]
        rows, entries, values = _constraints(surface, c, factor, ends)
        if rows.size:
            keep = np.ones(n)
            keep[rows] = 0.0
            ri, ci, vi = zip(*entries)
            A = sp.diags(keep) @ A + sp.csr_matrix((vi, (ri, ci)), shape=(n, n))
            b[rows] = values
        out[:, c] = splu(A.tocsc()).solve(b)

    if not np.all(np.isfinite(out)):
        raise StepRejected("non-finite node after step", dt=dt)
    if isinstance(surface, ProfileSurface) and surface.topology is Topology.SPHERE:
        out[surface.poles, 0] = 0.0
    try:
        moved = surface.with_nodes(out, check_simple=False)
    except GeometryError as exc:
        raise StepRejected(f"step broke the surface: {exc}", dt=dt) from exc

    peak = float(moved.local_geometry().A2.max())
    if dt * peak > step_limit:
        raise StepRejected(f"dt·max|A|² = {dt * peak:.3g} exceeds {step_limit}", dt=dt)
    if resample or (resample is None and moved.adjacent_edge_ratio() > QUASI_UNIFORM_RATIO):
        moved = moved.resample(check_simple=False)
    return moved


def mcf_step(
    surface: BaseSurface,
    dt: float,
    ends: str = "neumann",
    step_limit: float = 0.05,
    resample: Optional[bool] = None,
) -> BaseSurface:
    """One semi-implicit step of mean curvature flow.

    Args:
        surface: Curve or profile surface.
        dt: Time step.
        ends: Boundary rows of open surfaces: "neumann" keeps the offset
            between each end node and its neighbour, "clamped" fixes it.
        step_limit: Rejection threshold for dt·max|A|² after the step.
        resample: True/False to force or skip resampling; None resamples when
            adjacent edges differ by more than 10%.

    Raises:
        StepRejected: If the step breaks the surface or exceeds the limit.
    """
    return _advance(surface, dt, 0.0, ends, step_limit, resample)


def rescaled_step(
    surface: BaseSurface,
    ds: float,
    ends: str = "neumann",
    step_limit: float = 0.05,
    resample: Optional[bool] = None,
) -> BaseSurface:
    """One semi-implicit step of the rescaled flow ∂x = −H n + x/2 about (0, 0).

    Raises:
        StepRejected: As ``mcf_step``.
    """
    return _advance(surface, ds, 0.5, ends, step_limit, resample)


def normalize(surface: BaseSurface) -> BaseSurface:
    """Recentre a closed surface and rescale it to the shrinker size.

    Curves are moved to centroid zero and enclosed area 2π (the circle of
    radius √2); sphere-like profiles to mean height zero and area 16π (the
    sphere of radius 2). Torus-like profiles are only recentred.

    Raises:
        ValueError: If the surface is not closed.
    """
    if not surface.is_closed:
        raise ValueError("normalization needs a closed surface")
    nodes = surface.nodes.copy()
    if isinstance(surface, DiscreteCurve):
        nodes -= surface.centroid()
        alpha = math.sqrt(2.0 * math.pi / abs(surface.enclosed_area()))
    else:
        g = surface.local_geometry()
        nodes[:, 1] -= float(np.sum(g.measure * nodes[:, 1]) / g.measure.sum())
        alpha = 1.0
        if surface.topology is Topology.SPHERE:
            alpha = math.sqrt(16.0 * math.pi / float(g.measure.sum()))
    return surface.with_nodes(nodes * alpha, check_simple=False)


def evolve(
    surface: BaseSurface,
    t_start: float,
    t_end: float,
    dt: float,
    kind: str = "mcf",
    ends: str = "neumann",
) -> BaseSurface:
    """Fixed-step flow from t_start to t_end; returns the final surface.

    Raises:
        FlowError: If a step is rejected.
    """
    if t_end <= t_start:
        raise ValueError(f"t_end must exceed t_start, got [{t_start}, {t_end}]")
    n_steps = max(1, int(math.ceil((t_end - t_start) / dt - 1e-9)))
    h = (t_end - t_start) / n_steps
    growth = 0.0 if kind == "mcf" else 0.5
    current = surface
    for k in range(n_steps):
        try:
            current = _advance(current, h, growth, ends, step_limit=1.0, resample=None)
        except StepRejected as exc:
            raise FlowError(f"fixed-step flow failed at step {k}: {exc}") from exc
        if kind == "normalized":
            current = normalize(current)
    return current


# =============================================================================
# Runner
# =============================================================================

class _EntropyMonitor:
    """Entropy along a flow with warm starts from the previous maximizer."""

    def __init__(self):
        self.previous: Optional[Tuple[np.ndarray, float, float]] = None

    def __call__(self, surface: BaseSurface) -> float:
        diam = surface.diameter()
        profile = isinstance(surface, ProfileSurface)
        if profile:
            center = np.array([0.0, float(surface.nodes[:, 1].mean())])
        else:
            center = surface.nodes.mean(axis=0)
        starts = [np.concatenate([center, [math.log(diam ** 2 / (8.0 * surface.dim))]])]
        if self.previous is not None:
            prev_center, prev_t0, prev_diam = self.previous
            starts.insert(0, np.concatenate([prev_center, [math.log(prev_t0 * (diam / prev_diam) ** 2)]]))
        result = entropy(surface, starts=starts)
        x0 = np.asarray(result.x0)
        self.previous = (x0[[0, 2]] if profile else x0, result.t0, diam)
        return result.lam


def _monitors(surface: BaseSurface, time: float, dt: float, config: FlowConfig,
              entropy_monitor: Optional[_EntropyMonitor]) -> Dict[str, float]:
    g = surface.local_geometry()
    values = {
        "area": float(g.measure.sum()),
        "max_A": float(np.sqrt(g.A2.max())),
        "dt": dt,
        "n_nodes": float(surface.n_nodes),
    }
    if entropy_monitor is not None:
        values["entropy"] = entropy_monitor(surface)
    for k, (x0, t0) in enumerate(config.probes):
        if t0 > time:
            values[f"density_{k}"] = f_functional(surface, x0, t0 - time).value
    return values


def _check_embedded(surface: BaseSurface, trace: FlowTrace):
    periodic = surface.is_periodic
    if not periodic or getattr(surface, "immersed", False):
        return
    crossing = first_self_intersection(surface.nodes, closed=True)
    if crossing is not None:
        raise FlowError(f"flow lost embeddedness at segment {crossing}", trace)


def _refine(surface: BaseSurface) -> BaseSurface:
    """Resample to twice the node count, keeping poles on the axis."""
    n = surface.n_nodes
    target = 2 * n if surface.is_periodic else 2 * n - 1
    out = uniform_resample(surface.nodes, target, closed=surface.is_periodic)
    if isinstance(surface, ProfileSurface) and surface.topology is Topology.SPHERE:
        out[1:-1, 0] = np.maximum(out[1:-1, 0], 1e-12)
        out[0, 0] = out[-1, 0] = 0.0
    return surface.with_nodes(out, check_simple=False)


def _run_leg(
    surface: BaseSurface,
    config: FlowConfig,
    trace: FlowTrace,
    leg: int,
    t_start: float,
    stop: Optional[Callable[[FlowSample, int], bool]] = None,
) -> Tuple[BaseSurface, Termination]:
    growth = 0.0 if config.kind == "mcf" else 0.5
    g0 = surface.local_geometry()
    area0 = float(g0.measure.sum())
    scale = max(float(np.sqrt(g0.A2.max())), 1.0 / surface.diameter())
    cap = config.singular_factor * scale
    entropy_monitor = _EntropyMonitor() if config.monitor_entropy else None

    def record(s: BaseSurface, t: float, dt: float) -> FlowSample:
        _check_embedded(s, trace)
        sample = FlowSample(time=t, surface=s, monitors=_monitors(s, t, dt, config, entropy_monitor), leg=leg)
        trace.samples.append(sample)
        return sample

    t, steps, dt = t_start, 0, config.dt_max
    current = surface
    first = record(current, t, 0.0)
    if stop is not None and stop(first, steps):
        return current, Termination.NEAR_SHRINKER

    termination = None
    while termination is None:
        if config.t_end is not None and t >= config.t_end - 1e-12:
            termination = Termination.TIME_BUDGET
            break
        if steps >= config.max_steps:
            termination = Termination.STEP_BUDGET
            break
        peak = float(current.local_geometry().A2.max())
        dt = config.dt_max if not config.adaptive else min(config.dt_max, config.cfl / max(peak, 1e-300))
        if config.t_end is not None:
            dt = min(dt, config.t_end - t)
        for _ in range(MAX_HALVINGS):
            try:
                nxt = _advance(current, dt, growth, config.ends, config.step_limit, None)
                break
            except StepRejected as exc:
                logger.debug("Step rejected at t=%.6g: %s", t, exc)
                dt *= 0.5
        else:
            raise FlowError(f"step size underflow at t={t:.6g} after {MAX_HALVINGS} halvings", trace)
        if config.kind == "normalized":
            nxt = normalize(nxt)
        current, t, steps = nxt, t + dt, steps + 1

        g = current.local_geometry()
        max_a = float(np.sqrt(g.A2.max()))
        if current.is_closed and float(g.measure.sum()) < config.area_floor * area0:
            termination = Termination.EXTINCTION
        elif max_a > cap:
            termination = Termination.SINGULARITY
        elif max_a * float(current.edge_lengths().max()) > config.refine_threshold:
            if 2 * current.n_nodes <= config.max_nodes:
                logger.debug("Refining to %d nodes at t=%.6g", 2 * current.n_nodes, t)
                current = _refine(current)
            else:
                trace.notes.append(f"under-resolved at t={t:.6g} with {current.n_nodes} nodes")
                termination = Termination.SINGULARITY
        if termination is not None or steps % config.sample_every == 0:
            sample = record(current, t, dt)
            if termination is None and stop is not None and stop(sample, steps):
                termination = Termination.NEAR_SHRINKER

    if trace.samples[-1].time < t:
        record(current, t, dt)
    logger.info("Flow leg %d ended by %s at t=%.6g after %d steps", leg, termination.value, t, steps)
    return current, termination


def run_flow(initial: BaseSurface, config: Optional[FlowConfig] = None) -> FlowTrace:
    """Run one flow leg with adaptive steps, monitors and termination checks.

    Raises:
        ValueError: On an invalid configuration or a round product.
        FlowError: If steps fail; carries the trace so far.
    """
    config = config or FlowConfig()
    problems = config.validate()
    if problems:
        raise ValueError("; ".join(problems))
    if isinstance(initial, RoundProduct):
        raise ValueError("round products evolve in closed form; flows need a discretized surface")
    trace = FlowTrace()
    _, termination = _run_leg(initial, config, trace, 0, config.t_start)
    trace.termination = termination
    return trace


# =============================================================================
# Tangent flows
# =============================================================================

def parabolic_distance(a: Tuple[Sequence[float], float], b: Tuple[Sequence[float], float]) -> float:
    """max{|x1 − x2|, √|t1 − t2|} between space-time points (x, t)."""
    dx = float(np.linalg.norm(np.subtract(a[0], b[0])))
    return max(dx, math.sqrt(abs(a[1] - b[1])))


def _singular_time(samples: List[FlowSample]) -> float:
    """Zero of max|A|⁻², linearly extrapolated from the last samples."""
    times = np.array([s.time for s in samples[-6:]])
    inv = np.array([s.monitors["max_A"] ** -2 for s in samples[-6:]])
    if len(times) >= 2:
        slope, intercept = np.polyfit(times, inv, 1)
        if slope < 0:
            return max(float(-intercept / slope), float(times[-1]) + 1e-14)
    return float(times[-1]) + 1e-14


def _singular_point(surface: BaseSurface) -> np.ndarray:
    """Measure-weighted centre of the nodes within 90% of max|A|."""
    g = surface.local_geometry()
    a = np.sqrt(g.A2)
    hot = a >= 0.9 * a.max()
    w = g.measure[hot]
    center = np.sum(w[:, None] * surface.nodes[hot], axis=0) / w.sum()
    if isinstance(surface, ProfileSurface):
        return np.array([0.0, 0.0, center[1]])
    return center


def _rescale(surface: BaseSurface, x0: np.ndarray, tau: float) -> BaseSurface:
    shift = np.array([0.0, x0[2]]) if isinstance(surface, ProfileSurface) else np.asarray(x0)
    return surface.with_nodes((surface.nodes - shift) / math.sqrt(tau), check_simple=False)


def _fit_models(surface: BaseSurface) -> Dict[TangentClass, float]:
    """Relative distance to each model shrinker after a centre/radius fit.

    Compact models use every node; the cylinder and the line are fitted in
    the ball of radius 2. A model whose fitted radius or centre is off by
    more than 25% of its scale gets distance inf.
    """
    p = surface.nodes
    radius = np.linalg.norm(p, axis=1)
    window = p[radius <= LINE_WINDOW]
    out: Dict[TangentClass, float] = {}
    if isinstance(surface, DiscreteCurve):
        compact, compact_cls, flat_cls = TangentClass.CIRCLE, TangentClass.CIRCLE, TangentClass.LINE
        design = np.column_stack([2.0 * p[:, 0], 2.0 * p[:, 1], np.ones(len(p))])
        (a, b, d), *_ = np.linalg.lstsq(design, np.sum(p ** 2, axis=1), rcond=None)
        centre = np.array([a, b])
        rho = math.sqrt(max(d + a * a + b * b, 0.0))
        dist = np.abs(np.linalg.norm(p - centre, axis=1) - rho)
    else:
        compact, compact_cls, flat_cls = TangentClass.SPHERE, TangentClass.SPHERE, TangentClass.CYLINDER
        design = np.column_stack([2.0 * p[:, 1], np.ones(len(p))])
        (c, d), *_ = np.linalg.lstsq(design, np.sum(p ** 2, axis=1), rcond=None)
        centre = np.array([0.0, c])
        rho = math.sqrt(max(d + c * c, 0.0))
        dist = np.abs(np.hypot(p[:, 0], p[:, 1] - c) - rho)
    scale = MODEL_SCALE[compact]
    diameter = surface.diameter()
    ok = (abs(rho - scale) <= RADIUS_SLACK * scale
          and np.linalg.norm(centre) <= RADIUS_SLACK * scale
          and diameter <= 1.5 * 2.0 * scale)
    out[compact_cls] = float(dist.max()) / scale if ok else math.inf

    scale = MODEL_SCALE[flat_cls]
    if len(window) < 3:
        out[flat_cls] = math.inf
    elif flat_cls is TangentClass.LINE:
        mean = window.mean(axis=0)
        _, _, vt = np.linalg.svd(window - mean)
        normal = vt[-1]
        offset = abs(float(mean @ normal))
        spread = float(np.abs((window - mean) @ normal).max())
        out[flat_cls] = spread / scale if offset <= RADIUS_SLACK else math.inf
    else:
        rho = float(window[:, 0].mean())
        spread = float(np.abs(window[:, 0] - rho).max())
        out[flat_cls] = spread / scale if abs(rho - scale) <= RADIUS_SLACK * scale else math.inf
    return out


def _classify(distances: Dict[TangentClass, float], tolerance: float) -> TangentClass:
    best = min(distances, key=lambda k: distances[k])
    return best if distances[best] < tolerance else TangentClass.OTHER


def extract_tangent(
    trace: FlowTrace,
    point: Optional[Sequence[float]] = None,
    scales: Optional[Sequence[float]] = None,
    tolerance: float = TANGENT_TOLERANCE,
) -> TangentCandidate:
    """Parabolic rescalings of the last flow leg about its singular point.

    The singular time comes from extrapolating max|A|⁻² to zero; the point
    defaults to the centre of the highest-curvature nodes (on the axis for
    profiles). Rescalings are taken at gaps τ = T − t of τ_min·2^j within
    the last decade before T and matched against the model shrinkers.

    Args:
        trace: Flow trace ending near a singularity or extinction.
        point: Singular point override.
        scales: Explicit gaps τ to use instead of the dyadic ones.
        tolerance: Relative model distance for a match.

    Returns:
        TangentCandidate ordered from the coarsest to the finest scale. The
        classification is the one at the finest scale; ``disagreement`` flags
        scales that disagree with it.

    Raises:
        ValueError: If fewer than two usable pre-singular samples exist.
    """
    if not trace.samples:
        raise ValueError("insufficient pre-singular samples: empty trace")
    leg = trace.samples[-1].leg
    samples = trace.leg(leg)
    if len(samples) < 3:
        raise ValueError(f"insufficient pre-singular samples: {len(samples)} in the last leg")
    T = _singular_time(samples)
    x0 = np.asarray(point, dtype=float) if point is not None else _singular_point(samples[-1].surface)
    taus = np.array([T - s.time for s in samples])
    usable = np.flatnonzero(taus > 0)
    if scales is None:
        tau_min = float(taus[usable].min())
        targets = [tau_min * 2.0 ** j for j in range(4)]
    else:
        targets = [float(v) for v in scales]
    picks: List[int] = []
    for target in sorted(targets, reverse=True):
        if target > taus[usable].max() * 1.05:
            continue
        i = int(usable[np.argmin(np.abs(np.log(taus[usable] / target)))])
        if i not in picks:
            picks.append(i)
    if len(picks) < 2:
        raise ValueError("insufficient pre-singular samples: fewer than two distinct scales")

    candidate = TangentCandidate(classification=TangentClass.UNRESOLVED, singular_point=x0, singular_time=T)
    fits: Dict[TangentClass, float] = {}
    for i in picks:
        tau = float(taus[i])
        rescaled = _rescale(samples[i].surface, x0, tau)
        fits = _fit_models(rescaled)
        candidate.scales.append(1.0 / math.sqrt(tau))
        candidate.rescaled.append(rescaled)
        candidate.diameter_ratios.append(rescaled.diameter())
        candidate.per_scale.append(_classify(fits, tolerance).value)
    candidate.distances = {k.value: v for k, v in fits.items()}
    candidate.classification = TangentClass(candidate.per_scale[-1])
    candidate.disagreement = any(c != candidate.per_scale[-1] for c in candidate.per_scale)
    candidate.residual = min(fits.values())
    logger.info("Tangent candidate at T=%.6g: %s (per scale %s)", T,
                candidate.classification.value, ", ".join(candidate.per_scale))
    return candidate


def _slice_candidate(sample: FlowSample, tolerance: float) -> TangentCandidate:
    """Read a rescaled-flow slice as the time −1 slice of its own self-similar flow."""
    fits = _fit_models(sample.surface)
    cls = _classify(fits, tolerance)
    return TangentCandidate(
        classification=cls,
        singular_point=np.zeros(sample.surface.ambient_dim),
        singular_time=sample.time + 1.0,
        scales=[1.0],
        rescaled=[sample.surface],
        distances={k.value: v for k, v in fits.items()},
        per_scale=[cls.value],
        diameter_ratios=[sample.surface.diameter()],
        residual=min(fits.values()),
    )


# =============================================================================
# Piecewise flow
# =============================================================================

def _lowest_mode(surface: BaseSurface) -> np.ndarray:
    op = assemble_L(surface)
    report = eigen(op, count=1)
    u = np.zeros(surface.n_nodes)
    u[op.index] = report.eigenfunctions[:, 0]
    return u / np.abs(u).max()


def _place(surface: BaseSurface, x0: np.ndarray, tau: float, alpha: float = 1.0) -> BaseSurface:
    """√τ·α·Σ + x0 as a surface of the same type."""
    shift = np.array([0.0, x0[2]]) if isinstance(surface, ProfileSurface) else np.asarray(x0)
    return surface.with_nodes(surface.nodes * (alpha * math.sqrt(tau)) + shift)


def replacement_jump(
    old: BaseSurface,
    candidate: TangentCandidate,
    time: float,
    epsilon: float = 1e-3,
    line_search_steps: int = 8,
    max_nodes: Optional[int] = None,
) -> Optional[JumpRecord]:
    """Replace a near-singular slice by a graph over its rescaling with lower entropy.

    Γ = normal_graph(Γ0, s·u) with u the lowest eigenfunction of L on the
    finest rescaling Γ0; amplitudes s₀·2^−k are tried with both signs until
    λ(Γ) ≤ λ(Γ0) − ε. The accepted Γ is mapped back by √τ·Γ + x0 and dilated
    about x0 so that its area equals that of the replaced slice.
    With ``max_nodes`` the rescaled slice is first resampled to at most that
    many nodes.

    Returns:
        The jump record, or None when no amplitude achieves the drop.
    """
    gamma0 = candidate.rescaled[-1]
    if max_nodes and gamma0.n_nodes > max_nodes:
        gamma0 = gamma0.resample(max_nodes)
    tau = 1.0 / candidate.scales[-1] ** 2
    x0 = np.asarray(candidate.singular_point, dtype=float)
    u = _lowest_mode(gamma0)
    lam0 = entropy(gamma0).lam
    s0 = AMPLITUDE_START / float(np.sqrt(gamma0.local_geometry().A2.max()))
    for k in range(line_search_steps):
        amplitude = s0 * 2.0 ** -k
        for sign in (1.0, -1.0):
            try:
                gamma = normal_graph(gamma0, u, sign * amplitude, resample=True)
            except GeometryError as exc:
                logger.debug("Amplitude %.3g rejected: %s", sign * amplitude, exc)
                continue
            lam = entropy(gamma).lam
            logger.debug("Replacement amplitude %.3g: entropy %.6f (target %.6f)",
                         sign * amplitude, lam, lam0 - epsilon)
            if lam <= lam0 - epsilon:
                placed = _place(gamma, x0, tau)
                alpha = (old.area() / placed.area()) ** (1.0 / old.dim)
                shift = np.array([0.0, x0[2]]) if isinstance(placed, ProfileSurface) else x0
                new = placed.with_nodes(shift + alpha * (placed.nodes - shift))
                return JumpRecord(time=time, old_surface=old, new_surface=new, entropy_before=lam0,
                                  entropy_after=lam, area_dilation=alpha, amplitude=sign * amplitude)
    return None


def _jump_sample(samples: List[FlowSample], candidate: TangentCandidate) -> FlowSample:
    t_j = candidate.singular_time - 1.0 / candidate.scales[-1] ** 2
    return min(samples, key=lambda s: abs(s.time - t_j))


def generic_piecewise_flow(initial: BaseSurface, config: Optional[FlowConfig] = None) -> FlowTrace:
    """Flow, classify the singularity, and replace non-generic ones.

    Each leg runs until a termination event. Round tangents end the run as
    "round extinction" and cylinders as "non-compact singularity". Any other
    tangent on a profile triggers a replacement jump and a new leg from the
    replaced slice; the flow after the jump time is discarded. Rescaled legs
    also stop once a slice is within ``near_shrinker_tol`` of a self-shrinker.
    Curves never jump: circles and lines are the only embedded curve
    shrinkers.

    Raises:
        ValueError: If the initial surface is not closed.
        FlowError: If a leg fails.
    """
    config = config or FlowConfig()
    problems = config.validate()
    if problems:
        raise ValueError("; ".join(problems))
    if isinstance(initial, RoundProduct) or not initial.is_closed:
        raise ValueError("the piecewise flow starts from a closed curve or profile")
    is_curve = isinstance(initial, DiscreteCurve)
    trace = FlowTrace()
    current, t, leg = initial, config.t_start, 0

    def near_shrinker(sample: FlowSample, steps: int) -> bool:
        if leg > 0 and steps == 0:
            return False
        return residual(sample.surface).l2 < config.near_shrinker_tol

    stop = near_shrinker if config.kind != "mcf" else None
    while True:
        _, termination = _run_leg(current, config, trace, leg, t, stop=stop)
        trace.termination = termination
        if termination in (Termination.TIME_BUDGET, Termination.STEP_BUDGET):
            trace.verdict = "no singularity within budget"
            break
        samples = trace.leg(leg)
        if termination is Termination.NEAR_SHRINKER:
            candidate = _slice_candidate(samples[-1], TANGENT_TOLERANCE)
        else:
            try:
                candidate = extract_tangent(trace)
            except ValueError as exc:
                trace.verdict = "unresolved tangent"
                trace.notes.append(str(exc))
                break
        cls = candidate.classification
        trace.notes.append(f"leg {leg}: tangent {cls.value} at t={candidate.singular_time:.6g}")
        if cls in (TangentClass.SPHERE, TangentClass.CIRCLE):
            trace.verdict = "round extinction"
            break
        if cls in (TangentClass.CYLINDER, TangentClass.LINE):
            trace.verdict = "non-compact singularity"
            break
        if is_curve:
            trace.verdict = "unresolved tangent"
            trace.notes.append("curve flows are never replaced")
            break
        if len(trace.jumps) >= config.max_jumps:
            trace.verdict = "jump budget exhausted"
            break
        old = _jump_sample(samples, candidate)
        jump = replacement_jump(old.surface, candidate, old.time, config.jump_epsilon,
                                config.line_search_steps, max_nodes=config.jump_nodes)
        if jump is None:
            trace.verdict = "jump aborted"
            trace.notes.append(f"no amplitude lowered the entropy by {config.jump_epsilon}")
            break
        logger.info("Replacement at t=%.6g: entropy %.6f -> %.6f, dilation %.8f",
                    jump.time, jump.entropy_before, jump.entropy_after, jump.area_dilation)
        trace.jumps.append(jump)
        trace.samples = [s for s in trace.samples if s.leg != leg or s.time <= old.time]
        current, t, leg = jump.new_surface, old.time, leg + 1
    return trace


# =============================================================================
# Audits
# =============================================================================

def monotonicity_audit(
    trace: FlowTrace,
    probes: Sequence[Tuple[Sequence[float], float]],
    tolerance: float = 1e-6,
) -> Dict[str, Any]:
    """Densities F_{x0, t0−t}(M_t) of every probe along every leg.

    Raises:
        ValueError: If a probe's t0 does not lie beyond the trace.
    """
    series = []
    legs = sorted({s.leg for s in trace.samples})
    for x0, t0 in probes:
        for leg in legs:
            sub = FlowTrace(samples=trace.leg(leg))
            series.append(density_trace(sub, x0, t0, tolerance=tolerance))
    return {
        "series": series,
        "passed": all(s.non_increasing for s in series),
        "worst_increase": max((s.max_increase for s in series), default=0.0),
    }


def _inside(points: np.ndarray, polygon: np.ndarray) -> np.ndarray:
    """Crossing-number point-in-polygon test."""
    a = polygon
    b = np.roll(polygon, -1, axis=0)
    px, py = points[:, 0][:, None], points[:, 1][:, None]
    straddle = (a[None, :, 1] > py) != (b[None, :, 1] > py)
    dy = np.where(b[:, 1] == a[:, 1], 1e-300, b[:, 1] - a[:, 1])
    x_cross = a[None, :, 0] + (py - a[None, :, 1]) * (b[None, :, 0] - a[None, :, 0]) / dy[None, :]
    return (np.sum(straddle & (px < x_cross), axis=1) % 2) == 1


def avoidance_check(
    outer: DiscreteCurve,
    inner: DiscreteCurve,
    cfl: float = 1e-3,
    dt_max: float = 1e-3,
    area_floor: float = 1e-2,
    check_every: int = 10,
    max_steps: int = 200000,
) -> Dict[str, Any]:
    """Flow two nested closed curves together and confirm they stay nested.

    The check runs until the inner curve's length falls below
    ``area_floor`` of its initial value.

    Raises:
        ValueError: If the inner curve does not start strictly inside.
    """
    from .geometry import point_to_polyline

    if not _inside(inner.nodes, outer.nodes).all():
        raise ValueError("inner curve must start strictly inside the outer one")
    length0 = inner.area()
    t, steps = 0.0, 0
    min_gap = math.inf
    passed = True
    while inner.area() >= area_floor * length0 and steps < max_steps:
        peak = max(float(inner.local_geometry().A2.max()), float(outer.local_geometry().A2.max()))
        dt = min(dt_max, cfl / peak)
        inner = mcf_step(inner, dt, step_limit=1.0)
        outer = mcf_step(outer, dt, step_limit=1.0)
        t, steps = t + dt, steps + 1
        if steps % check_every == 0:
            gap = float(point_to_polyline(inner.nodes, outer.nodes, closed=True).min())
            min_gap = min(min_gap, gap)
            if not _inside(inner.nodes, outer.nodes).all():
                passed = False
                break
    return {"passed": passed, "min_gap": min_gap, "steps": steps, "extinction_time": t}
