"""
Command handlers for the shrinklab command line.

Every handler takes a resolved RunConfig, runs the engine, writes its report
under the output directory and returns the process exit code. Engine
exceptions propagate to the entry point, which maps them onto exit codes.
"""

import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import RunConfig, example_config, flow_config, validate_config
from .engine.checks import CheckManager
from .engine.checks.builtin import register_all_builtin_checks
from .engine.errors import FlowError
from .engine.flow import extract_tangent, generic_piecewise_flow, monotonicity_audit, run_flow
from .engine.functionals import entropy, entropy_grid_search
from .engine.reports import (
    atomic_write,
    find_golden,
    trace_summary,
    write_csv,
    write_golden,
    write_monitor_csv,
    write_report,
    write_snapshots,
    write_trace_jsonl,
)
from .engine.shrinker import golden_record, residual, solve_angenent_torus
from .engine.spectral import f_stability_test, product_spectrum, spectrum
from .engine.surfaces import RoundProduct, create_surface
from .engine.types import FlowTrace, Termination
from .ui import (
    display_check_results,
    display_checks_table,
    display_entropy,
    display_mapping,
    display_spectrum,
    display_trace,
)
from .utils import console, get_version

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

# Entropy of the library shrinkers; λ is invariant under dilation and translation
CLOSED_FORM_ENTROPY = {
    "circle": math.sqrt(2.0 * math.pi / math.e),
    "sphere": 4.0 / math.e,
    "line": 1.0,
}


# =============================================================================
# Helpers
# =============================================================================

def build_surface(name: str, params: Dict[str, Any], out_dir: Path) -> Any:
    """Create a library surface; the torus is read from the golden directory.

    A torus solved into ``out_dir`` takes precedence over the packaged one.

    Raises:
        GoldenFileMissing: For the torus when neither golden file exists.
    """
    if name == "torus":
        params = {"golden_path": find_golden(out_dir), **params}
    return create_surface(name, **params)


def _selected_surface(config: RunConfig) -> Any:
    name = config.surface_name()
    surface = build_surface(name, config.surface_parameters(), config.out_dir)
    logger.info("Surface %s with %s node(s)", name,
                "analytic" if isinstance(surface, RoundProduct) else surface.n_nodes)
    return surface


def _scalar_rows(data: Dict[str, Any], prefix: str = "") -> List[List[Any]]:
    """Flatten nested scalars of a report body into (key, value) rows."""
    rows = []
    for key in sorted(data):
        value = data[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(_scalar_rows(value, prefix=name + "."))
        elif isinstance(value, (list, tuple)):
            if all(isinstance(v, (int, float, str, bool)) or v is None for v in value):
                rows.extend([f"{name}.{i}", v] for i, v in enumerate(value))
        else:
            rows.append([name, value])
    return rows


def _emit(config: RunConfig, result: Dict[str, Any],
          header: Optional[Sequence[str]] = None, rows: Optional[List[List[Any]]] = None) -> Path:
    """Write the command report in the configured format."""
    name = config.command
    if config.format == "csv":
        if header is None:
            header, rows = ["key", "value"], _scalar_rows(result)
        path = write_csv(config.out_dir / f"{name}.csv", header, rows)
    else:
        path = write_report(config.out_dir / f"{name}.json", name, result,
                            config=config.to_dict(), version=get_version())
    console.print(f"[dim]Report written to {path}[/dim]")
    return path


def _write_trace(config: RunConfig, stem: str, trace: FlowTrace) -> Dict[str, str]:
    """Trace JSONL and monitor CSV next to the report."""
    out = config.out_dir
    jsonl = write_trace_jsonl(out / f"{stem}_trace.jsonl", trace,
                              include_surfaces=config.get("report.trace_surfaces"))
    csv = write_monitor_csv(out / f"{stem}_monitors.csv", trace)
    return {"trace": jsonl.name, "monitors": csv.name}


def _tangent(config: RunConfig, stem: str, trace: FlowTrace) -> Dict[str, Any]:
    """Tangent candidate at the end of the last leg, with snapshot files."""
    try:
        candidate = extract_tangent(trace)
    except ValueError as e:
        logger.warning("No tangent candidate: %s", e)
        return {"error": str(e)}
    paths = write_snapshots(config.out_dir / f"{stem}_snapshots", candidate)
    data = candidate.to_dict()
    data["snapshots"] = [f"{stem}_snapshots/{p.name}" for p in paths]
    return data


# =============================================================================
# Commands
# =============================================================================

def cmd_verify(config: RunConfig) -> int:
    """Run the check battery over the configured library shrinkers.

    Returns:
        0 when every check passes, 1 on any failure, 2 on an empty surface set.
    """
    names = config.get("verify.surfaces")
    if not names:
        console.print("[red]Error: verify.surfaces is empty; nothing to verify[/red]")
        return EXIT_USAGE

    resolution = config.get("verify.resolution")
    surfaces = {}
    for name in names:
        params = {"n_nodes": resolution} if resolution and name != "torus" else {}
        surfaces[name] = build_surface(name, params, config.out_dir)

    manager = CheckManager()
    register_all_builtin_checks(manager)
    only = config.get("verify.checks") or None
    results = manager.run_suite(surfaces, tolerance=config.get("verify.tolerance"), only=only)

    failures = [f"{r.check} on {r.surface}" for r in results if not r.passed]
    display_check_results(results)
    for failure in failures:
        console.print(f"[red]Failed:[/red] {failure}")

    result = {
        "surfaces": list(names),
        "results": [r.to_dict() for r in results],
        "failures": failures,
        "passed": not failures,
    }
    header = ["check", "surface", "passed", "value", "tolerance", "detail"]
    rows = [[r.check, r.surface, r.passed, r.value, r.tolerance, r.detail] for r in results]
    _emit(config, result, header, rows)
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_flow(config: RunConfig) -> int:
    """Run one flow with the flow.* settings and write trace and monitors."""
    surface = _selected_surface(config)
    settings = flow_config(config)
    try:
        trace = run_flow(surface, settings)
    except FlowError as e:
        if e.trace is not None and e.trace.samples:
            _write_trace(config, "flow", e.trace)
        raise

    result = trace_summary(trace)
    result["surface"] = config.surface_name()
    result["files"] = _write_trace(config, "flow", trace)
    if settings.probes:
        audit = monotonicity_audit(trace, settings.probes)
        result["monotonicity"] = {
            "passed": audit["passed"],
            "worst_increase": audit["worst_increase"],
            "series": [s.to_dict() for s in audit["series"]],
        }
        if not audit["passed"]:
            logger.warning("Density increased by %.3g along the flow", audit["worst_increase"])
    ended = trace.termination in (Termination.EXTINCTION, Termination.SINGULARITY)
    if config.get("flow.tangent") and ended and settings.kind == "mcf":
        result["tangent"] = _tangent(config, "flow", trace)

    display_trace(trace)
    _emit(config, result)
    return EXIT_OK


def cmd_spectrum(config: RunConfig) -> int:
    """Eigenvalues of L on the selected surface, with the stability verdict."""
    name = config.surface_name()
    surface = _selected_surface(config)
    count = config.get("spectrum.count")
    report = spectrum(surface, count=count, radius=config.get("spectrum.radius"),
                      mode=config.get("spectrum.mode"))

    result = {"surface": name, **report.to_dict(include_functions=config.get("spectrum.functions"))}
    closed_form = None
    if name == "circle" and not isinstance(surface, RoundProduct) and config.get("spectrum.mode") == 0:
        radius = float(np.linalg.norm(surface.nodes - surface.centroid(), axis=1).mean())
        closed_form = product_spectrum(RoundProduct(2, 1, radius), count).eigenvalues.tolist()
        result["closed_form"] = closed_form
        result["closed_form_error"] = float(np.max(np.abs(report.eigenvalues - closed_form)))

    if config.get("spectrum.stability"):
        res = residual(surface)
        if res.accepted():
            result["stability"] = f_stability_test(surface).to_dict()
        else:
            result["stability"] = {"skipped": f"not a shrinker (residual {res.max:.3g})"}

    display_spectrum(name, report, closed_form)
    header = ["index", "mu"] + (["closed_form"] if closed_form else [])
    rows = [[i, float(mu)] + ([closed_form[i]] if closed_form else [])
            for i, mu in enumerate(report.eigenvalues)]
    _emit(config, result, header, rows)
    return EXIT_OK


def cmd_entropy(config: RunConfig) -> int:
    """Entropy of the selected surface, cross-checked against a grid search."""
    name = config.surface_name()
    surface = _selected_surface(config)
    found = entropy(surface)

    result = {"surface": name, **found.to_dict()}
    if not config.get("entropy.trace"):
        result.pop("optimizer_trace")
    reference = CLOSED_FORM_ENTROPY.get(name)
    if reference is not None:
        result["closed_form"] = reference
        result["closed_form_error"] = abs(found.lam - reference)
    if config.get("entropy.oracle"):
        grid = entropy_grid_search(surface, n_space=config.get("entropy.grid_space"),
                                   n_time=config.get("entropy.grid_time"))
        result["grid_lambda"] = grid.lam
        result["grid_gap"] = found.lam - grid.lam
        if grid.lam > found.lam * (1 + 1e-8):
            logger.warning("Grid search beat the ascent: %.10f > %.10f", grid.lam, found.lam)

    display_entropy(name, found, reference)
    _emit(config, result)
    return EXIT_OK


def cmd_solve(config: RunConfig) -> int:
    """Solve for the shrinking torus and write its golden file."""
    solved = solve_angenent_torus(
        tol=config.get("solve.tol"),
        start=config.get("solve.start"),
        h=config.get("solve.step"),
        n_nodes=config.get("solve.n_nodes"),
    )
    path = write_golden(config.out_dir, golden_record(solved))

    result = solved.to_dict()
    result.pop("surface", None)
    result["golden_file"] = path.relative_to(config.out_dir).as_posix()
    display_mapping("Shrinking torus", {
        "r0": solved.parameters["r0"],
        "closure defect": solved.closure_defect,
        "residual max": solved.residual_max,
        "min r": solved.parameters["min_r"],
        "max r": solved.parameters["max_r"],
        "golden file": str(path),
    })
    _emit(config, result)
    return EXIT_OK


def cmd_generic(config: RunConfig) -> int:
    """Piecewise flow with tangent classification and replacement jumps."""
    surface = _selected_surface(config)
    settings = flow_config(config)
    try:
        trace = generic_piecewise_flow(surface, settings)
    except FlowError as e:
        if e.trace is not None and e.trace.samples:
            _write_trace(config, "generic", e.trace)
        raise

    result = trace_summary(trace)
    result["surface"] = config.surface_name()
    result["files"] = _write_trace(config, "generic", trace)
    if trace.verdict in ("round extinction", "non-compact singularity") and config.get("flow.tangent"):
        result["tangent"] = _tangent(config, "generic", trace)
    for jump in trace.jumps:
        logger.info("Jump at t=%.6g lowered the entropy by %.3g", jump.time, jump.entropy_drop)

    display_trace(trace)
    console.print(f"[bold]Verdict:[/bold] {trace.verdict}")
    _emit(config, result)
    return EXIT_OK


def cmd_config(config: RunConfig, write: Optional[str] = None) -> int:
    """Show the effective configuration, or write a template with every key."""
    if write:
        path = atomic_write(write, example_config())
        console.print(f"[green]Config template written to:[/green] {path}")
        return EXIT_OK

    errors = validate_config(config)
    display_mapping(f"Configuration ({config.source})", dict(sorted(config.params.items())))
    console.print(f"[dim]Output directory: {config.out_dir}[/dim]")
    console.print(f"[dim]Golden torus: {find_golden(config.out_dir)}[/dim]")
    manager = CheckManager()
    register_all_builtin_checks(manager)
    display_checks_table(manager.list_checks())
    for error in errors:
        console.print(f"[red]{error}[/red]")
    return EXIT_USAGE if errors else EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "verify": cmd_verify,
    "flow": cmd_flow,
    "spectrum": cmd_spectrum,
    "entropy": cmd_entropy,
    "solve": cmd_solve,
    "generic": cmd_generic,
    "config": cmd_config,
}
