"""
Display functions for the shrinklab terminal output.
"""

from typing import Any, Dict, Iterable, List

from rich.table import Table

from .engine.types import CheckResult, EntropyResult, FlowTrace, SpectrumReport
from .utils import console, format_value


def display_check_results(results: Iterable[CheckResult]):
    """Display verification results, failures highlighted."""
    table = Table(title="Verification", show_header=True, header_style="bold magenta")
    table.add_column("Surface", style="cyan")
    table.add_column("Check", style="green")
    table.add_column("Value", justify="right")
    table.add_column("Tolerance", justify="right", style="dim")
    table.add_column("Result")

    for r in results:
        status = "[green]pass[/green]" if r.passed else "[bold red]FAIL[/bold red]"
        table.add_row(r.surface, r.check, format_value(r.value), format_value(r.tolerance), status)

    console.print()
    console.print(table)
    console.print()


def display_spectrum(label: str, report: SpectrumReport, closed_form: List[float] = None):
    """Display eigenvalues of L, next to the closed form when one is known."""
    table = Table(title=f"Spectrum of L on {label}", show_header=True, header_style="bold magenta")
    table.add_column("#", style="cyan", justify="right")
    table.add_column("μ", style="green", justify="right")
    if closed_form is not None:
        table.add_column("closed form", style="yellow", justify="right")

    for i, mu in enumerate(report.eigenvalues, 1):
        row = [str(i), format_value(float(mu))]
        if closed_form is not None:
            row.append(format_value(closed_form[i - 1]) if i <= len(closed_form) else "-")
        table.add_row(*row)

    console.print()
    console.print(table)
    console.print()


def display_mapping(title: str, values: Dict[str, Any]):
    """Display a flat metric/value table."""
    table = Table(title=title, show_header=True, header_style="bold magenta")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="green", justify="right")

    for key, value in values.items():
        table.add_row(key, format_value(value))

    console.print()
    console.print(table)
    console.print()


def display_entropy(label: str, result: EntropyResult, reference: float = None):
    """Display the entropy and its maximizing centre and scale."""
    values = {
        "lambda": result.lam,
        "x0": ", ".join(format_value(v) for v in result.x0),
        "t0": result.t0,
        "starts": result.multistart_count,
        "converged": result.converged,
    }
    if reference is not None:
        values["closed form"] = reference
    display_mapping(f"Entropy of {label}", values)


def display_trace(trace: FlowTrace):
    """Display how a flow ended, with one row per replacement jump."""
    summary = {
        "termination": trace.termination.value if trace.termination else None,
        "samples": len(trace.samples),
    }
    if trace.verdict:
        summary["verdict"] = trace.verdict
    if trace.samples:
        summary["final time"] = trace.final.time
        summary["final area"] = trace.final.monitors.get("area")
    display_mapping("Flow", summary)

    if not trace.jumps:
        return
    table = Table(title="Replacement Jumps", show_header=True, header_style="bold cyan")
    table.add_column("Time", style="cyan", justify="right")
    table.add_column("Entropy before", justify="right")
    table.add_column("Entropy after", justify="right")
    table.add_column("Drop", style="green", justify="right")
    table.add_column("Dilation", style="yellow", justify="right")

    for j in trace.jumps:
        table.add_row(format_value(j.time), format_value(j.entropy_before),
                      format_value(j.entropy_after), format_value(j.entropy_drop),
                      format_value(j.area_dilation))

    console.print(table)
    console.print()


def display_checks_table(checks: List[Dict[str, Any]]):
    """Display registered checks in a table."""
    table = Table(title="Available Checks", show_header=True, header_style="bold cyan")
    table.add_column("Check", style="green")
    table.add_column("Tolerance", style="yellow", justify="right")
    table.add_column("Description", style="white")

    for info in checks:
        desc = info["description"]
        table.add_row(
            info["name"],
            format_value(info["tolerance"]),
            desc[:60] + "..." if len(desc) > 60 else desc,
        )

    console.print()
    console.print(table)
    console.print()
