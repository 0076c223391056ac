#!/usr/bin/env python3
"""
Runtime benchmark script for shrinklab.

Times the reference computations against their budgets:
- closed-form and quadrature values of F
- entropy maximization on the round shrinkers
- spectrum of L on the circle and the sphere Laplacian law
- shrinking-circle flow to extinction
- shrinking torus solve

Results are stored in benchmarks/runtime-log.json for tracking across releases.

Usage:
    # Run every case once
    uv run python scripts/benchmark.py

    # Several iterations per case
    uv run python scripts/benchmark.py --iterations 3

    # Only some cases
    uv run python scripts/benchmark.py --case entropy --case spectrum

    # Don't append to the log
    uv run python scripts/benchmark.py --no-save
"""

import argparse
import json
import math
import sys
import time
from datetime import datetime
from pathlib import Path
from statistics import mean

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from shrinklab.engine.flow import FlowConfig, run_flow  # noqa: E402
from shrinklab.engine.functionals import entropy, f_functional  # noqa: E402
from shrinklab.engine.shrinker import solve_angenent_torus  # noqa: E402
from shrinklab.engine.spectral import laplacian_spectrum, spectrum  # noqa: E402
from shrinklab.engine.surfaces import library  # noqa: E402
from shrinklab.utils import console, get_version  # noqa: E402


def case_f_values() -> float:
    values = [
        f_functional(library.line(), (0.0, 0.0), 1.0).value,
        f_functional(library.circle(), (0.0, 0.0), 1.0).value,
        f_functional(library.sphere(), (0.0, 0.0, 0.0), 1.0).value,
    ]
    return abs(values[2] - 4.0 / math.e)


def case_entropy() -> float:
    lam = entropy(library.circle()).lam
    return abs(lam - math.sqrt(2.0 * math.pi / math.e))


def case_spectrum() -> float:
    mu = spectrum(library.circle(n_nodes=512), count=5).eigenvalues
    return float(max(abs(mu - [-1.0, -0.5, -0.5, 1.0, 1.0])))


def case_sphere_laplacian() -> float:
    radius = 2.0
    mu = laplacian_spectrum(library.sphere(radius=radius, n_nodes=513), count=4)
    exact = [k * (k + 1) / radius ** 2 for k in range(4)]
    return float(max(abs(mu - exact)))


def case_circle_flow() -> float:
    config = FlowConfig(kind="mcf", cfl=1e-4, sample_every=200)
    trace = run_flow(library.circle(radius=1.0, n_nodes=64), config)
    return abs(trace.final.time - 0.5)


def case_torus() -> float:
    return solve_angenent_torus().residual_max


# name -> (callable returning an accuracy figure, time budget in seconds)
BENCHMARK_CASES = {
    "f_values": (case_f_values, 1.0),
    "entropy": (case_entropy, 10.0),
    "spectrum": (case_spectrum, 10.0),
    "sphere_laplacian": (case_sphere_laplacian, 10.0),
    "circle_flow": (case_circle_flow, 120.0),
    "torus": (case_torus, 120.0),
}


def run_case(name: str, iterations: int) -> dict:
    """Time one case; the accuracy figure comes from the last iteration."""
    fn, budget = BENCHMARK_CASES[name]
    times = []
    accuracy = None
    for _ in range(iterations):
        start = time.perf_counter()
        try:
            accuracy = fn()
        except Exception as e:
            return {"case": name, "error": f"{type(e).__name__}: {e}"}
        times.append(time.perf_counter() - start)
    return {
        "case": name,
        "seconds": {"mean": round(mean(times), 4), "min": round(min(times), 4),
                    "max": round(max(times), 4)},
        "budget": budget,
        "within_budget": max(times) <= budget,
        "accuracy": accuracy,
    }


def save_results(results: list) -> Path:
    """Append results to the runtime log file."""
    log_dir = PROJECT_ROOT / "benchmarks"
    log_dir.mkdir(exist_ok=True)
    log_file = log_dir / "runtime-log.json"

    if log_file.exists():
        with open(log_file) as f:
            log = json.load(f)
    else:
        log = {"description": "shrinklab runtime benchmark log", "entries": []}

    log["entries"].append({
        "timestamp": datetime.now().isoformat(),
        "version": get_version(),
        "results": results,
    })
    with open(log_file, "w") as f:
        json.dump(log, f, indent=2)
    console.print(f"\nResults saved to {log_file}")
    return log_file


def main() -> int:
    parser = argparse.ArgumentParser(description="shrinklab runtime benchmark")
    parser.add_argument("--iterations", type=int, default=1, help="iterations per case (default: 1)")
    parser.add_argument("--case", action="append", choices=sorted(BENCHMARK_CASES),
                        help="run only this case (repeatable)")
    parser.add_argument("--no-save", action="store_true", help="don't save results to the log file")
    args = parser.parse_args()

    console.print(f"shrinklab runtime benchmark v{get_version()}")
    results = []
    for name in args.case or list(BENCHMARK_CASES):
        result = run_case(name, args.iterations)
        results.append(result)
        if "error" in result:
            console.print(f"  [red]{name}: {result['error']}[/red]")
            continue
        status = "[green]OK[/green]" if result["within_budget"] else "[red]OVER BUDGET[/red]"
        console.print(f"  {name:<18} {result['seconds']['mean']:8.3f}s "
                      f"(budget {result['budget']:g}s) accuracy {result['accuracy']:.2e} {status}")

    if not args.no_save:
        save_results(results)
    failed = [r for r in results if "error" in r or not r["within_budget"]]
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
