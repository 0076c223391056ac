#!/usr/bin/env python3
"""
Golden data generator for shrinklab.

Solves for the shrinking torus from both shooting starts (outermost and
innermost point of the profile), checks that the two solves describe the
same profile, and writes the golden file that ``shrinklab verify`` reads.

Usage:
    # Write the packaged golden data under shrinklab/data/golden/v1
    uv run python scripts/make_golden.py

    # Write into an output directory instead, with a custom node count
    uv run python scripts/make_golden.py --out shrinklab-out --nodes 8192

    # Solve and cross-check only, write nothing
    uv run python scripts/make_golden.py --dry-run
"""

import argparse
import sys
from pathlib import Path

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from shrinklab.engine.functionals import entropy  # noqa: E402
from shrinklab.engine.geometry import hausdorff_distance  # noqa: E402
from shrinklab.engine.reports import PACKAGE_DATA_DIR, write_golden  # noqa: E402
from shrinklab.engine.shrinker import golden_record, solve_angenent_torus  # noqa: E402
from shrinklab.engine.spectral import spectrum  # noqa: E402
from shrinklab.utils import console, setup_logging  # noqa: E402

# The two starts must describe the same profile to this accuracy
AGREEMENT_TOL = 1e-5


def cross_check(outer, inner) -> dict:
    """Compare the profiles found from the two starts."""
    po, pi = outer.parameters, inner.parameters
    return {
        "hausdorff": hausdorff_distance(outer.surface.nodes, inner.surface.nodes),
        "max_r_gap": abs(po["r0"] - pi["crossing_r"]),
        "min_r_gap": abs(po["crossing_r"] - pi["r0"]),
        "max_abs_z_gap": abs(po["max_abs_z"] - pi["max_abs_z"]),
    }


def main() -> int:
    parser = argparse.ArgumentParser(description="shrinklab golden data generator")
    parser.add_argument("--out", help=f"output directory (default: {PACKAGE_DATA_DIR})")
    parser.add_argument("--nodes", type=int, default=4096, help="profile node count (default: 4096)")
    parser.add_argument("--step", type=float, default=1e-3, help="ODE step (default: 1e-3)")
    parser.add_argument("--dry-run", action="store_true", help="don't write the golden file")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    args = parser.parse_args()
    setup_logging(args.verbose)

    console.print("[bold]Solving from the outermost point[/bold]")
    outer = solve_angenent_torus(start="outer", n_nodes=args.nodes, h=args.step)
    console.print("[bold]Solving from the innermost point[/bold]")
    inner = solve_angenent_torus(start="inner", n_nodes=args.nodes, h=args.step)

    gaps = cross_check(outer, inner)
    for name, gap in gaps.items():
        console.print(f"  {name}: {gap:.3e}")
    if max(gaps.values()) > AGREEMENT_TOL:
        console.print(f"[red]Starts disagree beyond {AGREEMENT_TOL:g}; golden data not written[/red]")
        return 1

    record = golden_record(outer)
    record["oracle"] = {
        "inner_start": {k: inner.parameters[k] for k in ("r0", "crossing_r", "max_abs_z")},
        "agreement": gaps,
        "mu1": spectrum(outer.surface, count=1).mu1,
        "entropy": entropy(outer.surface).lam,
    }
    console.print(f"  mu1 = {record['oracle']['mu1']:.8f}, entropy = {record['oracle']['entropy']:.8f}")

    if args.dry_run:
        console.print("[dim]Dry run: nothing written[/dim]")
        return 0
    path = write_golden(Path(args.out) if args.out else PACKAGE_DATA_DIR, record)
    console.print(f"[green]Golden file written to:[/green] {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
