"""
Main entry point for the shrinklab command line.

Exit codes: 0 success, 1 verification failure, 2 usage, configuration or
missing golden file, 3 numerical failure.
"""

import argparse
import logging
import sys
from typing import Dict, List, Optional

from .commands import COMMANDS, EXIT_NUMERICAL, EXIT_USAGE, cmd_config
from .config import FORMATS, load_config, validate_config
from .engine.errors import GoldenFileMissing, ShrinkLabError
from .utils import console, get_version, setup_logging

logger = logging.getLogger(__name__)

SUBCOMMANDS = [
    ("verify", "Run the invariant battery over the library shrinkers"),
    ("flow", "Run mean curvature flow or rescaled flow on a library surface"),
    ("spectrum", "Eigenvalues of the stability operator and the stability verdict"),
    ("entropy", "Entropy of a library surface with its maximizing centre and scale"),
    ("solve", "Solve for the shrinking torus and write its golden file"),
    ("generic", "Piecewise flow with tangent classification and replacement jumps"),
    ("config", "Show the effective configuration or write a template"),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shrinklab",
        description="Numerical laboratory for self-shrinkers, entropy and mean curvature flow.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {get_version()}")
    parser.add_argument("--config", metavar="PATH", help="config file (key = value lines)")
    parser.add_argument("--out", metavar="DIR", help="output directory for reports and golden data")
    parser.add_argument("--format", choices=FORMATS, help="report format")
    parser.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="overrides", help="override one config key (repeatable)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name, help_text in SUBCOMMANDS:
        p = sub.add_parser(name, help=help_text)
        if name in ("flow", "spectrum", "entropy", "generic"):
            p.add_argument("--surface", help="library surface name (sets surface.name)")
        if name == "config":
            p.add_argument("--write", metavar="PATH", help="write a template with every key")
    return parser


def _parse_overrides(items: List[str]) -> Dict[str, str]:
    """Split KEY=VALUE pairs.

    Raises:
        ValueError: On an item without '='.
    """
    overrides = {}
    for item in items:
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    setup_logging(args.verbose)

    try:
        overrides = _parse_overrides(args.overrides)
        if getattr(args, "surface", None):
            overrides["surface.name"] = args.surface
        config = load_config(args.command, args.config, args.out, args.format, overrides)
    except ValueError as e:
        console.print(f"[red]Configuration error: {e}[/red]")
        return EXIT_USAGE

    if args.command == "config":
        return cmd_config(config, write=args.write)

    errors = validate_config(config)
    if errors:
        for error in errors:
            console.print(f"[red]Configuration error: {error}[/red]")
        return EXIT_USAGE

    logger.info("Running %s (config: %s, output: %s)", args.command, config.source, config.out_dir)
    try:
        return COMMANDS[args.command](config)
    except GoldenFileMissing as e:
        console.print(f"[red]Error: {e}[/red]")
        console.print("[yellow]Run 'shrinklab solve' with the same --out first.[/yellow]")
        return EXIT_USAGE
    except ShrinkLabError as e:
        console.print(f"[red]Numerical failure ({type(e).__name__}): {e}[/red]")
        return EXIT_NUMERICAL
    except (ValueError, KeyError) as e:
        console.print(f"[red]Error: {e}[/red]")
        return EXIT_USAGE
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted[/yellow]")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
