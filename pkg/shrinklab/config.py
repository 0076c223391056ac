"""
Configuration management for shrinklab.

Run settings are read from a flat key = value file with dotted keys
(``flow.dt_max = 1e-3``). Search order:
1. Path given with --config
2. ./shrinklab.cfg (project-specific)
3. ~/.shrinklab/shrinklab.cfg (user global)
4. Built-in defaults

The output directory is the only setting taken from the environment:
--out, then SHRINKLAB_OUT_DIR (environment or .env file), then
./shrinklab-out.
"""

import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from dotenv import dotenv_values, load_dotenv

# Load environment variables from .env file
load_dotenv()

CONFIG_FILENAME = "shrinklab.cfg"
USER_CONFIG_DIR = Path.home() / ".shrinklab"
DEFAULT_OUT_DIR = "shrinklab-out"
OUT_DIR_ENV = "SHRINKLAB_OUT_DIR"

COMMANDS = ("verify", "flow", "spectrum", "entropy", "solve", "generic", "config")
FORMATS = ("json", "csv")

# Library surface used by a command when surface.name is left empty
DEFAULT_SURFACE = {
    "flow": "circle",
    "spectrum": "circle",
    "entropy": "circle",
    "generic": "dumbbell",
}

# =============================================================================
# Built-in defaults
# =============================================================================

BUILTIN_DEFAULTS: Dict[str, Any] = {
    "run.seed": 0,
    "report.format": "json",
    "report.trace_surfaces": True,

    "surface.name": "",
    "surface.n_nodes": 0,

    "verify.surfaces": ["circle", "sphere", "cylinder", "line", "torus"],
    "verify.checks": [],
    "verify.tolerance": None,
    "verify.resolution": 0,

    "spectrum.count": 6,
    "spectrum.radius": None,
    "spectrum.mode": 0,
    "spectrum.functions": False,
    "spectrum.stability": True,

    "entropy.oracle": True,
    "entropy.grid_space": 48,
    "entropy.grid_time": 24,
    "entropy.trace": False,

    "solve.start": "outer",
    "solve.tol": 1e-12,
    "solve.n_nodes": 4096,
    "solve.step": 1e-3,

    "flow.kind": "mcf",
    "flow.t_start": 0.0,
    "flow.t_end": None,
    "flow.max_steps": 200000,
    "flow.dt_max": 1e-3,
    "flow.cfl": 2e-4,
    "flow.adaptive": True,
    "flow.step_limit": 0.05,
    "flow.area_floor": 1e-3,
    "flow.singular_factor": 1e3,
    "flow.refine_threshold": 0.2,
    "flow.max_nodes": 4096,
    "flow.ends": "neumann",
    "flow.sample_every": 100,
    "flow.monitor_entropy": False,
    "flow.probes": [],
    "flow.jump_epsilon": 1e-3,
    "flow.line_search_steps": 8,
    "flow.jump_nodes": 512,
    "flow.max_jumps": 4,
    "flow.near_shrinker_tol": 0.05,
    "flow.tangent": True,
}

# Keys whose default is None, with the type their values take
NULLABLE: Dict[str, type] = {
    "verify.tolerance": float,
    "spectrum.radius": float,
    "flow.t_end": float,
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


# =============================================================================
# Config File Loading
# =============================================================================

def _find_config_file(explicit: Optional[str] = None) -> Optional[Path]:
    """Find the configuration file following the search order.

    Raises:
        ValueError: If an explicit path is given but does not exist.
    """
    if explicit:
        path = Path(explicit).expanduser()
        if not path.is_file():
            raise ValueError(f"Config file not found: {explicit}")
        return path

    search_paths = [
        Path.cwd() / CONFIG_FILENAME,
        USER_CONFIG_DIR / CONFIG_FILENAME,
    ]
    for path in search_paths:
        if path.is_file():
            return path
    return None


def _load_config_file(path: Path) -> Dict[str, str]:
    """Parse a key = value file.

    Raises:
        ValueError: If the file cannot be read or a key has no value.
    """
    try:
        raw = dotenv_values(path)
    except (OSError, UnicodeDecodeError) as e:
        raise ValueError(f"Cannot read config file {path}: {e}")
    missing = [key for key, value in raw.items() if value is None]
    if missing:
        raise ValueError(f"Config key without a value in {path}: {missing[0]}")
    return dict(raw)


def _is_surface_parameter(key: str) -> bool:
    return key.startswith("surface.") and key not in BUILTIN_DEFAULTS


def _coerce(key: str, raw: Any) -> Any:
    """Convert a raw string to the type of the key's built-in default.

    Raises:
        ValueError: If the value does not parse.
    """
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if key in NULLABLE:
        if text.lower() in ("", "none"):
            return None
        target: type = NULLABLE[key]
    elif _is_surface_parameter(key):
        target = int if key == "surface.n_nodes" or key.endswith("_nodes") else float
    else:
        target = type(BUILTIN_DEFAULTS[key])

    try:
        if target is bool:
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(text)
        if target is int:
            return int(text)
        if target is float:
            return float(text)
        if target is list:
            return [item.strip() for item in text.split(",") if item.strip()]
    except ValueError:
        raise ValueError(f"Config key {key}: cannot parse {raw!r} as {target.__name__}")
    return text


def parse_values(raw: Dict[str, Any], source: str = "config") -> Dict[str, Any]:
    """Coerce known keys and warn about unknown ones.

    ``surface.*`` keys other than name and n_nodes pass through as factory
    parameters of the selected library surface.
    """
    values = {}
    for key, value in raw.items():
        if key not in BUILTIN_DEFAULTS and not _is_surface_parameter(key):
            warnings.warn(f"Config validation: unknown key '{key}' in {source}")
            continue
        values[key] = _coerce(key, value)
    return values


def parse_probe(text: str) -> Tuple[Tuple[float, ...], float]:
    """Parse a density probe ``"x y [z] @ t0"``.

    Raises:
        ValueError: On a malformed probe.
    """
    if "@" not in text:
        raise ValueError(f"Probe {text!r} must look like 'x y @ t0'")
    point, t0 = text.split("@", 1)
    try:
        x0 = tuple(float(v) for v in point.split())
        return x0, float(t0)
    except ValueError:
        raise ValueError(f"Probe {text!r} has a non-numeric coordinate")


def resolve_out_dir(explicit: Optional[str] = None) -> Path:
    """Output directory: --out, then SHRINKLAB_OUT_DIR, then ./shrinklab-out."""
    return Path(explicit or os.getenv(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


# =============================================================================
# Run Configuration
# =============================================================================

@dataclass
class RunConfig:
    """Fully resolved settings of one command run.

    Attributes:
        command: Sub-command name.
        params: Every dotted key with its effective value.
        source: Path of the loaded config file or "builtin".
        out_dir: Directory receiving reports, traces and golden files.
        format: Report format, "json" or "csv".
        seed: Seed of every randomized step.
    """
    command: str
    params: Dict[str, Any] = field(default_factory=lambda: dict(BUILTIN_DEFAULTS))
    source: str = "builtin"
    out_dir: Path = field(default_factory=lambda: Path(DEFAULT_OUT_DIR))
    format: str = "json"
    seed: int = 0

    def get(self, key: str, default: Any = None) -> Any:
        return self.params.get(key, default)

    def section(self, prefix: str) -> Dict[str, Any]:
        """Keys under ``prefix.`` with the prefix stripped."""
        head = prefix + "."
        return {k[len(head):]: v for k, v in self.params.items() if k.startswith(head)}

    def surface_name(self) -> str:
        return self.get("surface.name") or DEFAULT_SURFACE.get(self.command, "circle")

    def surface_parameters(self) -> Dict[str, Any]:
        """Factory keyword arguments for the selected surface."""
        params = {k: v for k, v in self.section("surface").items() if k not in ("name", "n_nodes")}
        if self.get("surface.n_nodes"):
            params["n_nodes"] = self.get("surface.n_nodes")
        return params

    def probes(self) -> List[Tuple[Tuple[float, ...], float]]:
        return [parse_probe(p) for p in self.get("flow.probes", [])]

    def to_dict(self) -> Dict[str, Any]:
        """Reproducibility record embedded in every report.

        The output directory is left out so that reports do not depend on
        where they are written.
        """
        return {
            "command": self.command,
            "source": self.source,
            "format": self.format,
            "seed": self.seed,
            "params": dict(sorted(self.params.items())),
        }


def load_config(
    command: str,
    config_path: Optional[str] = None,
    out_dir: Optional[str] = None,
    fmt: Optional[str] = None,
    overrides: Optional[Dict[str, str]] = None,
) -> RunConfig:
    """Build the run configuration from file, overrides and flags.

    Args:
        command: Sub-command name.
        config_path: Explicit config file (--config).
        out_dir: Output directory (--out).
        fmt: Report format (--format); wins over report.format.
        overrides: KEY=VALUE pairs from --set, applied after the file.

    Raises:
        ValueError: On a missing or malformed config file or value.
    """
    params = dict(BUILTIN_DEFAULTS)
    path = _find_config_file(config_path)
    source = "builtin"
    if path:
        params.update(parse_values(_load_config_file(path), source=str(path)))
        source = str(path)
    if overrides:
        params.update(parse_values(overrides, source="--set"))
    if fmt:
        params["report.format"] = fmt

    return RunConfig(
        command=command,
        params=params,
        source=source,
        out_dir=resolve_out_dir(out_dir),
        format=params["report.format"],
        seed=params["run.seed"],
    )


def validate_config(config: RunConfig) -> List[str]:
    """Validate a run configuration.

    Returns:
        List of error messages (empty if valid).
    """
    from .engine.surfaces import list_registered_surfaces

    errors = []
    if config.command not in COMMANDS:
        errors.append(f"Unknown command: {config.command}")
    if config.format not in FORMATS:
        errors.append(f"report.format must be one of {FORMATS}, got {config.format!r}")

    known = list_registered_surfaces()
    if config.command == "verify":
        surfaces = config.get("verify.surfaces")
        if not surfaces:
            errors.append("verify.surfaces is empty; name at least one library shrinker")
        for name in surfaces:
            if name not in known:
                errors.append(f"verify.surfaces: unknown surface '{name}'")
        tol = config.get("verify.tolerance")
        if tol is not None and not tol > 0:
            errors.append("verify.tolerance must be positive")
    elif config.command in DEFAULT_SURFACE and config.surface_name() not in known:
        errors.append(f"surface.name: unknown surface '{config.surface_name()}'")

    if config.get("spectrum.count") < 1:
        errors.append("spectrum.count must be at least 1")
    if config.get("solve.start") not in ("outer", "inner"):
        errors.append("solve.start must be 'outer' or 'inner'")
    if not config.get("solve.tol") > 0 or not config.get("solve.step") > 0:
        errors.append("solve.tol and solve.step must be positive")

    if config.command in ("flow", "generic"):
        try:
            config.probes()
        except ValueError as e:
            errors.append(f"flow.probes: {e}")
        else:
            errors.extend(flow_config(config).validate())
    return errors


def flow_config(config: RunConfig):
    """FlowConfig from the flow.* keys."""
    from .engine.flow import FlowConfig

    values = config.section("flow")
    values["probes"] = config.probes()
    return FlowConfig.from_mapping(values)


def example_config() -> str:
    """Every key with its built-in default, in config file syntax."""
    lines = ["# shrinklab configuration (built-in defaults)"]
    section = None
    for key, value in BUILTIN_DEFAULTS.items():
        head = key.split(".", 1)[0]
        if head != section:
            lines.append("")
            section = head
        if value is None:
            text = ""
        elif isinstance(value, bool):
            text = str(value).lower()
        elif isinstance(value, list):
            text = ", ".join(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
