"""
Report, trace and golden-file persistence.

Every file is written atomically (temporary file in the target directory,
then rename) and JSON is emitted with sorted keys and fixed float
formatting, so repeated runs with the same configuration produce
byte-identical output.
"""

import csv
import io
import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .surfaces import surface_from_dict
from .types import FlowSample, FlowTrace, TangentCandidate, _floats

logger = logging.getLogger(__name__)

REPORT_SCHEMA = "shrinklab.report/1"
GOLDEN_VERSION = "v1"
GOLDEN_TORUS = "angenent_torus.json"

# Golden data shipped with the package; written by scripts/make_golden.py
PACKAGE_DATA_DIR = Path(__file__).resolve().parent.parent / "data"

PathLike = Union[str, Path]


def _clean(value: Any) -> Any:
    """JSON-safe copy: numpy data to Python, non-finite floats to strings."""
    value = _floats(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def dumps(data: Any) -> str:
    """Deterministic JSON text."""
    return json.dumps(_clean(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def atomic_write(path: PathLike, text: str) -> Path:
    """Write text to ``path`` through a temporary file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# =============================================================================
# Reports
# =============================================================================

def write_report(
    path: PathLike,
    command: str,
    result: Dict[str, Any],
    config: Optional[Dict[str, Any]] = None,
    version: str = "",
) -> Path:
    """Write a command report wrapped in the schema envelope."""
    envelope = {
        "schema": REPORT_SCHEMA,
        "command": command,
        "version": version,
        "config": config or {},
        "result": result,
    }
    out = atomic_write(path, dumps(envelope))
    logger.debug("Wrote %s report to %s", command, out)
    return out


def read_report(path: PathLike) -> Dict[str, Any]:
    """Load a report written by ``write_report``.

    Raises:
        ValueError: If the schema tag is missing or unknown.
    """
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if data.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unsupported report schema in {path}: {data.get('schema')!r}")
    return data


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(value: Any) -> Any:
    value = _clean(value)
    if isinstance(value, float):
        return repr(value)
    return value


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV table with a header row."""
    return atomic_write(path, _csv_text(header, rows))


# =============================================================================
# Flow traces
# =============================================================================

def monitor_names(trace: FlowTrace) -> List[str]:
    """Sorted union of the monitor names of all samples."""
    names = set()
    for sample in trace.samples:
        names.update(sample.monitors)
    return sorted(names)


def write_trace_jsonl(path: PathLike, trace: FlowTrace, include_surfaces: bool = True) -> Path:
    """One JSON object per sample, in time order within each leg."""
    lines = [
        json.dumps(_clean(s.to_dict(include_surface=include_surfaces)), sort_keys=True)
        for s in trace.samples
    ]
    return atomic_write(path, "\n".join(lines) + ("\n" if lines else ""))


def read_trace_jsonl(path: PathLike) -> FlowTrace:
    """Restore the samples of a trace written with surfaces included."""
    trace = FlowTrace()
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            data = json.loads(line)
            monitors = {k: float(v) for k, v in data["monitors"].items()}
            trace.samples.append(FlowSample(
                time=float(data["time"]),
                surface=surface_from_dict(data["surface"]),
                monitors=monitors,
                leg=int(data["leg"]),
            ))
    return trace


def write_monitor_csv(path: PathLike, trace: FlowTrace) -> Path:
    """Monitor table: time, leg and every monitor (empty where not sampled)."""
    names = monitor_names(trace)
    rows = [
        [s.time, s.leg] + [s.monitors.get(name, "") for name in names]
        for s in trace.samples
    ]
    return write_csv(path, ["time", "leg"] + names, rows)


def write_snapshots(directory: PathLike, candidate: TangentCandidate) -> List[Path]:
    """Node files of the rescaled slices of a tangent candidate, coarse to fine."""
    directory = Path(directory)
    paths = []
    for k, (scale, surface) in enumerate(zip(candidate.scales, candidate.rescaled)):
        rows = [list(p) for p in surface.nodes]
        header = ["r", "z"] if surface.kind == "profile" else ["x", "y"]
        paths.append(write_csv(directory / f"rescaled_{k:02d}_c{scale:.6g}.csv", header, rows))
    return paths


def trace_summary(trace: FlowTrace) -> Dict[str, Any]:
    """Report body of a flow trace: termination, verdict, jumps, final monitors."""
    data = trace.to_dict()
    if trace.samples:
        data["final_time"] = trace.final.time
        data["final_monitors"] = dict(trace.final.monitors)
    entropy = trace.monitor("entropy")
    finite = entropy[np.isfinite(entropy)]
    if finite.size >= 2:
        data["entropy_max_increase"] = float(max(0.0, np.diff(finite).max()))
    return data


# =============================================================================
# Golden files
# =============================================================================

def golden_dir(out_dir: PathLike) -> Path:
    """Versioned golden data directory under an output directory."""
    return Path(out_dir) / "golden" / GOLDEN_VERSION


def golden_torus_path(out_dir: PathLike) -> Path:
    return golden_dir(out_dir) / GOLDEN_TORUS


def find_golden(out_dir: PathLike, name: str = GOLDEN_TORUS) -> Path:
    """Golden file under the output directory, else the packaged copy.

    When neither exists the output-directory path is returned, so loaders
    report where ``shrinklab solve`` would write it.
    """
    local = golden_dir(out_dir) / name
    if local.exists():
        return local
    shipped = golden_dir(PACKAGE_DATA_DIR) / name
    return shipped if shipped.exists() else local


def write_golden(out_dir: PathLike, record: Dict[str, Any], name: str = GOLDEN_TORUS) -> Path:
    """Write a golden record into the versioned data directory."""
    path = atomic_write(golden_dir(out_dir) / name, dumps(record))
    logger.info("Golden file written to %s", path)
    return path
