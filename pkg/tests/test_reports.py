"""Unit tests for shrinklab.engine.reports."""
import json
from pathlib import Path

import numpy as np
import pytest

from shrinklab.engine import reports
from shrinklab.engine.surfaces import library
from shrinklab.engine.types import FlowSample, FlowTrace, TangentCandidate, TangentClass, Termination


def _trace():
    trace = FlowTrace(termination=Termination.TIME_BUDGET, verdict="time budget reached")
    for k, radius in enumerate((1.0, 0.9, 0.8)):
        monitors = {"area": 2.0 * np.pi * radius, "entropy": 1.5 - 0.01 * k}
        if k == 1:
            monitors["density_0"] = 1.2
        trace.samples.append(FlowSample(time=0.1 * k, surface=library.circle(radius=radius, n_nodes=8),
                                        monitors=monitors))
    return trace


class TestJson:
    """Tests for deterministic JSON output."""

    def test_sorted_keys_and_numpy_values(self):
        """Test that keys are sorted and numpy data becomes plain JSON."""
        text = reports.dumps({"b": np.float64(1.5), "a": np.arange(3)})
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [0, 1, 2], "b": 1.5}

    def test_non_finite_floats_become_strings(self):
        """Test that NaN and infinities are written as strings."""
        data = json.loads(reports.dumps({"x": [float("nan"), float("inf"), -float("inf")]}))
        assert data["x"] == ["nan", "inf", "-inf"]

    def test_identical_input_gives_identical_text(self):
        """Test that two dumps of equal data are byte-identical."""
        payload = {"z": 0.1 + 0.2, "nested": {"y": [1.0, 2.0], "x": None}}
        assert reports.dumps(payload) == reports.dumps(dict(payload))


class TestAtomicWrite:
    """Tests for atomic file writes."""

    def test_creates_parents_and_leaves_no_temporaries(self, tmp_path):
        """Test that missing directories are created and no temp file is left."""
        target = tmp_path / "a" / "b" / "out.txt"
        reports.atomic_write(target, "hello\n")
        assert target.read_text(encoding="utf-8") == "hello\n"
        assert [p.name for p in target.parent.iterdir()] == ["out.txt"]

    def test_overwrites_existing_file(self, tmp_path):
        """Test that an existing file is replaced."""
        target = tmp_path / "out.txt"
        target.write_text("old", encoding="utf-8")
        reports.atomic_write(target, "new")
        assert target.read_text(encoding="utf-8") == "new"


class TestReports:
    """Tests for command reports."""

    def test_report_roundtrip(self, tmp_path):
        """Test that a report is wrapped in the schema envelope and read back."""
        path = reports.write_report(tmp_path / "report.json", "entropy", {"lambda": 1.5},
                                    config={"seed": 0}, version="1.0.0")
        data = reports.read_report(path)
        assert data["schema"] == reports.REPORT_SCHEMA
        assert data["command"] == "entropy"
        assert data["result"] == {"lambda": 1.5}
        assert data["config"] == {"seed": 0}

    def test_unknown_schema_rejected(self, tmp_path):
        """Test that files without the report schema are refused."""
        path = tmp_path / "other.json"
        path.write_text('{"schema": "something/else"}', encoding="utf-8")
        with pytest.raises(ValueError, match="unsupported report schema"):
            reports.read_report(path)

    def test_rewrite_is_byte_identical(self, tmp_path):
        """Test that writing the same report twice gives the same bytes."""
        first = reports.write_report(tmp_path / "one.json", "identities", {"max": 1e-9})
        second = reports.write_report(tmp_path / "two.json", "identities", {"max": 1e-9})
        assert first.read_bytes() == second.read_bytes()

    def test_csv_uses_full_precision(self, tmp_path):
        """Test that floats in CSV cells keep their repr."""
        path = reports.write_csv(tmp_path / "table.csv", ["name", "value"], [["a", 0.1 + 0.2]])
        assert path.read_text(encoding="utf-8") == "name,value\na,0.30000000000000004\n"


class TestTraces:
    """Tests for flow trace files."""

    def test_jsonl_roundtrip(self, tmp_path):
        """Test that a trace written with surfaces is restored sample by sample."""
        trace = _trace()
        path = reports.write_trace_jsonl(tmp_path / "trace.jsonl", trace)
        assert len(path.read_text(encoding="utf-8").splitlines()) == 3
        restored = reports.read_trace_jsonl(path)
        np.testing.assert_array_equal(restored.times, trace.times)
        assert restored.samples[1].monitors["density_0"] == 1.2
        np.testing.assert_array_equal(restored.final.surface.nodes, trace.final.surface.nodes)

    def test_monitor_table_leaves_gaps_empty(self, tmp_path):
        """Test that monitors missing from a sample are written as empty cells."""
        path = reports.write_monitor_csv(tmp_path / "monitors.csv", _trace())
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "time,leg,area,density_0,entropy"
        assert lines[1].split(",")[3] == ""
        assert lines[2].split(",")[3] == "1.2"

    def test_summary(self):
        """Test that the summary carries termination and the largest entropy increase."""
        summary = reports.trace_summary(_trace())
        assert summary["termination"] == "time_budget"
        assert summary["n_samples"] == 3
        assert summary["final_time"] == pytest.approx(0.2)
        assert summary["entropy_max_increase"] == 0.0

    def test_snapshots(self, tmp_path):
        """Test that every rescaled slice gets its own node file."""
        candidate = TangentCandidate(
            classification=TangentClass.CIRCLE,
            singular_point=np.zeros(2),
            singular_time=0.5,
            scales=[2.0, 4.0],
            rescaled=[library.circle(n_nodes=8), library.circle(n_nodes=8)],
        )
        paths = reports.write_snapshots(tmp_path, candidate)
        assert [p.name for p in paths] == ["rescaled_00_c2.csv", "rescaled_01_c4.csv"]
        assert paths[0].read_text(encoding="utf-8").startswith("x,y\n")


class TestGolden:
    """Tests for the versioned golden data directory."""

    def test_golden_path(self, tmp_path):
        """Test that golden files live under golden/<version>/."""
        path = reports.write_golden(tmp_path, {"kind": "angenent_torus"})
        assert path == reports.golden_torus_path(tmp_path)
        assert path.parent.name == reports.GOLDEN_VERSION
        assert json.loads(path.read_text(encoding="utf-8")) == {"kind": "angenent_torus"}

    def test_find_golden_falls_back_to_packaged_data(self, tmp_path, monkeypatch):
        """Test that the output directory wins and the packaged copy is the fallback."""
        monkeypatch.setattr(reports, "PACKAGE_DATA_DIR", tmp_path / "package")
        out = tmp_path / "out"
        assert reports.find_golden(out) == reports.golden_torus_path(out)
        shipped = reports.write_golden(tmp_path / "package", {"kind": "angenent_torus"})
        assert reports.find_golden(out) == shipped
        local = reports.write_golden(out, {"kind": "angenent_torus"})
        assert reports.find_golden(out) == local


class TestPublishedSchemas:
    """Tests that written records carry the keys the published schemas require."""

    SCHEMAS = Path(__file__).resolve().parent.parent / "schemas"

    def _required(self, name):
        return set(json.loads((self.SCHEMAS / name).read_text(encoding="utf-8"))["required"])

    def test_report_envelope(self, tmp_path):
        """Test the report envelope against report.schema.json."""
        data = reports.read_report(reports.write_report(tmp_path / "r.json", "flow", {}))
        assert set(data) == self._required("report.schema.json")

    def test_surface_records(self):
        """Test curve, profile and product records against surface.schema.json."""
        required = self._required("surface.schema.json")
        for surface in (library.circle(n_nodes=8), library.sphere(n_nodes=9), library.round_product()):
            record = surface.to_dict()
            assert required <= set(record)
            assert record["schema"] == "shrinklab.surface/1"

    def test_trace_lines(self, tmp_path):
        """Test trace lines against trace-sample.schema.json."""
        path = reports.write_trace_jsonl(tmp_path / "t.jsonl", _trace(), include_surfaces=False)
        for line in path.read_text(encoding="utf-8").splitlines():
            assert set(json.loads(line)) == self._required("trace-sample.schema.json")
