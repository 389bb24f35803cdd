import json
from pathlib import Path

import pytest

from risktwin.cli import main
from risktwin.trace import TraceError, TraceReader, TraceWriter


class TestTraceFormat:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "t.rttr"
        with TraceWriter(path, "plate", "abc123", 7) as w:
            w.append("observation", 1, 0.1, {"values": [1.0, 2.0]})
            w.append("frame", 1, 0.1, {"session": "s", "t": 1})
            w.append("audit", 1, 0.1, {"event": "x"})
        with TraceReader(path) as r:
            assert r.header == {"scenario": "plate", "config_hash": "abc123", "seed": 7}
            recs = list(r)
        assert [rec["kind"] for rec in recs] == ["observation", "frame", "audit"]
        assert [rec["seq"] for rec in recs] == [0, 1, 2]

    def test_unknown_kind_rejected(self, tmp_path):
        with TraceWriter(tmp_path / "t.rttr", "x", "h", 0) as w:
            with pytest.raises(ValueError):
                w.append("bogus", 0, 0.0, {})

    def test_truncated_record_detected(self, tmp_path):
        path = tmp_path / "t.rttr"
        with TraceWriter(path, "x", "h", 0) as w:
            w.append("frame", 1, 0.1, {"a": 1})
            w.append("frame", 2, 0.2, {"a": 2})
        raw = path.read_bytes()
        path.write_bytes(raw[:-5])
        with TraceReader(path) as r:
            with pytest.raises(TraceError, match="truncated"):
                list(r)

    def test_not_a_trace_rejected(self, tmp_path):
        p = tmp_path / "junk.rttr"
        p.write_bytes(b"not a trace at all")
        with pytest.raises(TraceError, match="not a trace"):
            TraceReader(p)


@pytest.fixture(scope="module")
def scenario_file(tmp_path_factory):
    cfg = """
id: plate
n_samples: 3000
seed: 5
truth:
  schedule:
    - {t: 0.0, weight: 5.0, u0: 0.3, v0: 0.45}
"""
    path = tmp_path_factory.mktemp("cfg") / "small_plate.yaml"
    path.write_text(cfg)
    return path


@pytest.fixture(scope="module")
def turbine_file(tmp_path_factory):
    cfg = """
id: turbine
n_samples: 1200
seed: 6
"""
    path = tmp_path_factory.mktemp("cfg") / "small_turbine.yaml"
    path.write_text(cfg)
    return path


class TestPrepare:
    def test_writes_manifest(self, scenario_file, tmp_path, capsys):
        rc = main(["prepare", "--scenario", str(scenario_file),
                   "--out", str(tmp_path / "assets")])
        assert rc == 0
        out = capsys.readouterr().out
        manifest = Path(out.splitlines()[0])
        assert manifest.exists()
        assert "prepared_wall_time_s" in manifest.read_text()

    def test_same_seed_reproduces_ensembles(self, scenario_file, tmp_path):
        main(["prepare", "--scenario", str(scenario_file), "--out", str(tmp_path / "a")])
        main(["prepare", "--scenario", str(scenario_file), "--out", str(tmp_path / "b")])
        assert ((tmp_path / "a" / "ensemble_d.rtens").read_bytes()
                == (tmp_path / "b" / "ensemble_d.rtens").read_bytes())

    def test_missing_scenario_exits_2(self, capsys):
        rc = main(["prepare", "--scenario", "/no/such/file.yaml"])
        assert rc == 2
        assert "/no/such/file.yaml" in capsys.readouterr().err


class TestRun:
    def test_forward_run_writes_trace_and_report(self, turbine_file, tmp_path, capsys):
        out = tmp_path / "run.rttr"
        rc = main(["run", "--scenario", str(turbine_file), "--mode", "forward",
                   "--duration", "3.0", "--seed", "9", "--out", str(out)])
        assert rc == 0
        with TraceReader(out) as r:
            frames = list(r.frames())
        assert len(frames) == 30
        report = json.loads(out.with_suffix(".report.json").read_text())
        assert report["n_frames"] == 30
        assert report["exit_status"] == "ok"

    def test_zero_duration_is_empty_trace(self, turbine_file, tmp_path):
        out = tmp_path / "empty.rttr"
        rc = main(["run", "--scenario", str(turbine_file), "--duration", "0",
                   "--seed", "1", "--out", str(out)])
        assert rc == 0
        with TraceReader(out) as r:
            assert list(r) == []


class TestExport:
    @pytest.fixture()
    def trace_path(self, turbine_file, tmp_path):
        out = tmp_path / "exp.rttr"
        main(["run", "--scenario", str(turbine_file), "--duration", "2.0",
              "--seed", "3", "--out", str(out)])
        return out

    def test_csv_has_row_per_frame_with_full_precision(self, trace_path, tmp_path, capsys):
        out = tmp_path / "exp.csv"
        rc = main(["export", "--trace", str(trace_path), "--format", "csv",
                   "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1 + 20
        header = lines[0].split(",")
        assert "beta_blade" in header and "p_tower" in header and "power_w" in header
        with TraceReader(trace_path) as r:
            frames = list(r.frames())
        col = header.index("beta_blade")
        for line, fr in zip(lines[1:], frames):
            beta = fr["components"][0]["beta"]
            assert float(line.split(",")[col]) == beta

    def test_frames_export_roundtrips_losslessly(self, trace_path, tmp_path):
        out = tmp_path / "exp.jsonl"
        rc = main(["export", "--trace", str(trace_path), "--format", "frames",
                   "--out", str(out)])
        assert rc == 0
        with TraceReader(trace_path) as r:
            frames = list(r.frames())
        redone = [json.loads(line) for line in out.read_text().splitlines()]
        assert redone == frames

    def test_corrupt_trace_exits_4_and_removes_partial(self, trace_path, tmp_path, capsys):
        raw = trace_path.read_bytes()
        bad = tmp_path / "bad.rttr"
        bad.write_bytes(raw[:-7])
        out = tmp_path / "bad.csv"
        rc = main(["export", "--trace", str(bad), "--format", "csv", "--out", str(out)])
        assert rc == 4
        assert not out.exists()

    def test_missing_trace_exits_2(self):
        assert main(["export", "--trace", "/no/trace.rttr"]) == 2
