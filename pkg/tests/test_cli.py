import json
import subprocess
import sys
from pathlib import Path

import pytest

from oxiapnea.cli import iter_stream_lines, main
from oxiapnea.ingest import read_records
from oxiapnea.pipeline import analyze
from oxiapnea.report import serialize

DATA = Path(__file__).parent / "data"
SIX = DATA / "six_drop.csv"


def run_cli(*args, stdin=None):
    return subprocess.run([sys.executable, "-m", "oxiapnea", *map(str, args)],
                          input=stdin, capture_output=True, text=True)


def test_analyze_writes_report(tmp_path):
    out = tmp_path / "report.json"
    assert main(["analyze", "--input", str(SIX), "--output", str(out)]) == 0
    assert out.read_bytes() == serialize(analyze(read_records(SIX)))


def test_analyze_missing_file(tmp_path):
    assert main(["analyze", "--input", str(tmp_path / "missing.csv")]) == 1


def test_unknown_flag_exits_1():
    proc = run_cli("analyze", "--input", SIX, "--bogus")
    assert proc.returncode == 1
    assert "usage" in proc.stderr


def test_missing_input_flag_exits_1():
    assert run_cli("analyze").returncode == 1


def test_parse_error_reports_line(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,spo2\n0,96\n1,abc\n")
    proc = run_cli("analyze", "--input", bad)
    assert proc.returncode == 1 and "line 3" in proc.stderr and proc.stdout == ""


def test_consistency_error_exits_2(monkeypatch, tmp_path):
    from oxiapnea import cli
    from oxiapnea.errors import ConsistencyError

    def broken(*a, **k):
        raise ConsistencyError("runs do not tile the signal")
    monkeypatch.setattr(cli, "analyze", broken)
    assert main(["analyze", "--input", str(SIX)]) == 2


def test_formats(tmp_path):
    for fmt, fmt_name in [("csv", "events-csv"), ("summary", "summary-text")]:
        out = tmp_path / f"r.{fmt}"
        assert main(["analyze", "-i", str(SIX), "-o", str(out), "--format", fmt]) == 0
        assert out.read_bytes() == serialize(analyze(read_records(SIX)), fmt_name)


def test_stream_matches_analyze(tmp_path):
    out = tmp_path / "stream.json"
    proc = run_cli("stream", "--output", out, stdin=SIX.read_text())
    assert proc.returncode == 0, proc.stderr
    kinds = [json.loads(line)["kind"] for line in proc.stdout.splitlines()]
    assert kinds == ["run_completed", "event_detected", "severity_changed"]
    expected = tmp_path / "batch.json"
    assert main(["analyze", "-i", str(SIX), "-o", str(expected)]) == 0
    assert out.read_bytes() == expected.read_bytes()


def test_stream_report_to_stdout():
    proc = run_cli("stream", "--median-width", "0", stdin="96\n95\n94\n93\n92\n91\n92\n")
    assert proc.returncode == 0, proc.stderr
    lines = proc.stdout.splitlines()
    split = lines.index("{")
    kinds = [json.loads(line)["kind"] for line in lines[:split]]
    assert kinds == ["run_completed", "event_detected", "severity_changed", "run_completed"]
    report = json.loads("\n".join(lines[split:]))
    assert len(report["events"]) == 1


def test_stream_block_replay(tmp_path):
    csv = tmp_path / "scenario.csv"
    assert main(["synth", "-o", str(csv), "--duration", "1800", "--events",
                 "300:8:6:20,900:6:5:25", "--seed", "3"]) == 0
    out = tmp_path / "replay.json"
    proc = run_cli("stream", "--input", csv, "--block-replay", "--rate-window-s", "600", "--output", out)
    assert proc.returncode == 0, proc.stderr
    assert len(json.loads(out.read_text())["events"]) >= 2


def test_stream_bad_line():
    proc = run_cli("stream", stdin="t,v\n0,96\n1,x\n")
    assert proc.returncode == 1 and "line 3" in proc.stderr


def test_synth_writes_csv_and_labels(tmp_path):
    csv = tmp_path / "s.csv"
    assert main(["synth", "-o", str(csv), "--duration", "600", "--events", "100:8:5:20",
                 "--noise-sd", "0"]) == 0
    labels = json.loads((tmp_path / "s.csv.labels.json").read_text())
    assert labels["events"][0]["qualifying"] is True
    report = analyze(read_records(csv))
    assert len(report.events) == 1


def test_synth_rejects_overlap(tmp_path):
    assert main(["synth", "-o", str(tmp_path / "x.csv"), "--events", "100:10:5:20,110:10:5:20"]) == 1


def test_iter_stream_lines_rollover():
    got = list(iter_stream_lines(["time,spo2", "23:59:59,95", "00:00:00,94"]))
    assert got == [(0.0, 95.0), (1.0, 94.0)]


@pytest.mark.parametrize("flag", ["--kernel", "--median-width"])
def test_invalid_choices_exit_1(flag):
    assert run_cli("analyze", "-i", SIX, flag, "4").returncode == 1
