import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oxiapnea.errors import ConsistencyError
from oxiapnea.events import ApneaEvent
from oxiapnea.gradient import State
from oxiapnea.ingest import RecordBatch, read_records
from oxiapnea.pipeline import AnalysisConfig, analyze, run_pipeline
from oxiapnea.report import (EVENTS_CSV_HEADER, SignalStats, build_report, dumps, make_meta, parse_report,
                             records_digest, serialize)
from oxiapnea.rlm import Run
from oxiapnea.synth import generate, random_spec

DATA = Path(__file__).parent / "data"
SECTIONS = ["meta", "signal_stats", "runs", "rlm", "events", "indices", "rates"]


def test_report_without_events():
    report = analyze(RecordBatch.from_values(np.linspace(90, 97, 40)))
    d = parse_report(serialize(report))
    assert list(d) == SECTIONS
    assert d["events"] == [] and d["runs"] == []
    assert d["rates"]["max_rate"] == 0 and d["rates"]["severity"] == "normal"
    assert d["rates"]["per_window"] == [] and d["rates"]["max_window"] is None


def test_six_drop_golden():
    report = analyze(read_records(DATA / "six_drop.csv"))
    data = serialize(report)
    assert data == (DATA / "six_drop_report.json").read_bytes()
    d = parse_report(data)
    assert len(d["events"]) == 1 and d["rates"]["severity"] == "normal"
    assert d["events"][0]["total_drop"] == 5.0 and d["events"][0]["qual_drop"] == 4.0


def test_serialize_is_deterministic():
    batch = generate(random_spec(4))[0]
    assert serialize(analyze(batch)) == serialize(analyze(batch))


def test_events_csv():
    report = analyze(read_records(DATA / "six_drop.csv"))
    lines = serialize(report, "events-csv").decode().splitlines()
    assert lines[0] == EVENTS_CSV_HEADER
    assert lines[0] == "start_s,end_s,duration_s,spo2_start,spo2_min,total_drop,qual_start_s,qual_end_s,qual_drop"
    assert lines[1] == "0.000,5.000,5.000,96.000,91.000,5.000,0.000,4.000,4.000"


def test_summary_text():
    text = serialize(analyze(read_records(DATA / "six_drop.csv")), "summary-text").decode()
    assert "severity: normal" in text and "events: 1" in text


def test_unknown_format():
    with pytest.raises(ValueError, match="unknown format"):
        serialize(analyze(read_records(DATA / "six_drop.csv")), "xml")


def test_emit_runs_lists_every_run():
    batch = generate(random_spec(2))[0]
    d = parse_report(serialize(analyze(batch, emit_runs=True)))
    rlm = np.array(d["rlm"]["rise"]) + np.array(d["rlm"]["drop"])
    assert len(d["runs"]) == rlm.sum() > 0


def test_dumps_float_format():
    assert dumps({"a": 1.0, "b": [1, 2.5], "c": None, "d": True}, indent=None) == \
        '{"a": 1.000, "b": [1, 2.500], "c": null, "d": true}'
    assert json.loads(dumps({"x": float("1e-7")})) == {"x": 0.0}


def _round_trip_values(obj, path=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _round_trip_values(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            yield from _round_trip_values(v, f"{path}[{i}]")
    elif isinstance(obj, float):
        yield path, obj


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_round_trip_to_three_decimals(seed):
    report = analyze(generate(random_spec(seed, max_duration_s=900))[0])
    parsed = parse_report(serialize(report))
    original = dict(_round_trip_values(json.loads(json.dumps(report.to_dict(), default=_plain))))
    for path, value in _round_trip_values(parsed):
        assert abs(value - original[path]) <= 5e-4 + 1e-12, path


def _plain(o):
    if isinstance(o, np.generic):
        return o.item()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(type(o))


def test_digest_covers_values():
    assert records_digest([0, 1], [96, 95]) != records_digest([0, 1], [96, 94])
    assert records_digest([0, 1], [96, 95]) == records_digest([0.0, 1.0], [96.0, 95.0])


def _pieces():
    result = run_pipeline(read_records(DATA / "six_drop.csv"))
    stats = SignalStats.from_signal(result.signal)
    meta = make_meta(AnalysisConfig().to_dict(), result.input_digest)
    return result, stats, meta


def test_mismatched_run_reference():
    result, stats, meta = _pieces()
    e = result.events[0]
    stray = ApneaEvent(Run(State.DROP, 2, 5), e.spo2_start, e.spo2_min, (1, 5), 4.0)
    with pytest.raises(ConsistencyError, match="unknown run"):
        build_report(stats, result.rlm, [stray], result.indices, result.rates, meta, runs=result.runs)


def test_mismatched_rlm():
    result, stats, meta = _pieces()
    rlm = result.rlm.copy()
    rlm.add(State.RISE, 3)
    with pytest.raises(ConsistencyError):
        build_report(stats, rlm, result.events, result.indices, result.rates, meta, runs=result.runs)


def test_event_outside_signal():
    result, stats, meta = _pieces()
    e = result.events[0]
    far = ApneaEvent(Run(State.DROP, 10, 12), e.spo2_start, e.spo2_min, (10, 12), 4.0)
    with pytest.raises(ConsistencyError):
        build_report(stats, result.rlm, [far], result.indices, result.rates, meta)
