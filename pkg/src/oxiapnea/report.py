"""Report assembly and serialization (json, events-csv, summary-text).

JSON output is hand-written so floats always carry exactly three decimals
and key order is fixed; equal reports give equal bytes.
"""

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConsistencyError
from .events import ApneaEvent, SecondaryIndices
from .rates import RateAnalysis, severity
from .rlm import Run, RunLengthMatrix

FORMATS = ("json", "events-csv", "summary-text")
EVENTS_CSV_HEADER = "start_s,end_s,duration_s,spo2_start,spo2_min,total_drop,qual_start_s,qual_end_s,qual_drop"


@dataclass(frozen=True)
class SignalStats:
    sample_count: int
    sample_rate_hz: float
    repaired_count: int
    min_spo2: float
    mean_spo2: float

    @property
    def duration_s(self) -> float:
        return self.sample_count / self.sample_rate_hz

    @classmethod
    def from_signal(cls, signal):
        v = signal.values
        # left-to-right sum, matching the streaming accumulator bit for bit
        total = float(np.add.accumulate(v)[-1])
        return cls(len(v), signal.sample_rate_hz, int(signal.interpolated.sum()),
                   float(v.min()), total / len(v))

    def to_dict(self):
        return {
            "sample_count": self.sample_count,
            "sample_rate_hz": self.sample_rate_hz,
            "duration_s": self.duration_s,
            "repaired_count": self.repaired_count,
            "min_spo2": self.min_spo2,
            "mean_spo2": self.mean_spo2,
        }


class RecordDigest:
    """SHA-256 over normalized (time, value) pairs, fed one record at a time."""

    def __init__(self):
        self._h = hashlib.sha256()

    def update(self, t, v):
        self._h.update(f"{float(t)!r},{float(v)!r}\n".encode())

    def hexdigest(self):
        return "sha256:" + self._h.hexdigest()


def records_digest(timestamps, values) -> str:
    d = RecordDigest()
    for t, v in zip(timestamps, values):
        d.update(t, v)
    return d.hexdigest()


@dataclass(frozen=True)
class Report:
    meta: dict
    signal_stats: SignalStats
    rlm: RunLengthMatrix
    events: tuple
    indices: SecondaryIndices
    rates: RateAnalysis
    runs: Optional[tuple] = None

    @property
    def severity(self):
        return self.rates.severity

    def to_dict(self):
        return {
            "meta": self.meta,
            "signal_stats": self.signal_stats.to_dict(),
            "runs": [r.to_dict() for r in self.runs] if self.runs is not None else [],
            "rlm": self.rlm.to_dict(),
            "events": [e.to_dict() for e in self.events],
            "indices": self.indices.to_dict(),
            "rates": self.rates.to_dict(),
        }


def make_meta(config: dict, input_digest: str) -> dict:
    return {"tool": "oxiapnea", "version": __version__, "config": config, "input_digest": input_digest}


def _check(cond, message):
    if not cond:
        raise ConsistencyError(message)


def build_report(
    signal_stats: SignalStats,
    rlm: RunLengthMatrix,
    events: Sequence[ApneaEvent],
    indices: SecondaryIndices,
    rates: RateAnalysis,
    meta: dict,
    runs: Optional[Sequence[Run]] = None,
    emit_runs: bool = False,
) -> Report:
    """Cross-check the pieces of one pipeline execution and bundle them.

    ``runs`` is optional so the streaming engine can report without keeping
    every run; when given it is validated against the RLM and the events.
    """
    n = signal_stats.sample_count
    events = tuple(events)
    for e in events:
        _check(0 <= e.start_index <= e.end_index < n, f"event {e.start_index}-{e.end_index} outside signal")
        p, q = e.qualifying_window
        _check(e.start_index <= p < q <= e.end_index, "qualifying window outside its event")
    for a, b in zip(events, events[1:]):
        _check(a.end_index < b.start_index, "events overlap or are out of order")
    if runs is not None:
        runs = tuple(runs)
        _check(rlm.total_runs == len(runs), "RLM run count differs from run list")
        if runs:
            _check(runs[0].start_index == 0 and runs[-1].end_index == n - 1, "runs do not cover the signal")
        for a, b in zip(runs, runs[1:]):
            _check(b.start_index == a.end_index + 1 and a.state != b.state, "runs do not tile the signal")
        known = {(r.state, r.start_index, r.end_index) for r in runs}
        for e in events:
            _check((e.run.state, e.run.start_index, e.run.end_index) in known, "event refers to an unknown run")
    _check(len(rates.per_window) == len(events), "per-window count differs from event count")
    _check(rates.severity == severity(rates.max_rate_per_hour), "severity does not match max rate")
    return Report(meta, signal_stats, rlm, events, indices, rates, runs if emit_runs else None)


def _fmt_float(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x}")
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def _scalar(obj) -> Optional[str]:
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    return None


def dumps(obj, indent: Optional[int] = 2, _level=0) -> str:
    """JSON text with fixed 3-decimal floats; lists of scalars stay on one line."""
    s = _scalar(obj)
    if s is not None:
        return s
    if isinstance(obj, dict):
        items = [(json.dumps(str(k), ensure_ascii=False), dumps(v, indent, _level + 1)) for k, v in obj.items()]
        if not items:
            return "{}"
        if indent is None:
            return "{" + ", ".join(f"{k}: {v}" for k, v in items) + "}"
        pad = " " * (indent * (_level + 1))
        return "{\n" + ",\n".join(f"{pad}{k}: {v}" for k, v in items) + "\n" + " " * (indent * _level) + "}"
    if isinstance(obj, (list, tuple)):
        parts = [dumps(v, indent, _level + 1) for v in obj]
        if not parts:
            return "[]"
        if indent is None or all(_scalar(v) is not None for v in obj):
            return "[" + ", ".join(parts) + "]"
        pad = " " * (indent * (_level + 1))
        return "[\n" + ",\n".join(pad + p for p in parts) + "\n" + " " * (indent * _level) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def events_csv(report: Report) -> str:
    keys = EVENTS_CSV_HEADER.split(",")
    lines = [EVENTS_CSV_HEADER]
    for e in report.events:
        d = e.to_dict()
        lines.append(",".join(_fmt_float(d[k]) for k in keys))
    return "\n".join(lines) + "\n"


def summary_text(report: Report) -> str:
    st, rt = report.signal_stats, report.rates
    lines = [
        f"duration: {st.duration_s:.1f} s ({st.duration_s / 3600:.2f} h)",
        f"samples: {st.sample_count} at {st.sample_rate_hz:g} Hz ({st.repaired_count} repaired)",
        f"events: {len(report.events)}",
        f"max rate: {rt.max_rate_per_hour} events/h",
        f"severity: {rt.severity.value}",
    ]
    if rt.insufficient_duration:
        lines.append(f"note: recording shorter than the {rt.window_s:g} s rate window; raw count used")
    for k, v in report.indices.odi.items():
        lines.append(f"ODI{k:g}: {v:.2f}/h")
    for k, (sec, frac) in report.indices.tsa.items():
        lines.append(f"TSA{k:g}: {sec:.0f} s ({100 * frac:.1f}%)")
    return "\n".join(lines) + "\n"


def serialize(report: Report, fmt: str = "json") -> bytes:
    if fmt == "json":
        text = dumps(report.to_dict()) + "\n"
    elif fmt == "events-csv":
        text = events_csv(report)
    elif fmt == "summary-text":
        text = summary_text(report)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")
    return text.encode("utf-8")


def parse_report(data) -> dict:
    """Load a JSON report back into plain Python structures."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return json.loads(data)
