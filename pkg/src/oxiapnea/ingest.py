"""Reading raw oximetry records and building a relative time axis.

Two text layouts are understood:

* ``csv``  -- header line (e.g. ``timestamp,spo2``) followed by ``t,value`` rows,
  where ``t`` is decimal seconds or an ``HH:MM:SS`` wall-clock tag;
* ``bare`` -- one SpO2 value per line, timestamps synthesised at the declared rate.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple, Optional

import numpy as np

from .errors import ParseError, TimeAxisError

SECONDS_PER_DAY = 86400.0

LAYOUTS = ("csv", "bare")
TIME_STYLES = ("auto", "relative", "clock")


class RawRecord(NamedTuple):
    timestamp_s: float
    value: float


@dataclass(frozen=True)
class RecordBatch:
    """Ordered raw readings plus the metadata needed to grid them.

    Values are kept unvalidated: zeros, negatives and out-of-range readings
    are left for :mod:`oxiapnea.preprocess` to flag.
    """

    timestamps: np.ndarray
    values: np.ndarray
    declared_rate_hz: float = 1.0
    time_origin: Optional[str] = None

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.ndim != 1 or t.shape != v.shape:
            raise ValueError("timestamps and values must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("timestamps and values must be finite")
        if not self.declared_rate_hz > 0:
            raise ValueError("declared_rate_hz must be positive")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    @property
    def records(self) -> List[RawRecord]:
        return [RawRecord(float(t), float(v)) for t, v in zip(self.timestamps, self.values)]

    @classmethod
    def from_values(cls, values, rate_hz=1.0, time_origin=None):
        """Batch for a bare series sampled at ``rate_hz`` starting at t=0."""
        v = np.asarray(values, dtype=float)
        return cls(np.arange(len(v)) / rate_hz, v, rate_hz, time_origin)


def parse_clock(text: str) -> float:
    """``HH:MM:SS[.fff]`` to seconds of day."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"bad clock time {text!r}")
    h, m = int(parts[0]), int(parts[1])
    s = float(parts[2])
    if not (0 <= h < 24 and 0 <= m < 60 and 0 <= s < 60):
        raise ValueError(f"clock time out of range {text!r}")
    return h * 3600.0 + m * 60.0 + s


def _parse_float(text: str) -> float:
    x = float(text)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {text!r}")
    return x


def _parse_time(text: str, time_style: str) -> float:
    if time_style == "clock" or (time_style == "auto" and ":" in text):
        return parse_clock(text)
    return _parse_float(text)


def parse_records(
    lines: Iterable[str],
    layout: str = "csv",
    time_style: str = "auto",
    rate_hz: float = 1.0,
) -> RecordBatch:
    """Parse text lines into a :class:`RecordBatch`.

    Blank lines are skipped. Any malformed data line raises :class:`ParseError`
    carrying its 1-based line number.
    """
    if layout not in LAYOUTS:
        raise ValueError(f"unknown layout {layout!r}")
    if time_style not in TIME_STYLES:
        raise ValueError(f"unknown time style {time_style!r}")
    if not rate_hz > 0:
        raise ValueError("rate_hz must be positive")

    times: List[float] = []
    values: List[float] = []
    origin = None
    header_seen = layout == "bare"
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if not header_seen:
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != 2:
                raise ParseError(f"expected a 2-column header, got {len(fields)} fields", lineno)
            try:
                _parse_float(fields[1])
            except ValueError:
                header_seen = True
                continue
            raise ParseError("missing header line (expected e.g. 'timestamp,spo2')", lineno)

        fields = [f.strip() for f in line.split(",")]
        if layout == "bare":
            if len(fields) != 1:
                raise ParseError(f"expected 1 field, got {len(fields)}", lineno)
            try:
                values.append(_parse_float(fields[0]))
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            times.append((len(values) - 1) / rate_hz)
            continue

        if len(fields) != 2:
            raise ParseError(f"expected 2 fields, got {len(fields)}", lineno)
        try:
            t = _parse_time(fields[0], time_style)
            v = _parse_float(fields[1])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if origin is None and ":" in fields[0]:
            origin = fields[0]
        times.append(t)
        values.append(v)

    if not values:
        raise ParseError("no records")
    return RecordBatch(np.array(times), np.array(values), rate_hz, origin)


def read_records(path, layout="csv", time_style="auto", rate_hz=1.0) -> RecordBatch:
    with open(path, encoding="utf-8") as fh:
        return parse_records(fh, layout=layout, time_style=time_style, rate_hz=rate_hz)


def normalize_time(batch: RecordBatch) -> RecordBatch:
    """Rewrite timestamps as strictly increasing seconds from the first sample.

    Every backward step is read as one midnight rollover, so 86400 s is added
    from that sample onward. A step that is still backward afterwards, or a
    repeated time, is rejected.
    """
    t = batch.timestamps
    if len(t) == 0:
        raise TimeAxisError("no records")
    back = np.diff(t) < 0
    offsets = np.concatenate(([0.0], np.cumsum(back) * SECONDS_PER_DAY))
    adjusted = t + offsets
    step = np.diff(adjusted)
    if np.any(step < 0):
        i = int(np.argmax(step < 0)) + 1
        raise TimeAxisError(f"non-monotone time at record {i}")
    if np.any(step == 0):
        i = int(np.argmax(step == 0)) + 1
        raise TimeAxisError(f"duplicate sample time at record {i}")
    return RecordBatch(adjusted - adjusted[0], batch.values, batch.declared_rate_hz, batch.time_origin)


class RolloverClock:
    """Incremental twin of :func:`normalize_time` for line-at-a-time input."""

    def __init__(self):
        self._offset = 0.0
        self._prev_raw = None
        self._prev = None
        self._origin = None

    def __call__(self, t: float) -> float:
        if self._prev_raw is not None and t < self._prev_raw:
            self._offset += SECONDS_PER_DAY
        adjusted = t + self._offset
        if self._prev is not None:
            if adjusted < self._prev:
                raise TimeAxisError("non-monotone time")
            if adjusted == self._prev:
                raise TimeAxisError("duplicate sample time")
        else:
            self._origin = adjusted
        self._prev_raw, self._prev = t, adjusted
        return adjusted - self._origin
