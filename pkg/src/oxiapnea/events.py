"""Desaturation event registration and the ODI / TSA secondary indices.

A drop run becomes an event when, somewhere inside it, SpO2 falls by at
least ``drop_threshold_pct`` points within at most ``time_window_s``
seconds. The test is on sub-windows, so a sharp crash embedded in a slow
decline still registers, while a slow decline that never reaches the
threshold inside any window does not. Event bounds are the whole run.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .gradient import State
from .preprocess import Signal
from .rlm import Run

# absorbs float noise in differences like 95.6 - 91.6; far below any reading resolution
DROP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class DetectorConfig:
    drop_threshold_pct: float = 4.0
    time_window_s: float = 10.0
    odi_thresholds_pct: Tuple[float, ...] = (4.0, 3.0)
    tsa_levels_pct: Tuple[float, ...] = (90.0, 88.0)

    def __post_init__(self):
        if not self.drop_threshold_pct > 0:
            raise ValueError("drop_threshold_pct must be positive")
        if not self.time_window_s > 0:
            raise ValueError("time_window_s must be positive")
        for name in ("odi_thresholds_pct", "tsa_levels_pct"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals or any(not v > 0 for v in vals):
                raise ValueError(f"{name} must be a non-empty list of positive numbers")
            object.__setattr__(self, name, vals)

    def window_samples(self, sample_rate_hz: float) -> int:
        """Largest index distance whose time span fits in the window."""
        return int(math.floor(self.time_window_s * sample_rate_hz + 1e-9))


@dataclass(frozen=True)
class ApneaEvent:
    run: Run
    spo2_start: float
    spo2_min: float
    qualifying_window: Tuple[int, int]
    qualifying_drop_pct: float

    @property
    def sample_rate_hz(self) -> float:
        return self.run.sample_rate_hz

    @property
    def start_index(self) -> int:
        return self.run.onset_index

    @property
    def end_index(self) -> int:
        return self.run.end_index

    @property
    def total_drop_pct(self) -> float:
        return self.spo2_start - self.spo2_min

    @property
    def start_s(self) -> float:
        return self.start_index / self.sample_rate_hz

    @property
    def end_s(self) -> float:
        return self.end_index / self.sample_rate_hz

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def to_dict(self):
        p, q = self.qualifying_window
        r = self.sample_rate_hz
        return {
            "start_s": self.start_s,
            "end_s": self.end_s,
            "duration_s": self.duration_s,
            "start_index": self.start_index,
            "end_index": self.end_index,
            "spo2_start": self.spo2_start,
            "spo2_min": self.spo2_min,
            "total_drop": self.total_drop_pct,
            "qual_start_s": p / r,
            "qual_end_s": q / r,
            "qual_drop": self.qualifying_drop_pct,
        }


@dataclass(frozen=True)
class SecondaryIndices:
    odi: Dict[float, float] = field(default_factory=dict)
    tsa: Dict[float, Tuple[float, float]] = field(default_factory=dict)

    def to_dict(self):
        return {
            "odi": {f"{k:g}": v for k, v in self.odi.items()},
            "tsa": {f"{k:g}": {"seconds": s, "fraction": f} for k, (s, f) in self.tsa.items()},
        }


def _drop_spans(runs: Sequence[Run]):
    """(run, onset, end) for each drop run."""
    return [(r, r.onset_index, r.end_index) for r in runs if r.state == State.DROP]


def detect_events(signal: Signal, runs: Sequence[Run], config: DetectorConfig = DetectorConfig()) -> List[ApneaEvent]:
    """Register every drop run that contains a qualifying fall.

    The qualifying window reported is the pair ``(p, q)`` with the smallest
    ``p``, then the smallest ``q``.
    """
    x = signal.values
    n = len(x)
    w = config.window_samples(signal.sample_rate_hz)
    spans = _drop_spans(runs)
    if not spans or w < 1:
        return []
    thr = config.drop_threshold_pct - DROP_TOLERANCE

    # limit[p] = last index p may be paired with, -1 outside drop spans
    limit = np.full(n, -1, dtype=np.int64)
    span_id = np.full(n, -1, dtype=np.int64)
    for k, (_, o, b) in enumerate(spans):
        limit[o:b] = b
        span_id[o:b] = k

    idx = np.arange(n)
    padded = np.concatenate((x, np.full(w, np.inf)))
    lowest = np.full(n, np.inf)
    for k in range(1, w + 1):
        cand = np.where(idx + k <= limit, padded[k:k + n], np.inf)
        np.minimum(lowest, cand, out=lowest)
    hits = np.flatnonzero(x - lowest >= thr)

    events = []
    if len(hits) == 0:
        return events
    ids, first = np.unique(span_id[hits], return_index=True)
    for k, p in zip(ids.tolist(), hits[first].tolist()):
        run, o, b = spans[k]
        q = next(q for q in range(p + 1, min(p + w, b) + 1) if x[p] - x[q] >= thr)
        events.append(ApneaEvent(
            run=run,
            spo2_start=float(x[o]),
            spo2_min=float(x[o:b + 1].min()),
            qualifying_window=(p, q),
            qualifying_drop_pct=float(x[p] - x[q]),
        ))
    return events


def drop_depths(signal: Signal, runs: Sequence[Run]) -> np.ndarray:
    """Fall from onset value to run minimum, for each drop run."""
    x = signal.values
    spans = _drop_spans(runs)
    return np.array([x[o] - x[o:b + 1].min() for _, o, b in spans])


def compute_odi(signal: Signal, runs: Sequence[Run], threshold_pct: float) -> float:
    """Drop runs falling at least ``threshold_pct`` points, per recording hour."""
    depths = drop_depths(signal, runs)
    count = int(np.count_nonzero(depths >= threshold_pct - DROP_TOLERANCE))
    return count / (signal.duration_s / 3600.0)


def compute_tsa(signal: Signal, level_pct: float) -> Tuple[float, float]:
    """Seconds strictly below ``level_pct`` and the matching fraction of the recording."""
    below = int(np.count_nonzero(signal.values < level_pct))
    seconds = below / signal.sample_rate_hz
    return seconds, seconds / signal.duration_s


def secondary_indices(signal: Signal, runs: Sequence[Run], config: DetectorConfig = DetectorConfig()) -> SecondaryIndices:
    depths = drop_depths(signal, runs)
    hours = signal.duration_s / 3600.0
    odi = {
        t: int(np.count_nonzero(depths >= t - DROP_TOLERANCE)) / hours
        for t in config.odi_thresholds_pct
    }
    tsa = {lvl: compute_tsa(signal, lvl) for lvl in config.tsa_levels_pct}
    return SecondaryIndices(odi, tsa)
