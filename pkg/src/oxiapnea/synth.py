"""Synthetic oximetry with planted desaturations, plus brute-force oracles.

The oracles here are deliberately naive re-implementations. They must not
import the detector, gradient or rates code they are used to check.
"""

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .ingest import RecordBatch

ORACLE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PlantedEvent:
    onset_s: float
    fall_s: float
    depth_pct: float
    recovery_s: float

    @property
    def end_s(self) -> float:
        return self.onset_s + self.fall_s + self.recovery_s


@dataclass(frozen=True)
class ScenarioSpec:
    duration_s: float
    baseline_pct: float = 96.0
    noise_sd_pct: float = 0.15
    events: Tuple[PlantedEvent, ...] = ()
    dropout_runs: Tuple[Tuple[float, float], ...] = ()
    seed: int = 0
    sample_rate_hz: float = 1.0

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")
        object.__setattr__(self, "events", tuple(sorted(self.events, key=lambda e: e.onset_s)))
        prev_end = -math.inf
        for e in self.events:
            if not (e.depth_pct > 0 and e.fall_s > 0 and e.recovery_s >= 0):
                raise ValueError(f"invalid planted event {e}")
            if e.onset_s < 0 or e.end_s > self.duration_s:
                raise ValueError(f"planted event {e} outside [0, {self.duration_s}]")
            if e.onset_s < prev_end:
                raise ValueError(f"planted events overlap at {e.onset_s} s")
            prev_end = e.end_s


@dataclass(frozen=True)
class EventLabel:
    onset_s: float
    nadir_s: float
    end_s: float
    depth_pct: float
    qualifying: bool

    def to_dict(self):
        return {"onset_s": self.onset_s, "nadir_s": self.nadir_s, "end_s": self.end_s,
                "depth_pct": self.depth_pct, "qualifying": self.qualifying}


def max_window_drop(event: PlantedEvent, time_window_s: float) -> float:
    """Largest fall of the linear ramp achievable within ``time_window_s``."""
    return event.depth_pct * min(1.0, time_window_s / event.fall_s)


def generate(spec: ScenarioSpec, drop_threshold_pct=4.0, time_window_s=10.0):
    """Sample a scenario. Returns ``(RecordBatch, [EventLabel, ...])``."""
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    t = np.arange(n) / spec.sample_rate_hz
    x = np.full(n, float(spec.baseline_pct))
    labels = []
    for e in spec.events:
        fall = (t >= e.onset_s) & (t < e.onset_s + e.fall_s)
        x[fall] -= e.depth_pct * (t[fall] - e.onset_s) / e.fall_s
        nadir = e.onset_s + e.fall_s
        rec = (t >= nadir) & (t < e.end_s)
        if e.recovery_s > 0:
            x[rec] -= e.depth_pct * (1.0 - (t[rec] - nadir) / e.recovery_s)
        labels.append(EventLabel(e.onset_s, nadir, e.end_s, e.depth_pct,
                                 max_window_drop(e, time_window_s) >= drop_threshold_pct))
    if spec.noise_sd_pct > 0:
        x = x + np.random.default_rng(spec.seed).normal(0.0, spec.noise_sd_pct, n)
    x = np.clip(x, 50.0, 100.0)
    for onset, length in spec.dropout_runs:
        x[(t >= onset) & (t < onset + length)] = 0.0
    return RecordBatch(t, x, spec.sample_rate_hz), labels


def random_spec(seed, min_duration_s=600, max_duration_s=3600, max_events=20, max_noise_sd=0.3):
    """A randomized scenario: varied depths and slopes, non-overlapping events."""
    rng = np.random.default_rng(seed)
    duration = float(rng.integers(min_duration_s, max_duration_s + 1))
    k = int(rng.integers(0, max_events + 1))
    events = []
    if k:
        slot = duration / k
        for i in range(k):
            fall = float(rng.uniform(2.0, 40.0))
            recovery = float(rng.uniform(5.0, 40.0))
            room = slot - fall - recovery - 2.0
            if room <= 0:
                continue
            onset = round(i * slot + 1.0 + float(rng.uniform(0, room)), 1)
            depth = round(float(rng.uniform(1.0, 10.0)), 2)
            events.append(PlantedEvent(onset, round(fall, 1), depth, round(recovery, 1)))
    return ScenarioSpec(
        duration_s=duration,
        baseline_pct=round(float(rng.uniform(92.0, 98.0)), 1),
        noise_sd_pct=round(float(rng.uniform(0.0, max_noise_sd)), 3),
        events=tuple(events),
        seed=seed,
    )


def parse_event_spec(text: str) -> Tuple[PlantedEvent, ...]:
    """``"onset:fall:depth:recovery,..."`` to planted events."""
    events = []
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        parts = chunk.split(":")
        if len(parts) != 4:
            raise ValueError(f"event spec {chunk!r} must be onset:fall:depth:recovery")
        events.append(PlantedEvent(*(float(p) for p in parts)))
    return tuple(events)


def parse_dropout_spec(text: str) -> Tuple[Tuple[float, float], ...]:
    """``"onset:length,..."`` to dropout runs."""
    runs = []
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ValueError(f"dropout spec {chunk!r} must be onset:length")
        runs.append((float(parts[0]), float(parts[1])))
    return tuple(runs)


# --------------------------------------------------------------------------- oracles

def _strict_states(x) -> List[int]:
    """Scalar replay of the two-point rise/drop rule with back-patching."""
    states = []
    current = 0
    for i in range(len(x)):
        if i > 0:
            if x[i] > x[i - 1]:
                current = 1
            elif x[i] < x[i - 1]:
                current = -1
        states.append(current)
    first = next((s for s in states if s != 0), 0)
    return [first if s == 0 else s for s in states]


def _runs(states) -> List[Tuple[int, int, int]]:
    runs = []
    start = 0
    for i in range(1, len(states) + 1):
        if i == len(states) or states[i] != states[start]:
            runs.append((states[start], start, i - 1))
            start = i
    return runs


def oracle_detect(values, drop_threshold_pct=4.0, time_window_s=10.0, sample_rate_hz=1.0):
    """Every drop run holding some pair ``p < q`` with a qualifying fall.

    All pairs within the time window are tested. A pair belongs to the drop
    run containing ``q`` when ``p`` is no earlier than the sample preceding
    that run (where the descent begins). Returns ``[(start, end), ...]``.
    """
    x = np.asarray(getattr(values, "values", values), dtype=float)
    n = len(x)
    states = _strict_states(x.tolist())
    if not any(states):
        return []
    runs = _runs(states)
    run_of = np.empty(n, dtype=np.int64)
    for r, (_, a, b) in enumerate(runs):
        run_of[a:b + 1] = r
    onset = np.array([max(a - 1, 0) for _, a, _ in runs])
    is_drop = np.array([s == -1 for s, _, _ in runs])

    found = set()
    k = 1
    while k < n and k / sample_rate_hz <= time_window_s + ORACLE_TOLERANCE:
        p = np.arange(n - k)
        q = p + k
        hit = (x[p] - x[q]) >= drop_threshold_pct - ORACLE_TOLERANCE
        r = run_of[q]
        ok = hit & is_drop[r] & (p >= onset[r])
        found.update(r[ok].tolist())
        k += 1
    return [(runs[r][1], runs[r][2]) for r in sorted(found)]


def oracle_max_rate(events: Sequence, window_s=3600.0, step_s=1.0, recording_end_s=None):
    """Maximum in-window event count over a dense grid of window starts.

    ``events`` holds objects with ``start_s``/``end_s`` or ``(start, end)``
    pairs. An event counts for the window starting at ``s`` when it starts
    at or after ``s`` and ends by ``s + window_s``; one starting exactly at
    ``s`` always counts.
    """
    pairs = [(e.start_s, e.end_s) if hasattr(e, "start_s") else tuple(e) for e in events]
    if not pairs:
        return 0
    starts = np.array([p[0] for p in pairs])
    ends = np.array([p[1] for p in pairs])
    hi = recording_end_s if recording_end_s is not None else starts.max()
    grid = np.arange(math.floor(starts.min()), hi + step_s, step_s)
    s = grid[:, None]
    inside = (starts >= s) & ((ends <= s + window_s) | (starts == s))
    return int(inside.sum(axis=1).max())
