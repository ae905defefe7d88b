"""Hourly event rate over an event-anchored sliding window, and severity."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

DEFAULT_WINDOW_S = 3600.0


class Severity(str, Enum):
    NORMAL = "normal"
    MILD = "mild"
    MODERATE = "moderate"
    SEVERE = "severe"


# upper edge of each band is inclusive
SEVERITY_BANDS = ((5.0, Severity.NORMAL), (15.0, Severity.MILD), (30.0, Severity.MODERATE))


def severity(rate_per_hour: float) -> Severity:
    if rate_per_hour < 0:
        raise ValueError(f"rate must be non-negative, got {rate_per_hour}")
    for upper, label in SEVERITY_BANDS:
        if rate_per_hour <= upper:
            return label
    return Severity.SEVERE


@dataclass(frozen=True)
class RateAnalysis:
    window_s: float = DEFAULT_WINDOW_S
    per_window: Tuple[int, ...] = ()
    max_rate_per_hour: int = 0
    max_window: Optional[Tuple[float, float]] = None
    severity: Severity = Severity.NORMAL
    insufficient_duration: bool = False

    def to_dict(self):
        return {
            "window_s": self.window_s,
            "max_rate": self.max_rate_per_hour,
            "max_window": list(self.max_window) if self.max_window else None,
            "severity": self.severity.value,
            "per_window": list(self.per_window),
            "insufficient_duration": self.insufficient_duration,
        }


def _bounds(events):
    starts = np.array([e.start_s for e in events], dtype=float)
    ends = np.array([e.end_s for e in events], dtype=float)
    return starts, ends


def max_rate(events: Sequence, window_s: float = DEFAULT_WINDOW_S,
             recording_duration_s: Optional[float] = None) -> RateAnalysis:
    """Two-pointer sweep over time-ordered events.

    Event ``j`` counts in the window anchored at event ``i`` when ``j >= i``
    and ``end_j - start_i <= window_s``. An anchor always counts its own
    event, even one longer than the window. Recordings shorter than the
    window are not extrapolated; the raw count is used and flagged.
    """
    if not window_s > 0:
        raise ValueError("window_s must be positive")
    short = recording_duration_s is not None and recording_duration_s < window_s
    starts, ends = _bounds(events)
    n = len(starts)
    per_window = []
    j = 0
    for i in range(n):
        j = max(j, i + 1)
        while j < n and ends[j] - starts[i] <= window_s:
            j += 1
        per_window.append(j - i)
    if n == 0:
        return RateAnalysis(window_s, (), 0, None, Severity.NORMAL, short)
    best = int(np.argmax(per_window))
    top = per_window[best]
    return RateAnalysis(
        window_s=window_s,
        per_window=tuple(per_window),
        max_rate_per_hour=top,
        max_window=(float(starts[best]), float(starts[best] + window_s)),
        severity=severity(top),
        insufficient_duration=short,
    )
