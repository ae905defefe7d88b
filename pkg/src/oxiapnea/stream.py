"""Online detection: one sample in, zero or more emissions out.

The engine chains causal versions of the batch stages:

1. grid placement and validity check, with last-valid-hold for gaps
   (a leading gap waits for the first valid reading and is filled with it);
2. optional centered median, run with a lag of ``median_width // 2`` samples;
3. block-mean downsampling;
4. gradient state, open run, open event candidate, running RLM, rate window.

For gap-free input every stage reproduces its batch counterpart exactly, so
``push``* + ``finalize`` yields the same report as :func:`oxiapnea.pipeline.analyze`.
Interior gaps are where the two modes differ: batch interpolates, the
engine holds the last valid value.

One engine has one writer. ``push`` and ``finalize`` must be serialized by
the caller; ``snapshot`` is read-only but must not race a ``push``.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from .errors import (FlatSignalError, GapError, InputError, InsufficientDataError,
                     NoValidSamplesError, SignalTooShortError, TimeAxisError)
from .events import DROP_TOLERANCE, ApneaEvent, SecondaryIndices
from .gradient import State
from .pipeline import AnalysisConfig, analyze, run_pipeline
from .preprocess import PreprocessConfig, median_window
from .rates import Severity, max_rate, severity
from .report import RecordDigest, Report, SignalStats, build_report, make_meta
from .rlm import Run, RunLengthMatrix
from .ingest import RecordBatch

logger = logging.getLogger(__name__)

RUN_COMPLETED = "run_completed"
EVENT_DETECTED = "event_detected"
SEVERITY_CHANGED = "severity_changed"
SAMPLE_REJECTED = "sample_rejected"


@dataclass(frozen=True)
class Emission:
    kind: str
    payload: Dict[str, Any]

    def to_dict(self):
        return {"kind": self.kind, "payload": self.payload}


@dataclass(frozen=True)
class StreamStatus:
    samples_seen: int
    samples_processed: int
    open_run_state: Optional[State]
    open_run_length: int
    events_detected: int
    max_rate: int
    severity: Severity
    no_data: bool


class RateTracker:
    """Running maximum of the event-anchored window count.

    Holds only the events whose start lies within one window of the newest
    event's end; older anchors can never gain another event.
    """

    def __init__(self, window_s):
        self.window_s = window_s
        self.recent = deque()  # (ordinal, event)
        self.count = 0
        self.best = 0

    def add(self, event) -> int:
        while self.recent and event.end_s - self.recent[0][1].start_s > self.window_s:
            self.recent.popleft()
        self.recent.append((self.count, event))
        self.count += 1
        self.best = max(self.best, self.count - self.recent[0][0])
        return self.best


def default_stream_config() -> AnalysisConfig:
    """Analysis defaults with the median filter off (zero-lag emission)."""
    return AnalysisConfig(preprocess=PreprocessConfig(median_width=0))


class StreamEngine:
    """Fully dynamic online detector.

    Parameters
    ----------
    config : AnalysisConfig, optional
        Defaults to :func:`default_stream_config`. A non-zero ``median_width``
        is honoured by delaying output by half the window.
    sample_rate_hz : float
        Input grid rate; timestamps are snapped to it.
    keep_history : bool
        Keep every finalized event so :meth:`finalize` can list them. The
        working state needed for detection stays bounded either way.
    emit_runs : bool
        Keep every run for the final report.
    """

    def __init__(self, config: Optional[AnalysisConfig] = None, sample_rate_hz: float = 1.0,
                 keep_history: bool = True, emit_runs: bool = False):
        self.config = config if config is not None else default_stream_config()
        if not sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        self.sample_rate_hz = float(sample_rate_hz)
        self.out_rate_hz = self.sample_rate_hz / self.config.preprocess.downsample_factor
        self.keep_history = keep_history
        self.emit_runs = emit_runs
        self.final_emissions: List[Emission] = []
        self._finalized = False
        self._out: List[Emission] = []
        self._digest = RecordDigest()
        self.samples_seen = 0

        pp = self.config.preprocess
        # stage 1: grid + validity
        self._t0 = None
        self._last_t = None
        self._last_slot = -1
        self._last_valid = None
        self._pending_lead = 0
        self._gap_len = 0
        # stage 2: median
        self._half = pp.median_width // 2
        self._med = deque(maxlen=max(pp.median_width, 1))
        self._med_seen = 0
        # stage 3: block mean
        self._blk_sum = 0.0
        self._blk_len = 0
        self._blk_flag = False
        # stage 4: detector
        det = self.config.detector
        self._w = det.window_samples(self.out_rate_hz)
        self._thr = det.drop_threshold_pct - DROP_TOLERANCE
        self._k3_prev = []  # kernel 3 look-behind
        self._n = 0
        self._prev_x = None
        self._state = State.UNDEFINED
        self._run_start = 0
        self._span = []  # (index, value) of the open run's descent span
        self._span_start_value = None
        self._run_min = math.inf
        self._best = None  # (p, q, drop) of the open candidate
        self.rlm = RunLengthMatrix(self.config.rlm_limit)
        self._rates = RateTracker(self.config.window_s)
        self._severity = None
        self._runs: List[Run] = []
        self._events: List[ApneaEvent] = []
        self._odi_counts = {t: 0 for t in det.odi_thresholds_pct}
        self._tsa_counts = {lvl: 0 for lvl in det.tsa_levels_pct}
        self._repaired = 0
        self._sum = 0.0
        self._min = math.inf

    # ------------------------------------------------------------------ input
    def push(self, timestamp_s: float, value: float) -> List[Emission]:
        """Feed one reading; returns the emissions it triggered, in time order."""
        if self._finalized:
            raise RuntimeError("engine already finalized")
        t, v = float(timestamp_s), float(value)
        if not (math.isfinite(t) and math.isfinite(v)):
            raise InputError(f"non-finite sample ({timestamp_s!r}, {value!r})")
        if self._last_t is not None and t <= self._last_t:
            raise TimeAxisError(f"non-monotone time: {t} after {self._last_t}")
        if self._t0 is None:
            self._t0 = t
        rel = t - self._t0
        slot = int(np.rint(rel * self.sample_rate_hz))
        if slot <= self._last_slot:
            raise TimeAxisError("duplicate sample time after gridding")
        self._last_t = t
        self._digest.update(rel, v)
        self.samples_seen += 1

        for s in range(self._last_slot + 1, slot):
            self._missing(s)
        pp = self.config.preprocess
        if pp.valid_low <= v <= pp.valid_high:
            if self._pending_lead:
                for _ in range(self._pending_lead):
                    self._smooth_in(v, True)
                self._pending_lead = 0
            self._gap_len = 0
            self._last_valid = v
            self._smooth_in(v, False)
        else:
            self._out.append(Emission(SAMPLE_REJECTED, {
                "timestamp_s": rel, "value": v, "reason": "out of valid range"}))
            self._missing(slot)
        self._last_slot = slot
        out, self._out = self._out, []
        return out

    def _missing(self, slot):
        self._gap_len += 1
        rate = self.sample_rate_hz
        if self._gap_len / rate > self.config.preprocess.max_gap_s:
            raise GapError((slot - self._gap_len + 1) / rate, (slot + 1) / rate,
                           self.config.preprocess.max_gap_s)
        if self._last_valid is None:
            self._pending_lead += 1
        else:
            self._smooth_in(self._last_valid, True)

    # ----------------------------------------------------------------- median
    def _smooth_in(self, v, flag):
        if self._half == 0:
            self._block_in(v, flag)
            return
        self._med.append((v, flag))
        self._med_seen += 1
        k = self._med_seen - 1 - self._half
        if k >= 0:
            self._median_out(k, min(self._half, k))

    def _smooth_flush(self):
        if self._half == 0:
            return
        m, h = self._med_seen, self._half
        if m < self.config.preprocess.median_width:
            raise SignalTooShortError(f"median_width {self.config.preprocess.median_width} exceeds signal length {m}")
        for k in range(max(0, m - h), m):
            self._median_out(k, min(h, k, m - 1 - k))

    def _median_out(self, k, r):
        """Emit the median centered on sample ``k`` with radius ``r``."""
        buf = self._med
        base = self._med_seen - len(buf)
        window = [buf[i - base][0] for i in range(k - r, k + r + 1)]
        self._block_in(median_window(window), buf[k - base][1])

    # ------------------------------------------------------------- downsample
    def _block_in(self, v, flag):
        k = self.config.preprocess.downsample_factor
        if k == 1:
            self._detect_in(v, flag)
            return
        self._blk_sum += v
        self._blk_len += 1
        self._blk_flag = self._blk_flag or flag
        if self._blk_len == k:
            self._block_emit()

    def _block_emit(self):
        if self._blk_len:
            self._detect_in(self._blk_sum / self._blk_len, self._blk_flag)
        self._blk_sum, self._blk_len, self._blk_flag = 0.0, 0, False

    # --------------------------------------------------------------- detector
    def _detect_in(self, x, flag):
        i = self._n
        self._n += 1
        self._repaired += bool(flag)
        self._sum += x
        self._min = min(self._min, x)
        for lvl in self._tsa_counts:
            if x < lvl:
                self._tsa_counts[lvl] += 1
        if self.config.kernel_width == 2:
            s = 0 if i == 0 else int(np.sign(x - self._prev_x))
            self._prev_x = x
            self._advance(i, x, s)
        else:
            self._k3_prev.append(x)
            if len(self._k3_prev) > 3:
                self._k3_prev.pop(0)
            if i >= 1:
                xs = self._k3_prev
                s = 0 if i == 1 else int(np.sign(xs[-1] - xs[-3]))
                self._advance(i - 1, xs[-2], s)

    def _scan(self, q, xq):
        """Record the smallest-p qualifying pair ending at q, if it beats the current one."""
        best_p = self._best[0] if self._best else math.inf
        for p, xp in self._span:
            if p >= best_p or p >= q:
                break
            if q - p > self._w:
                continue
            if xp - xq >= self._thr:
                self._best = (p, q, xp - xq)
                break

    def _advance(self, i, x, s):
        if self._state == State.UNDEFINED:
            # undefined head belongs to the first run; kept whole until resolved
            self._span.append((i, x))
            self._run_min = min(self._run_min, x)
            if self._span_start_value is None:
                self._span_start_value = x
            if s == 0:
                return
            self._state = State(s)
            if self._state == State.DROP:
                for q, xq in self._span[1:]:
                    self._scan(q, xq)
            self._span = deque(self._span[-(self._w + 1):], maxlen=self._w + 1)
            return
        if s != 0 and s != self._state:
            self._complete_run(i - 1)
            onset = self._span[-1]
            self._state = State(s)
            self._run_start = i
            self._span = deque([onset], maxlen=self._w + 1)
            self._span_start_value = onset[1]
            self._run_min = onset[1]
            self._best = None
        self._span.append((i, x))
        self._run_min = min(self._run_min, x)
        if self._state == State.DROP:
            self._scan(i, x)

    def _complete_run(self, end):
        run = Run(self._state, self._run_start, end, self.out_rate_hz)
        self.rlm.add(run.state, run.length_samples)
        if self.emit_runs:
            self._runs.append(run)
        self._out.append(Emission(RUN_COMPLETED, run.to_dict()))
        if run.state != State.DROP:
            return
        depth = self._span_start_value - self._run_min
        for t in self._odi_counts:
            if depth >= t - DROP_TOLERANCE:
                self._odi_counts[t] += 1
        if self._best is None:
            return
        p, q, drop = self._best
        event = ApneaEvent(run, self._span_start_value, self._run_min, (p, q), drop)
        if self.keep_history:
            self._events.append(event)
        self._out.append(Emission(EVENT_DETECTED, event.to_dict()))
        rate = self._rates.add(event)
        label = severity(rate)
        if label != self._severity:
            self._severity = label
            self._out.append(Emission(SEVERITY_CHANGED, {"max_rate": rate, "severity": label.value}))

    # ---------------------------------------------------------------- results
    @property
    def recent_events(self) -> List[ApneaEvent]:
        return [e for _, e in self._rates.recent]

    def open_run_length(self) -> int:
        if self._state == State.UNDEFINED:
            return len(self._span)
        return self._n - self._run_start - (1 if self.config.kernel_width == 3 and self._n else 0)

    def retained_records(self) -> int:
        """Samples and events held as working state (history sinks excluded)."""
        return (len(self._span) + len(self._med) + self._blk_len + len(self._k3_prev)
                + self._pending_lead + len(self._rates.recent))

    def snapshot(self) -> StreamStatus:
        best = self._rates.best
        return StreamStatus(
            samples_seen=self.samples_seen,
            samples_processed=self._n,
            open_run_state=None if self._state == State.UNDEFINED else self._state,
            open_run_length=self.open_run_length() if self._n else 0,
            events_detected=self._rates.count,
            max_rate=best,
            severity=severity(best),
            no_data=self._rates.count == 0,
        )

    def finalize(self) -> Report:
        """Flush every stage, close the open run and build the final report.

        Emissions produced while flushing are left in :attr:`final_emissions`.
        """
        if self._finalized:
            raise RuntimeError("engine already finalized")
        self._finalized = True
        if self.samples_seen == 0:
            raise InsufficientDataError()
        if self._last_valid is None:
            raise NoValidSamplesError("no valid samples")
        self._smooth_flush()
        self._block_emit()
        if self.config.kernel_width == 3 and self._n:
            self._advance(self._n - 1, self._k3_prev[-1], 0)
        if self._n < 2:
            raise InsufficientDataError()
        if self._state == State.UNDEFINED:
            raise FlatSignalError()
        self._complete_run(self._n - 1)
        self.final_emissions, self._out = self._out, []
        return self._report()

    def _report(self) -> Report:
        n, cfg = self._n, self.config
        duration = n / self.out_rate_hz
        stats = SignalStats(n, self.out_rate_hz, self._repaired, self._min, self._sum / n)
        hours = duration / 3600.0
        indices = SecondaryIndices(
            {t: c / hours for t, c in self._odi_counts.items()},
            {lvl: (c / self.out_rate_hz, (c / self.out_rate_hz) / duration) for lvl, c in self._tsa_counts.items()},
        )
        rates = max_rate(self._events, cfg.window_s, duration)
        return build_report(
            stats, self.rlm, self._events, indices, rates,
            make_meta(cfg.to_dict(), self._digest.hexdigest()),
            runs=self._runs if self.emit_runs else None,
            emit_runs=self.emit_runs,
        )


class BlockReplayer:
    """Windowed online mode: rerun the batch pipeline on overlapping blocks.

    Blocks span ``config.window_s`` and advance by half of that. An event is
    announced once it lies strictly inside a block, so edge effects from
    back-patching at a block boundary never leak out. The final report is
    the batch analysis of the whole input.
    """

    def __init__(self, config: AnalysisConfig = AnalysisConfig(), sample_rate_hz: float = 1.0,
                 emit_runs: bool = False):
        self.config = config
        self.sample_rate_hz = float(sample_rate_hz)
        self.emit_runs = emit_runs
        self.block_s = float(config.window_s)
        self.hop_s = self.block_s / 2
        self._times: List[float] = []
        self._values: List[float] = []
        self._block_start = 0.0
        self._announced_end = -math.inf
        self._rates = RateTracker(config.window_s)
        self._severity = None

    def push(self, timestamp_s: float, value: float) -> List[Emission]:
        t = float(timestamp_s)
        if self._times and t <= self._times[-1]:
            raise TimeAxisError(f"non-monotone time: {t} after {self._times[-1]}")
        if not self._times:
            self._t0 = t
        self._times.append(t - self._t0)
        self._values.append(float(value))
        out = []
        while self._times[-1] - self._block_start >= self.block_s:
            out.extend(self._replay(self._block_start, self._block_start + self.block_s))
            self._block_start += self.hop_s
        return out

    def _replay(self, lo, hi):
        times = np.array(self._times)
        sel = (times >= lo) & (times < hi)
        if sel.sum() < 2:
            return []
        batch = RecordBatch(times[sel], np.array(self._values)[sel], self.sample_rate_hz)
        try:
            result = run_pipeline(batch, self.config)
        except InputError as exc:
            logger.warning("block %.0f-%.0f s skipped: %s", lo, hi, exc)
            return []
        offset = times[sel][0]
        last = len(result.signal) - 1
        out = []
        for e in result.events:
            if e.start_index == 0 or e.end_index >= last:
                continue
            start = offset + e.start_s
            if start <= self._announced_end:
                continue
            self._announced_end = offset + e.end_s
            payload = e.to_dict()
            for key in ("start_s", "end_s", "qual_start_s", "qual_end_s"):
                payload[key] += offset
            out.append(Emission(EVENT_DETECTED, payload))
            shifted = _Shifted(start, offset + e.end_s)
            rate = self._rates.add(shifted)
            label = severity(rate)
            if label != self._severity:
                self._severity = label
                out.append(Emission(SEVERITY_CHANGED, {"max_rate": rate, "severity": label.value}))
        return out

    def finalize(self) -> Report:
        if len(self._times) < 2:
            raise InsufficientDataError()
        batch = RecordBatch(np.array(self._times), np.array(self._values), self.sample_rate_hz)
        return analyze(batch, self.config, emit_runs=self.emit_runs)


@dataclass(frozen=True)
class _Shifted:
    start_s: float
    end_s: float
