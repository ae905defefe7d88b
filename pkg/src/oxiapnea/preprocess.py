"""Turn raw records into a clean, uniformly sampled SpO2 signal.

The stages always run in the same order::

    mask_invalid -> repair_gaps -> smooth -> downsample

so the median filter never sees sentinel values and decimation happens last.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GapError, NoValidSamplesError, SignalTooShortError, TimeAxisError
from .ingest import RecordBatch


@dataclass(frozen=True)
class PreprocessConfig:
    valid_low: float = 50.0
    valid_high: float = 100.0
    max_gap_s: float = 30.0
    median_width: int = 3
    downsample_factor: int = 1

    def __post_init__(self):
        if not self.valid_low < self.valid_high:
            raise ValueError("valid_low must be below valid_high")
        if not self.max_gap_s >= 0:
            raise ValueError("max_gap_s must be non-negative")
        w = self.median_width
        if int(w) != w or not (w == 0 or (w >= 3 and w % 2 == 1)):
            raise ValueError("median_width must be 0 or an odd integer >= 3")
        if int(self.downsample_factor) != self.downsample_factor or self.downsample_factor < 1:
            raise ValueError("downsample_factor must be a positive integer")


@dataclass(frozen=True)
class MaskedSeries:
    """Gridded values with a missing flag per grid slot (value is NaN for absent slots)."""

    values: np.ndarray
    missing: np.ndarray
    sample_rate_hz: float = 1.0


@dataclass(frozen=True)
class Signal:
    """Uniformly sampled SpO2 series.

    ``interpolated[i]`` is True when sample ``i`` was synthesised by gap
    repair (or, after downsampling, when any contributing sample was).
    """

    values: np.ndarray
    interpolated: np.ndarray = None
    sample_rate_hz: float = 1.0
    t0_s: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        q = np.zeros(len(v), dtype=bool) if self.interpolated is None else np.asarray(self.interpolated, dtype=bool)
        if v.ndim != 1 or v.shape != q.shape:
            raise ValueError("values and interpolated flags must be 1-D and equal length")
        if len(v) < 2:
            raise SignalTooShortError("signal too short: need at least 2 samples")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal values must be finite")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "interpolated", q)

    def __len__(self):
        return len(self.values)

    @property
    def duration_s(self) -> float:
        return len(self.values) / self.sample_rate_hz

    @property
    def times(self) -> np.ndarray:
        return self.t0_s + np.arange(len(self.values)) / self.sample_rate_hz


def grid_indices(timestamps, rate_hz):
    """Nearest grid slot for each timestamp, relative to the first one."""
    t = np.asarray(timestamps, dtype=float)
    return np.rint((t - t[0]) * rate_hz).astype(np.int64)


def mask_invalid(batch: RecordBatch, config: PreprocessConfig = PreprocessConfig()) -> MaskedSeries:
    """Place records on the sampling grid and flag implausible readings.

    Grid slots with no record, and readings outside ``[valid_low, valid_high]``
    (zeros and negatives included), are flagged missing.
    """
    rate = batch.declared_rate_hz
    idx = grid_indices(batch.timestamps, rate)
    if np.any(np.diff(idx) <= 0):
        raise TimeAxisError("duplicate sample time after gridding")
    n = int(idx[-1]) + 1
    values = np.full(n, np.nan)
    values[idx] = batch.values
    missing = ~((values >= config.valid_low) & (values <= config.valid_high))
    if missing.all():
        raise NoValidSamplesError("no valid samples")
    return MaskedSeries(values, missing, rate)


def _true_runs(mask):
    """(start, stop) half-open index pairs of each maximal run of True."""
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[::2].tolist(), edges[1::2].tolist()))


def repair_gaps(masked: MaskedSeries, config: PreprocessConfig = PreprocessConfig()) -> Signal:
    """Fill missing runs by linear interpolation (constant extension at the ends)."""
    missing = np.asarray(masked.missing, dtype=bool)
    rate = masked.sample_rate_hz
    if missing.all():
        raise NoValidSamplesError("no valid samples")
    for start, stop in _true_runs(missing):
        if (stop - start) / rate > config.max_gap_s:
            raise GapError(start / rate, stop / rate, config.max_gap_s)
    idx = np.arange(len(missing))
    good = ~missing
    out = np.interp(idx, idx[good], masked.values[good])
    out[good] = masked.values[good]
    return Signal(out, missing.copy(), rate)


def median_window(values) -> float:
    return float(np.median(np.asarray(values, dtype=float)))


def smooth(signal: Signal, config: PreprocessConfig = PreprocessConfig()) -> Signal:
    """Centered running median.

    Near the ends the window shrinks symmetrically (radius ``min(h, i, n-1-i)``),
    so it stays centered and odd and the end samples pass through unchanged.
    """
    w = config.median_width
    if w == 0:
        return signal
    x = signal.values
    n = len(x)
    if w > n:
        raise SignalTooShortError(f"median_width {w} exceeds signal length {n}")
    h = w // 2
    out = np.empty(n)
    out[h:n - h] = np.median(np.lib.stride_tricks.sliding_window_view(x, w), axis=1)
    for i in list(range(h)) + list(range(n - h, n)):
        r = min(h, i, n - 1 - i)
        out[i] = median_window(x[i - r:i + r + 1])
    return Signal(out, signal.interpolated, signal.sample_rate_hz, signal.t0_s)


def block_mean(values, factor):
    """Mean of consecutive blocks, summed left to right so streaming matches exactly."""
    v = np.asarray(values, dtype=float)
    nf = len(v) // factor
    blocks = v[:nf * factor].reshape(nf, factor)
    acc = blocks[:, 0].copy()
    for j in range(1, factor):
        acc += blocks[:, j]
    means = list(acc / factor)
    tail = v[nf * factor:]
    if len(tail):
        s = 0.0
        for x in tail:
            s += x
        means.append(s / len(tail))
    return np.array(means)


def downsample(signal: Signal, config: PreprocessConfig = PreprocessConfig()) -> Signal:
    k = int(config.downsample_factor)
    if k == 1:
        return signal
    n = len(signal)
    if -(-n // k) < 2:
        raise SignalTooShortError(f"signal too short: {n} samples with downsample factor {k}")
    values = block_mean(signal.values, k)
    flags = np.array([signal.interpolated[i:i + k].any() for i in range(0, n, k)])
    return Signal(values, flags, signal.sample_rate_hz / k, signal.t0_s)


def preprocess(batch: RecordBatch, config: PreprocessConfig = PreprocessConfig()) -> Signal:
    """Full cleaning pipeline for a normalized batch."""
    signal = repair_gaps(mask_invalid(batch, config), config)
    return downsample(smooth(signal, config), config)
