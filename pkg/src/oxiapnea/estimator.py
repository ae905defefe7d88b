"""scikit-learn style wrappers around the batch pipeline.

``X`` is either a :class:`~oxiapnea.ingest.RecordBatch` or a single SpO2
series (1-D, or one column) sampled at ``sample_rate_hz``.
"""

import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .events import DetectorConfig
from .gradient import KERNEL_WIDTHS, gradient_states
from .ingest import normalize_time
from .pipeline import AnalysisConfig, report_from_result, run_pipeline
from .preprocess import PreprocessConfig, Signal, preprocess
from .validation import as_batch, check_positive, check_spo2, check_thresholds


def _preprocess_config(est) -> PreprocessConfig:
    check_positive(est.sample_rate_hz, "sample_rate_hz")
    check_positive(est.max_gap_s, "max_gap_s", allow_zero=True)
    check_positive(est.downsample_factor, "downsample_factor", numbers.Integral)
    return PreprocessConfig(est.valid_low, est.valid_high, est.max_gap_s,
                            est.median_width, est.downsample_factor)


def _check_kernel(kernel_width):
    if kernel_width not in KERNEL_WIDTHS:
        raise ValueError(f"kernel_width must be one of {KERNEL_WIDTHS}, got {kernel_width!r}")


class SpO2Preprocessor(TransformerMixin, BaseEstimator):
    """Mask implausible readings, repair short gaps, median-filter, downsample.

    Stateless: ``fit`` only validates parameters. ``transform`` returns the
    cleaned values; use :meth:`transform_signal` to keep the repair flags.
    """

    def __init__(self, sample_rate_hz=1.0, valid_low=50.0, valid_high=100.0,
                 max_gap_s=30.0, median_width=3, downsample_factor=1):
        self.sample_rate_hz = sample_rate_hz
        self.valid_low = valid_low
        self.valid_high = valid_high
        self.max_gap_s = max_gap_s
        self.median_width = median_width
        self.downsample_factor = downsample_factor

    def fit(self, X=None, y=None):
        self.config_ = _preprocess_config(self)
        return self

    def transform_signal(self, X) -> Signal:
        check_is_fitted(self, "config_")
        batch = normalize_time(as_batch(X, self.sample_rate_hz))
        return preprocess(batch, self.config_)

    def transform(self, X):
        return self.transform_signal(X).values


class GradientSignTransformer(TransformerMixin, BaseEstimator):
    """Map an SpO2 series to back-patched rise (+1) / drop (-1) states."""

    def __init__(self, kernel_width=2):
        self.kernel_width = kernel_width

    def fit(self, X=None, y=None):
        _check_kernel(self.kernel_width)
        self.fitted_ = True
        return self

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        values = X.values if isinstance(X, Signal) else check_spo2(X)
        return gradient_states(values, self.kernel_width)


class OSAHSDetector(BaseEstimator):
    """Desaturation event detector with hourly-rate severity grading.

    After ``fit`` the estimator exposes ``signal_``, ``runs_``, ``rlm_``,
    ``events_``, ``indices_``, ``rates_``, ``max_rate_``, ``severity_`` and
    the full ``report_``. ``predict`` marks samples of the cleaned signal that
    fall inside a detected event.
    """

    def __init__(self, sample_rate_hz=1.0, valid_low=50.0, valid_high=100.0, max_gap_s=30.0,
                 median_width=3, downsample_factor=1, kernel_width=2, drop_threshold_pct=4.0,
                 time_window_s=10.0, odi_thresholds_pct=(4.0, 3.0), tsa_levels_pct=(90.0, 88.0),
                 rlm_limit=600, window_s=3600.0):
        self.sample_rate_hz = sample_rate_hz
        self.valid_low = valid_low
        self.valid_high = valid_high
        self.max_gap_s = max_gap_s
        self.median_width = median_width
        self.downsample_factor = downsample_factor
        self.kernel_width = kernel_width
        self.drop_threshold_pct = drop_threshold_pct
        self.time_window_s = time_window_s
        self.odi_thresholds_pct = odi_thresholds_pct
        self.tsa_levels_pct = tsa_levels_pct
        self.rlm_limit = rlm_limit
        self.window_s = window_s

    def _analysis_config(self) -> AnalysisConfig:
        _check_kernel(self.kernel_width)
        check_positive(self.drop_threshold_pct, "drop_threshold_pct")
        check_positive(self.time_window_s, "time_window_s")
        check_positive(self.rlm_limit, "rlm_limit", numbers.Integral)
        check_positive(self.window_s, "window_s")
        detector = DetectorConfig(
            self.drop_threshold_pct, self.time_window_s,
            check_thresholds(self.odi_thresholds_pct, "odi_thresholds_pct"),
            check_thresholds(self.tsa_levels_pct, "tsa_levels_pct"),
        )
        return AnalysisConfig(_preprocess_config(self), detector, self.kernel_width,
                              self.rlm_limit, float(self.window_s))

    def _run(self, X):
        config = self._analysis_config()
        return config, run_pipeline(as_batch(X, self.sample_rate_hz), config)

    def fit(self, X, y=None):
        config, result = self._run(X)
        self.config_ = config
        self.signal_ = result.signal
        self.states_ = result.states
        self.runs_ = result.runs
        self.rlm_ = result.rlm
        self.events_ = result.events
        self.indices_ = result.indices
        self.rates_ = result.rates
        self.max_rate_ = result.rates.max_rate_per_hour
        self.severity_ = result.rates.severity
        self.report_ = report_from_result(result, config, emit_runs=True)
        return self

    @staticmethod
    def _event_mask(n, events):
        mask = np.zeros(n, dtype=np.int8)
        for e in events:
            mask[e.start_index:e.end_index + 1] = 1
        return mask

    def predict(self, X):
        """1 for cleaned samples inside a detected event, else 0."""
        check_is_fitted(self, "config_")
        _, result = self._run(X)
        return self._event_mask(len(result.signal), result.events)

    def fit_predict(self, X, y=None):
        self.fit(X)
        return self._event_mask(len(self.signal_), self.events_)
