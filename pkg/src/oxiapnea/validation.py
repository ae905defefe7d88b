"""Input checks shared by the estimator layer."""

import numbers

import numpy as np
from sklearn.utils import check_array, check_scalar

from .ingest import RecordBatch


def check_spo2(X) -> np.ndarray:
    """Coerce an SpO2 series to a 1-D float array.

    Accepts a 1-D sequence, a single-column or single-row 2-D array. NaN marks
    a missing reading and is mapped to 0, which preprocessing treats as invalid.
    """
    arr = check_array(X, ensure_2d=False, dtype=np.float64, ensure_all_finite="allow-nan",
                      input_name="X")
    if arr.ndim == 2:
        if 1 not in arr.shape:
            raise ValueError(f"expected a single SpO2 series, got shape {arr.shape}")
        arr = arr.ravel()
    if np.isinf(arr).any():
        raise ValueError("SpO2 values must not be infinite")
    return np.where(np.isnan(arr), 0.0, arr)


def as_batch(X, sample_rate_hz=1.0) -> RecordBatch:
    """A :class:`RecordBatch` from either a batch or a bare value series."""
    if isinstance(X, RecordBatch):
        return X
    return RecordBatch.from_values(check_spo2(X), sample_rate_hz)


def check_positive(value, name, target_type=numbers.Real, allow_zero=False):
    """Validate a positive (or non-negative) scalar parameter."""
    return check_scalar(value, name, target_type, min_val=0,
                        include_boundaries="left" if allow_zero else "neither")


def check_thresholds(values, name):
    vals = tuple(float(v) for v in np.atleast_1d(values))
    if not vals:
        raise ValueError(f"{name} must not be empty")
    for v in vals:
        check_positive(v, name)
    return vals
