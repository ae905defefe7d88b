import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from oxiapnea import GradientSignTransformer, OSAHSDetector, RecordBatch, SpO2Preprocessor
from oxiapnea.pipeline import analyze
from oxiapnea.report import serialize
from oxiapnea.synth import generate, random_spec

SIX = [90, 96, 95, 94, 93, 92, 91, 92, 93]


def test_get_params_and_clone():
    det = OSAHSDetector(drop_threshold_pct=3.0, median_width=0)
    params = det.get_params()
    assert params["drop_threshold_pct"] == 3.0 and params["window_s"] == 3600.0
    twin = clone(det)
    assert twin.get_params() == params and twin is not det
    det.set_params(time_window_s=20.0)
    assert det.time_window_s == 20.0


def test_detector_fit_and_predict():
    det = OSAHSDetector(median_width=0).fit(SIX)
    assert len(det.events_) == 1
    assert det.max_rate_ == 1 and det.severity_.value == "normal"
    mask = det.predict(SIX)
    assert mask.tolist() == [0, 1, 1, 1, 1, 1, 1, 0, 0]
    assert det.fit_predict(SIX).tolist() == mask.tolist()


def test_detector_report_matches_pipeline():
    batch = generate(random_spec(8))[0]
    det = OSAHSDetector().fit(batch)
    assert serialize(det.report_) == serialize(analyze(batch, det.config_, emit_runs=True))


def test_predict_before_fit():
    with pytest.raises(NotFittedError):
        OSAHSDetector().predict(SIX)


@pytest.mark.parametrize("params", [
    {"kernel_width": 4},
    {"drop_threshold_pct": -1},
    {"rlm_limit": 0},
    {"rlm_limit": 2.5},
    {"sample_rate_hz": 0},
    {"median_width": 4},
    {"odi_thresholds_pct": ()},
])
def test_invalid_params(params):
    with pytest.raises((ValueError, TypeError)):
        OSAHSDetector(**params).fit(SIX)


def test_rejects_nonfinite_input():
    with pytest.raises(ValueError):
        OSAHSDetector().fit([96, np.inf, 95])


def test_column_vector_accepted():
    col = np.array(SIX, dtype=float).reshape(-1, 1)
    assert len(OSAHSDetector(median_width=0).fit(col).events_) == 1


def test_preprocessor_transform():
    pre = SpO2Preprocessor(median_width=3).fit()
    out = pre.transform([96, 96, 80, 96, 96])
    np.testing.assert_array_equal(out, [96, 96, 96, 96, 96])
    sig = pre.transform_signal([96, 0, 94, 95])
    assert sig.interpolated.tolist() == [False, True, False, False]


def test_preprocessor_accepts_batch_with_time():
    batch = RecordBatch([0.0, 0.5, 1.0, 1.5], [96, 95, 94, 93], 2.0)
    out = SpO2Preprocessor(sample_rate_hz=2.0, median_width=0, downsample_factor=2).fit().transform(batch)
    np.testing.assert_array_equal(out, [95.5, 93.5])


def test_gradient_transformer_in_pipeline():
    pipe = make_pipeline(SpO2Preprocessor(median_width=0), GradientSignTransformer())
    states = pipe.fit_transform([96, 95, 95, 97])
    assert states.tolist() == [-1, -1, -1, 1]
    with pytest.raises(ValueError):
        GradientSignTransformer(kernel_width=5).fit()
