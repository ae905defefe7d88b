import numpy as np
import pytest

from oxiapnea.ingest import normalize_time
from oxiapnea.preprocess import preprocess
from oxiapnea.synth import (PlantedEvent, ScenarioSpec, generate, max_window_drop, oracle_detect,
                            oracle_max_rate, parse_dropout_spec, parse_event_spec, random_spec)


def one_event(fall, depth, recovery=20.0):
    return ScenarioSpec(600, baseline_pct=96, noise_sd_pct=0, events=(PlantedEvent(100, fall, depth, recovery),))


@pytest.mark.parametrize("fall, depth, qualifying", [
    (8, 5, True),
    (8, 3, False),
    (60, 6, False),
])
def test_labels(fall, depth, qualifying):
    _, labels = generate(one_event(fall, depth))
    assert len(labels) == 1
    label = labels[0]
    assert label.qualifying is qualifying
    assert label.nadir_s == 100 + fall and label.end_s == 100 + fall + 20


def test_max_window_drop():
    assert max_window_drop(PlantedEvent(0, 60, 6, 10), 10) == pytest.approx(1.0)
    assert max_window_drop(PlantedEvent(0, 8, 5, 10), 10) == 5


@pytest.mark.parametrize("fall, depth", [(8, 5), (8, 3), (60, 6), (12, 6), (4, 4)])
def test_labels_agree_with_oracle_noise_free(fall, depth):
    batch, labels = generate(one_event(fall, depth))
    found = oracle_detect(batch.values)
    assert bool(found) is labels[0].qualifying


def test_overlapping_events_rejected():
    with pytest.raises(ValueError, match="overlap"):
        ScenarioSpec(600, events=(PlantedEvent(100, 10, 5, 20), PlantedEvent(120, 10, 5, 20)))


def test_event_outside_recording_rejected():
    with pytest.raises(ValueError):
        ScenarioSpec(100, events=(PlantedEvent(90, 10, 5, 20),))


def test_deterministic_per_seed():
    a, la = generate(random_spec(11))
    b, lb = generate(random_spec(11))
    np.testing.assert_array_equal(a.values, b.values)
    assert la == lb
    c, _ = generate(random_spec(12))
    assert len(c.values) != len(a.values) or not np.array_equal(c.values, a.values)


def test_random_spec_ranges():
    for seed in range(30):
        spec = random_spec(seed)
        assert 600 <= spec.duration_s <= 3600
        assert len(spec.events) <= 20 and spec.noise_sd_pct <= 0.3


def test_dropouts_are_zero():
    spec = ScenarioSpec(60, noise_sd_pct=0, dropout_runs=((10, 5),))
    batch, _ = generate(spec)
    assert np.all(batch.values[10:15] == 0) and batch.values[9] == 96


def test_parse_specs():
    assert parse_event_spec("100:8:5:20, 300:10:4:30") == (PlantedEvent(100, 8, 5, 20), PlantedEvent(300, 10, 4, 30))
    assert parse_dropout_spec("10:5") == ((10.0, 5.0),)
    assert parse_event_spec("") == ()
    with pytest.raises(ValueError):
        parse_event_spec("1:2:3")


def test_oracle_flat_notch():
    x = np.full(100, 96.0)
    x[50] = 93.0
    assert oracle_detect(x) == []


def test_oracle_six_sample_drop():
    assert oracle_detect([96, 95, 94, 93, 92, 91]) == [(0, 5)]


@pytest.mark.parametrize("pairs, expected", [
    ([], 0),
    ([(0, 30), (1770, 1800), (3570, 3600), (5370, 5400)], 3),
    ([(i, i + 5) for i in range(0, 60, 6)], 10),
])
def test_oracle_max_rate(pairs, expected):
    assert oracle_max_rate(pairs, 3600) == expected


@pytest.mark.parametrize("seed", range(10))
def test_planted_deep_events_found_after_preprocess(seed):
    rng = np.random.default_rng(seed)
    onsets = np.arange(60, 1500, 120) + rng.integers(0, 30, 12)
    events = tuple(PlantedEvent(float(o), float(rng.integers(3, 9)), float(rng.uniform(5, 9)), 30.0)
                   for o in onsets)
    spec = ScenarioSpec(1800, noise_sd_pct=0.2, events=events, seed=seed)
    batch, labels = generate(spec)
    signal = preprocess(normalize_time(batch))
    found = oracle_detect(signal.values)
    for label in labels:
        assert any(a - 1 <= label.nadir_s and b >= label.onset_s for a, b in found), label
