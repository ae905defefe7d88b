import numpy as np
import pytest

from oxiapnea import AnalysisConfig, PreprocessConfig, Signal


@pytest.fixture
def raw_config():
    """Analysis without median filtering, so test signals reach the detector untouched."""
    return AnalysisConfig(preprocess=PreprocessConfig(median_width=0))


def make_signal(values, rate=1.0):
    return Signal(np.asarray(values, dtype=float), sample_rate_hz=rate)


def brute_pairs(x, threshold=4.0, window=10, tol=1e-9):
    """All (p, q) with 0 < q - p <= window and x[p] - x[q] >= threshold."""
    n = len(x)
    return [(p, q) for p in range(n) for q in range(p + 1, min(n, p + window + 1))
            if x[p] - x[q] >= threshold - tol]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")
    config.criteria_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    results = item.config.criteria_results
    key = tuple(marker.args)
    results[key] = results.get(key, True) and rep.passed


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "criteria_results", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), ok in sorted(results.items()):
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}")
