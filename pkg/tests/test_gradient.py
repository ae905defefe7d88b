import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oxiapnea.errors import FlatSignalError
from oxiapnea.gradient import State, backpatch, gradient_states, raw_signs, state_series
from oxiapnea.rlm import enumerate_runs

D, U, R = State.DROP, State.UNDEFINED, State.RISE

spo2 = st.lists(st.integers(70, 100).map(float), min_size=2, max_size=60)


def replay_states(x, kernel_width):
    """Scalar left-to-right replay of the copy-previous rule."""
    out, current = [], 0
    for i in range(len(x)):
        if kernel_width == 2:
            change = x[i] - x[i - 1] if i >= 1 else 0
        else:
            change = (x[i + 1] - x[i - 1]) / 2 if 1 <= i < len(x) - 1 else 0
        if change > 0:
            current = 1
        elif change < 0:
            current = -1
        out.append(current)
    return out


@pytest.mark.parametrize("x, expected", [
    ([96, 95, 95, 97], [U, D, D, R]),
    ([94, 95, 96], [U, R, R]),
])
def test_state_series_kernel2(x, expected):
    assert state_series(x).tolist() == expected


def test_state_series_kernel3_centered():
    x = [96, 95, 96, 97, 96]
    assert state_series(x, 3).tolist() == [U, U, R, R, R]
    assert state_series(x, 3).tolist() == replay_states(x, 3)


def test_kernel3_trailing_edge_copies():
    assert state_series([90, 91, 92], 3).tolist() == [U, R, R]


@pytest.mark.parametrize("states, expected", [
    ([U, D, R], [D, D, R]),
    ([U, U, R], [R, R, R]),
])
def test_backpatch(states, expected):
    assert backpatch(states).tolist() == expected


def test_backpatch_flat_signal():
    with pytest.raises(FlatSignalError, match="flat signal"):
        backpatch([U, U])
    with pytest.raises(FlatSignalError):
        gradient_states([94.0, 94.0, 94.0])


def test_bad_kernel():
    with pytest.raises(ValueError):
        raw_signs([1, 2, 3], kernel_width=4)


def test_state_values_are_int8():
    assert gradient_states([96, 95]).dtype == np.int8
    assert State(-1).label == "drop"


@given(spo2, st.sampled_from([2, 3]))
def test_matches_scalar_replay(x, k):
    assert state_series(x, k).tolist() == replay_states(x, k)


@given(spo2, st.floats(-20, 20).map(lambda c: round(c, 1)))
def test_shift_invariance(x, c):
    assert state_series(np.array(x) + c).tolist() == state_series(x).tolist()


@given(spo2, st.sampled_from([2, 3]))
def test_sign_antisymmetry(x, k):
    try:
        s = gradient_states(x, k)
    except FlatSignalError:
        return
    assert gradient_states(-np.array(x), k).tolist() == (-s).tolist()


@given(spo2)
def test_plateau_copies_previous_state(x):
    s = state_series(x)
    for i in range(1, len(x)):
        if x[i] == x[i - 1]:
            assert s[i] == s[i - 1]


@given(spo2)
def test_runs_are_monotone_kernel2(x):
    try:
        s = gradient_states(x)
    except FlatSignalError:
        return
    for run in enumerate_runs(s):
        seg = np.diff(x[run.start_index:run.end_index + 1])
        if run.state == State.DROP:
            assert np.all(seg <= 0)
        else:
            assert np.all(seg >= 0)
