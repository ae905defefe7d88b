"""Maximal gradient-sign runs and the rise/drop run-length matrix (RLM)."""

from dataclasses import dataclass
from typing import Iterable, List

import numpy as np

from .gradient import State

DEFAULT_RLM_LIMIT = 600
_ROW = {State.RISE: 0, State.DROP: 1}


@dataclass(frozen=True)
class Run:
    """A maximal constant-state segment ``[start_index, end_index]`` (inclusive).

    A drop run's descent starts at the sample just before its first index,
    since the state at ``i`` describes the change from ``i - 1`` to ``i``.
    ``onset_index`` exposes that sample (it is ``start_index`` for a run at 0).
    """

    state: State
    start_index: int
    end_index: int
    sample_rate_hz: float = 1.0

    @property
    def length_samples(self) -> int:
        return self.end_index - self.start_index + 1

    @property
    def duration_s(self) -> float:
        return self.length_samples / self.sample_rate_hz

    @property
    def onset_index(self) -> int:
        return max(self.start_index - 1, 0)

    @property
    def start_s(self) -> float:
        return self.start_index / self.sample_rate_hz

    @property
    def end_s(self) -> float:
        return self.end_index / self.sample_rate_hz

    def to_dict(self):
        return {
            "state": self.state.label,
            "start_index": self.start_index,
            "end_index": self.end_index,
            "length": self.length_samples,
            "duration_s": self.duration_s,
        }


def enumerate_runs(states, sample_rate_hz=1.0) -> List[Run]:
    """Split a backpatched state series into maximal runs, in order."""
    s = np.asarray(states, dtype=np.int8)
    if len(s) == 0:
        return []
    if np.any(s == 0):
        raise ValueError("state series must be backpatched (no undefined states)")
    starts = np.concatenate(([0], np.flatnonzero(np.diff(s)) + 1))
    ends = np.concatenate((starts[1:] - 1, [len(s) - 1]))
    return [
        Run(State(int(s[a])), int(a), int(b), sample_rate_hz)
        for a, b in zip(starts.tolist(), ends.tolist())
    ]


class RunLengthMatrix:
    """2 x L histogram of run lengths; row 0 rise, row 1 drop.

    Column ``k - 1`` counts runs of length ``k``; runs longer than ``L`` are
    clipped into the last column.
    """

    def __init__(self, limit=DEFAULT_RLM_LIMIT, counts=None):
        if int(limit) != limit or limit < 1:
            raise ValueError("RLM limit must be a positive integer")
        self.limit = int(limit)
        if counts is None:
            counts = np.zeros((2, self.limit), dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (2, self.limit) or np.any(counts < 0):
            raise ValueError("counts must be a non-negative 2 x limit array")
        self.counts = counts

    def add(self, state, length):
        row = _ROW.get(State(state))
        if row is None or length < 1:
            raise ValueError(f"cannot count a run of state {state!r}, length {length}")
        self.counts[row, min(int(length), self.limit) - 1] += 1
        return self

    @property
    def rise(self) -> np.ndarray:
        return self.counts[0]

    @property
    def drop(self) -> np.ndarray:
        return self.counts[1]

    @property
    def total_runs(self) -> int:
        return int(self.counts.sum())

    def mass(self) -> int:
        """Sum of length x count; equals the sample count when nothing was clipped."""
        return int((self.counts * np.arange(1, self.limit + 1)).sum())

    def copy(self):
        return RunLengthMatrix(self.limit, self.counts.copy())

    def __eq__(self, other):
        if not isinstance(other, RunLengthMatrix):
            return NotImplemented
        return self.limit == other.limit and np.array_equal(self.counts, other.counts)

    def __repr__(self):
        return f"RunLengthMatrix(limit={self.limit}, runs={self.total_runs})"

    def to_dict(self):
        return {"limit": self.limit, "rise": self.rise.tolist(), "drop": self.drop.tolist()}


def rlm_add_run(matrix: RunLengthMatrix, run: Run) -> RunLengthMatrix:
    """Fold one completed run into ``matrix`` in place and return it."""
    return matrix.add(run.state, run.length_samples)


def build_rlm(runs: Iterable[Run], limit=DEFAULT_RLM_LIMIT) -> RunLengthMatrix:
    matrix = RunLengthMatrix(limit)
    runs = list(runs)
    if runs:
        rows = np.array([_ROW[r.state] for r in runs])
        cols = np.minimum([r.length_samples for r in runs], matrix.limit) - 1
        np.add.at(matrix.counts, (rows, cols), 1)
    return matrix
