"""Gradient-sign ("state") series with strict plateau semantics.

States are stored as ``int8``: ``+1`` rise, ``-1`` drop, ``0`` undefined.
A zero change never creates a state of its own; the sample inherits the
previous definite state, so a falling level that levels off still counts as
falling until a strictly positive change appears.
"""

from enum import IntEnum

import numpy as np

from .errors import FlatSignalError

KERNEL_WIDTHS = (2, 3)


class State(IntEnum):
    DROP = -1
    UNDEFINED = 0
    RISE = 1

    @property
    def label(self):
        return self.name.lower()


def raw_signs(values, kernel_width=2):
    """Sign of the difference operator at each sample (0 where undefined or zero)."""
    x = np.asarray(values, dtype=float)
    if kernel_width not in KERNEL_WIDTHS:
        raise ValueError(f"kernel_width must be 2 or 3, got {kernel_width!r}")
    s = np.zeros(len(x), dtype=np.int8)
    if kernel_width == 2:
        s[1:] = np.sign(x[1:] - x[:-1])
    elif len(x) >= 3:
        # centered mask; halving does not change the sign
        s[1:-1] = np.sign(x[2:] - x[:-2])
    return s


def forward_fill(signs):
    """Replace each zero by the last non-zero value before it (leading zeros stay)."""
    s = np.asarray(signs, dtype=np.int8)
    if len(s) == 0:
        return s.copy()
    pos = np.where(s != 0, np.arange(len(s)), 0)
    np.maximum.accumulate(pos, out=pos)
    # slots before the first non-zero point at index 0, which is itself zero
    return s[pos]


def state_series(values, kernel_width=2):
    """Rise/drop labels with the copy-previous rule; the head may be undefined."""
    return forward_fill(raw_signs(values, kernel_width))


def backpatch(states):
    """Fill the undefined head with the first definite state."""
    s = np.array(states, dtype=np.int8)
    nz = np.flatnonzero(s)
    if len(nz) == 0:
        raise FlatSignalError()
    s[: nz[0]] = s[nz[0]]
    return s


def gradient_states(values, kernel_width=2):
    return backpatch(state_series(values, kernel_width))
