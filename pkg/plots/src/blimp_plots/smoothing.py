"""Trailing moving average used for reward-curve smoothing."""

from __future__ import annotations

import numpy as np


def moving_average(values, window: int) -> np.ndarray:
    """Trailing windowed mean with a growing head.

    out[i] = mean(values[max(0, i - window + 1) .. i]), so the curve
    starts at the raw first value and reaches the full window after
    window - 1 samples. window = 1 returns the values unchanged.

    Window sums are computed directly per output element (not as
    differences of running prefix sums), so results stay within a few
    ulp of the exact windowed mean regardless of sequence length.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a 1-D sequence")
    if window == 1 or len(x) == 0:
        return x.copy()
    head_n = min(window - 1, len(x))
    head = np.cumsum(x[:head_n]) / np.arange(1, head_n + 1)
    if len(x) < window:
        return head
    full = np.convolve(x, np.ones(window), mode="valid") / window
    return np.concatenate([head, full])
