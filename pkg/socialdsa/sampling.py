"""Inverse-CDF draws from channel-choice distributions.

Every policy turns its mixed strategy into a channel with one uniform variate
per user, so a stream (or a test stub with a ``random`` method) fully fixes
the picks.
"""

import numpy as np


def sample_index(probabilities: np.ndarray, u: float) -> int:
    cumulative = np.cumsum(probabilities)
    index = int(np.searchsorted(cumulative, u * cumulative[-1], side="right"))
    return min(index, len(probabilities) - 1)


def sample_rows(probabilities: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """One draw per row of an (N, M) probability matrix."""
    cumulative = np.cumsum(probabilities, axis=1)
    thresholds = np.asarray(uniforms)[:, None] * cumulative[:, -1:]
    index = (thresholds >= cumulative).sum(axis=1)
    return np.minimum(index, probabilities.shape[1] - 1).astype(np.int64)


def draw_channel(probabilities: np.ndarray, rng) -> int:
    return sample_index(probabilities, float(rng.random()))
