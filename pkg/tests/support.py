"""Shared helpers for the test suite.

Small random-scene builders that the module tests and the acceptance
gate both use.  Kept deliberately dumb: plain loops and dict/set math,
so they can double as reference implementations where noted.
"""

from __future__ import annotations

import numpy as np

from anomeval import ANOMALY, NOT_ANOMALY, VOID, LabelMap, ScoreMap


def random_labels(rng, height=16, width=16, p_anomaly=0.25, p_void=0.1):
    """Labels over all three classes, guaranteed >= 1 anomaly and >= 1 background pixel."""
    while True:
        u = rng.random((height, width))
        labels = np.full((height, width), NOT_ANOMALY, dtype=np.uint8)
        labels[u < p_anomaly] = ANOMALY
        labels[u > 1.0 - p_void] = VOID
        if (labels == ANOMALY).any() and (labels == NOT_ANOMALY).any():
            return labels


def random_pair(rng, height=16, width=16, p_anomaly=0.25, p_void=0.1, ties=False):
    """A (LabelMap, ScoreMap) pair with random float32 scores.

    With ties=True the scores are quantized to one decimal so duplicate
    thresholds show up often.
    """
    labels = random_labels(rng, height, width, p_anomaly, p_void)
    scores = rng.random((height, width), dtype=np.float32)
    if ties:
        scores = np.round(scores, 1).astype(np.float32)
    return LabelMap(labels), ScoreMap(scores)


def stamp_rect(grid, top, left, h, w, value=1):
    grid[top : top + h, left : left + w] = value
    return grid


def rect_set(top, left, h, w):
    return {(r, c) for r in range(top, top + h) for c in range(left, left + w)}
