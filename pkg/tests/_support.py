"""Shared test data."""

import numpy as np

from isomest import ScoreFamily

FAMILIES = [
    ScoreFamily.l2(),
    ScoreFamily.huber(0.98),
    ScoreFamily.huber(0.3),
    ScoreFamily.smoothed_l1(5.0),
    ScoreFamily.smoothed_l1(100.0),
    ScoreFamily.smoothed_huber(0.98, 4.0),
    ScoreFamily.l1(),
]


def random_sample(rng, n, ties=True, scale=3.0):
    """Small sample with a weak trend, repeated design points and outliers."""
    if ties:
        t = np.sort(rng.integers(0, max(2, n // 2 + 2), n)).astype(float)
    else:
        t = np.sort(rng.random(n))
    x = 0.3 * t + scale * rng.standard_normal(n)
    if rng.random() < 0.3:
        x[rng.integers(n)] += rng.choice([-1, 1]) * 20.0
    if rng.random() < 0.2:
        x = np.round(x)
    return t, x


# criterion number -> (title, passed, detail); filled by the acceptance suite
ACCEPTANCE: dict = {}
