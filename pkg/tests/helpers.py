"""Shared test data."""

import numpy as np


def random_image(rng, n, scale=1.0):
    return scale * rng.standard_normal((n, n))


def piecewise_constant_phantom(n=64, seed=0):
    """Seeded phantom of overlapping flat rectangles and discs on a flat background."""
    rng = np.random.default_rng(seed)
    img = np.full((n, n), 40.0)
    yy, xx = np.mgrid[:n, :n]
    for _ in range(4):
        r0, c0 = rng.integers(0, n // 2, size=2)
        h, w = rng.integers(n // 6, n // 2, size=2)
        img[r0 : r0 + h, c0 : c0 + w] = rng.uniform(60, 220)
    for _ in range(3):
        cy, cx = rng.uniform(0.2 * n, 0.8 * n, size=2)
        rad = rng.uniform(0.06 * n, 0.15 * n)
        img[(yy - cy) ** 2 + (xx - cx) ** 2 < rad * rad] = rng.uniform(60, 240)
    return img


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
