"""Built-in synthetic test object."""

from __future__ import annotations

import numpy as np

__all__ = ["make_phantom"]


def make_phantom(n: int, seed: int = 0) -> np.ndarray:
    """Smooth unit-modulus complex object on an n-by-n grid.

    A seeded mixture of Gaussian bumps gives a gray-scale height field scaled
    to [0, 1]; the values are mapped onto a circular arc in the complex plane,
    exp(1j * 1.5 * pi * (height - 0.5)), so magnitude is constant and phase
    varies smoothly. Deterministic for a given (n, seed).
    """
    if n < 1:
        raise ValueError("grid size must be positive")
    rng = np.random.default_rng(seed)
    coords = (np.arange(n) + 0.5) / n
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    height = np.zeros((n, n))
    for _ in range(12):
        cy, cx = rng.uniform(0.1, 0.9, size=2)
        width = rng.uniform(0.06, 0.25)
        weight = rng.uniform(-1.0, 1.0)
        height += weight * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * width * width))
    span = height.max() - height.min()
    if span > 0:
        height = (height - height.min()) / span
    else:
        height = np.zeros_like(height)
    return np.exp(1.5j * np.pi * (height - 0.5))
