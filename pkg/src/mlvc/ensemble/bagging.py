from __future__ import annotations

import numpy as np


def bootstrap_sample(n: int, seed: int) -> np.ndarray:
    """``n`` indices drawn uniformly with replacement from ``range(n)``."""
    if n < 1:
        raise ValueError("bootstrap needs n >= 1")
    return np.random.default_rng(seed).integers(0, n, size=n)
