"""Per-example boosting weights driven by the PERR error of the previous round."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..metrics import per_example_perr


class BoostingTerminated(RuntimeError):
    """Average error hit 0 or 1, so the round coefficient is infinite."""


@dataclass
class SampleWeights:
    W: np.ndarray
    round: int = 0

    @classmethod
    def initial(cls, n: int) -> "SampleWeights":
        return cls(np.ones(n), 0)


def clip_weights(w: np.ndarray, ceiling: float) -> np.ndarray:
    """Cap weights at ``ceiling`` while keeping their sum.

    Finds the scale s with sum(min(s * w, ceiling)) == sum(w); capping and
    renormalising once is not enough because renormalising can push other
    weights past the ceiling again.
    """
    total = w.sum()
    n = w.size
    if ceiling * n < total:
        raise ValueError(f"clip ceiling {ceiling} cannot hold a total weight of {total} over {n} examples")
    capped = np.zeros(n, dtype=bool)
    out = w.copy()
    while True:
        free = ~capped
        s = (total - ceiling * capped.sum()) / w[free].sum()
        over = free & (s * w > ceiling)
        if not over.any():
            out[free] = s * w[free]
            out[capped] = ceiling
            return out
        capped |= over


def boosting_update(weights: SampleWeights, per_example_err, alpha: float = 1.0,
                    clip: float | None = 5.0) -> SampleWeights:
    """W_{k+1,n} = N / Z_k * W_{k,n} * exp(alpha * r_k * Err_{k,n}), r_k = log((1 - Err_k) / Err_k),
    then clipped at ``clip`` with the total kept at N."""
    err = np.asarray(per_example_err, dtype=np.float64)
    W = np.asarray(weights.W, dtype=np.float64)
    if err.shape != W.shape:
        raise ValueError(f"error vector {err.shape} does not match weights {W.shape}")
    if np.any(err < 0) or np.any(err > 1):
        raise ValueError("per-example errors must lie in [0, 1]")
    N = W.size
    err_k = err.mean()
    if err_k <= 0.0 or err_k >= 1.0:
        raise BoostingTerminated(f"average error {err_k} leaves the round coefficient undefined")
    r_k = np.log((1.0 - err_k) / err_k)
    u = W * np.exp(alpha * r_k * err)
    new = (N / u.sum()) * u
    if clip is not None:
        new = clip_weights(new, clip)
    return SampleWeights(new, weights.round + 1)


def perr_errors(predictions, labels) -> np.ndarray:
    """1 - PERR per example; label-free examples get the mean error so they stay neutral."""
    p = per_example_perr(predictions, labels)
    err = 1.0 - p
    missing = np.isnan(err)
    if missing.all():
        raise ValueError("no labelled examples to compute boosting errors from")
    err[missing] = err[~missing].mean()
    return err


def kept_examples(weights: SampleWeights, clip: float, tol: float = 1e-9) -> np.ndarray:
    """Indices whose weight sits below the ceiling (for the drop-at-ceiling variant)."""
    return np.flatnonzero(weights.W < clip - tol)
