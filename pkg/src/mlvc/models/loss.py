from __future__ import annotations

import numpy as np

from .. import tensor as T

PROB_EPS = 1e-6


def cross_entropy(p, target) -> T.Tensor:
    """Per-example binary cross-entropy averaged over labels; shape (B,)."""
    target = np.asarray(target, dtype=np.float64)
    if tuple(p.shape) != target.shape:
        raise T.ShapeError(f"cross-entropy: prediction shape {p.shape} != target shape {target.shape}")
    pc = T.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    ll = target * T.log(pc) + (1.0 - target) * T.log(1.0 - pc)
    return -T.mean(ll, axis=-1)


def _combined(pred, stages, target, aux_share):
    # ``stages`` ends with the final prediction; everything before it is auxiliary
    final = cross_entropy(pred, target)
    inter = list(stages or [])[:-1]
    if not inter or aux_share == 0:
        return final
    aux = cross_entropy(inter[0], target)
    for s in inter[1:]:
        aux = aux + cross_entropy(s, target)
    return (1.0 - aux_share) * final + (aux_share / len(inter)) * aux


def compute_loss(pred, labels, stage_predictions=None, soft_target=None, lam: float = 0.0,
                 aux_share: float = 0.15, weights=None) -> T.Tensor:
    """Scalar training loss.

    base: binary cross-entropy averaged over labels and batch.  With intermediate
    stages: (1 - aux_share) * ce(final) + aux_share * mean(ce(intermediate)).
    With a soft target: (1 - lam) * term(labels) + lam * term(soft_target).
    ``weights`` multiplies each example's loss.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if not 0.0 <= aux_share < 0.5:
        raise ValueError(f"aux_share must lie in [0, 0.5), got {aux_share}")
    per = _combined(pred, stage_predictions, labels, aux_share)
    if soft_target is not None and lam > 0:
        per = (1.0 - lam) * per + lam * _combined(pred, stage_predictions, soft_target, aux_share)
    if weights is not None:
        per = per * np.asarray(weights, dtype=np.float64)
    return T.mean(per)
