"""Slow, direct re-computations used as test oracles."""
from __future__ import annotations

import numpy as np


def gap_bruteforce(pred, labels, top_k=20):
    """AP over the pooled top-k list, recomputing precision and recall at every cut from scratch."""
    pred = np.asarray(pred, dtype=float)
    labels = np.asarray(labels) > 0
    tuples = []
    for v in range(pred.shape[0]):
        ranked = sorted(range(pred.shape[1]), key=lambda l: (-pred[v, l], l))[:top_k]
        tuples += [(pred[v, l], v, l) for l in ranked]
    tuples.sort(key=lambda t: (-t[0], t[1], t[2]))
    total = sum(min(int(labels[v].sum()), top_k) for v in range(pred.shape[0]))
    ap, prev_recall = 0.0, 0.0
    for i in range(1, len(tuples) + 1):
        hits = sum(1 for c, v, l in tuples[:i] if labels[v, l])
        precision = hits / i
        recall = hits / total
        ap += precision * (recall - prev_recall)
        prev_recall = recall
    return ap


def boosting_direct(W, err, alpha=1.0):
    """Exponential re-weighting evaluated term by term (no clipping)."""
    N = len(W)
    err_k = sum(err) / N
    r = np.log((1 - err_k) / err_k)
    unnorm = [w * np.exp(alpha * r * e) for w, e in zip(W, err)]
    Z = sum(unnorm)
    return [N * u / Z for u in unnorm]
