"""GAP@k, precision-equal-recall rate and hit@1 over (N, L) confidence matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class UndefinedMetric(ValueError):
    pass


def top_k_indices(row: np.ndarray, k: int) -> np.ndarray:
    """Label indices of the ``k`` highest confidences; ties go to the lower label index."""
    order = np.lexsort((np.arange(row.size), -row))
    return order[:k]


def _top_k_matrix(predictions: np.ndarray, k: int) -> np.ndarray:
    k = min(k, predictions.shape[1])
    # stable sort on -confidence keeps lower label index first among ties
    return np.argsort(-predictions, axis=1, kind="stable")[:, :k]


def global_average_precision(predictions, labels, top_k: int = 20) -> float:
    """AP over the pooled list of every video's top-k (video, label, confidence) tuples.

    The list is ordered by (confidence desc, video asc, label asc).  Recall is
    measured against each video's positives capped at ``top_k``.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels) > 0
    if predictions.shape != labels.shape:
        raise ValueError(f"predictions {predictions.shape} and labels {labels.shape} differ in shape")
    n_pos = int(np.minimum(labels.sum(axis=1), top_k).sum())
    if n_pos == 0:
        raise UndefinedMetric("GAP undefined: no positive labels in the evaluation set")
    top = _top_k_matrix(predictions, top_k)
    N, k = top.shape
    vids = np.repeat(np.arange(N), k)
    labs = top.reshape(-1)
    conf = predictions[vids, labs]
    hit = labels[vids, labs]
    order = np.lexsort((labs, vids, -conf))
    hit = hit[order].astype(np.float64)
    precision = np.cumsum(hit) / np.arange(1, hit.size + 1)
    return float((precision * hit).sum() / n_pos)


def perr(pred_row, label_row) -> float:
    """Precision at rank g, where g is the number of ground-truth labels."""
    label_row = np.asarray(label_row) > 0
    g = int(label_row.sum())
    if g == 0:
        raise UndefinedMetric("PERR undefined for an example without labels (skip it)")
    top = top_k_indices(np.asarray(pred_row, dtype=np.float64), g)
    return float(label_row[top].sum() / g)


def hit_at_one(pred_row, label_row) -> int:
    """1 when the top-confidence label (lowest index among ties) is a positive."""
    pred_row = np.asarray(pred_row, dtype=np.float64)
    return int(np.asarray(label_row)[int(np.argmax(pred_row))] > 0)


def per_example_perr(predictions, labels) -> np.ndarray:
    """PERR per row; NaN for rows without labels."""
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels) > 0
    g = labels.sum(axis=1)
    order = np.argsort(-predictions, axis=1, kind="stable")
    ranked_hits = np.take_along_axis(labels, order, axis=1)
    cum = np.cumsum(ranked_hits, axis=1)
    out = np.full(len(g), np.nan)
    has = g > 0
    out[has] = cum[has, g[has] - 1] / g[has]
    return out


@dataclass
class EvalReport:
    gap: float
    perr: float
    hit_at_one: float
    n_examples: int
    n_positives: int

    def as_dict(self) -> dict:
        return {"gap": self.gap, "perr": self.perr, "hit_at_one": self.hit_at_one,
                "n_examples": self.n_examples, "n_positives": self.n_positives}

    def to_text(self) -> str:
        return "\n".join(f"{k}: {v:.6f}" if isinstance(v, float) else f"{k}: {v}" for k, v in self.as_dict().items())


def evaluate(predictions, labels, top_k: int = 20) -> EvalReport:
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels) > 0
    p = per_example_perr(predictions, labels)
    has = labels.any(axis=1)
    hits = labels[np.arange(len(labels)), np.argmax(predictions, axis=1)]
    return EvalReport(
        gap=global_average_precision(predictions, labels, top_k),
        perr=float(np.nanmean(p)) if has.any() else float("nan"),
        hit_at_one=float(hits[has].mean()) if has.any() else float("nan"),
        n_examples=int(len(labels)),
        n_positives=int(labels.sum()),
    )
