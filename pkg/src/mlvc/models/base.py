from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..module import Module
from .layers import MoE


class VideoModel(Module):
    """Common surface: ``forward(batch) -> (prediction (B, L), stage predictions)``.

    ``batch`` holds ``video`` (B, D_v + D_a) and, for frame models, ``rgb``
    (B, T, D_v) and ``audio`` (B, T, D_a); cascade heads also read ``donor``
    (B, L), the averaged donor predictions.
    """

    uses_frames = False

    def __init__(self, num_labels: int, dim_rgb: int, dim_audio: int, cascade_dim: int = 0):
        super().__init__()
        self.num_labels, self.dim_rgb, self.dim_audio = num_labels, dim_rgb, dim_audio
        self.cascade_dim = cascade_dim

    @property
    def uses_donors(self) -> bool:
        return self.cascade_dim > 0

    def make_head(self, in_dim: int, mixtures: int, rng: np.random.Generator, name: str = "head"):
        if self.cascade_dim:
            from ..ensemble.cascade import CascadeLayer
            return self.add_module(name, CascadeLayer(in_dim, self.num_labels, mixtures, rng, self.cascade_dim))
        return self.add_module(name, MoE(in_dim, self.num_labels, mixtures, rng))

    def apply_head(self, head, feature, batch):
        if self.cascade_dim:
            if "donor" not in batch:
                raise KeyError("cascade model needs donor predictions in the batch")
            return head(feature, batch["donor"])
        return head(feature)

    def forward(self, batch) -> tuple[T.Tensor, list[T.Tensor]]:
        raise NotImplementedError

    def __call__(self, batch):
        return self.forward(batch)


def predict(model: VideoModel, dataset, batch_size: int = 256, donors: np.ndarray | None = None) -> np.ndarray:
    """Confidences for every example of ``dataset`` in dataset order."""
    out = np.zeros((len(dataset), dataset.num_labels))
    for idx in dataset.batches(batch_size):
        batch = dataset.batch(idx)
        if donors is not None:
            batch["donor"] = donors[idx]
        pred, _ = model.forward(batch)
        out[idx] = pred.values
    return out
