"""Cascade layer: an MoE whose input also carries a projection of donor models' averaged predictions."""
from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..models.layers import Linear, MoE
from ..module import Module


class CascadeLayer(Module):
    def __init__(self, in_dim: int, num_labels: int, mixtures: int, rng: np.random.Generator, proj_dim: int = 128):
        super().__init__()
        self.in_dim, self.num_labels = in_dim, num_labels
        self.proj = self.add_module("proj", Linear(num_labels, proj_dim, rng, bias=False))
        self.moe = self.add_module("moe", MoE(in_dim + proj_dim, num_labels, mixtures, rng))

    def __call__(self, feature, donor_mean):
        donor_mean = T.as_tensor(donor_mean)
        if donor_mean.shape[-1] != self.num_labels:
            raise T.ShapeError(f"cascade: donor predictions have {donor_mean.shape[-1]} labels, "
                               f"expected {self.num_labels}")
        return self.moe(T.concat([T.as_tensor(feature), self.proj(donor_mean)], axis=-1))


def cascade_forward(feature, other_predictions, params: CascadeLayer):
    if len(other_predictions) == 0:
        raise ValueError("cascade needs at least one donor prediction")
    stacked = np.stack([np.asarray(p, dtype=np.float64) for p in other_predictions])
    # anchored mean: exact when every donor agrees
    avg = stacked[0] + np.mean(stacked - stacked[0], axis=0)
    return params(feature, avg)
