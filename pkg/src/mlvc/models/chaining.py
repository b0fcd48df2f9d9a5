"""Chaining: a chain of MoE stages, each seeing projections of all earlier predictions."""
from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..module import Module
from .layers import Linear, MoE


class Chaining(Module):
    def __init__(self, feature_dims, num_labels: int, mixtures: int, proj_dim: int, rng: np.random.Generator):
        super().__init__()
        feature_dims = list(feature_dims)
        if not feature_dims:
            raise ValueError("chaining needs at least one stage")
        self.num_stages, self.proj_dim = len(feature_dims), proj_dim
        self.stages, self.projections = [], []
        for s, dim in enumerate(feature_dims):
            self.stages.append(self.add_module(f"stage{s}", MoE(dim + s * proj_dim, num_labels, mixtures, rng)))
        for s in range(self.num_stages - 1):
            self.projections.append(self.add_module(f"proj{s}", Linear(num_labels, proj_dim, rng, bias=False)))

    def __call__(self, features):
        """Returns (final prediction, list of every stage's prediction)."""
        if len(features) != self.num_stages:
            raise ValueError(f"chaining: expected {self.num_stages} stage features, got {len(features)}")
        preds, projected = [], []
        for s, moe in enumerate(self.stages):
            x = T.as_tensor(features[s])
            if projected:
                x = T.concat([x] + projected, axis=-1)
            p = moe(x)
            preds.append(p)
            if s < self.num_stages - 1:
                projected.append(self.projections[s](p))
        return preds[-1], preds


def chaining_forward(stage_features, params: Chaining):
    return params(stage_features)


def moe_param_count(in_dim: int, num_labels: int, mixtures: int) -> int:
    return (in_dim + 1) * num_labels * (2 * mixtures + 1)


def matched_mixtures(target_params: int, in_dim: int, num_labels: int) -> int:
    """Mixture count whose flat MoE parameter count is closest to ``target_params``."""
    m = (target_params / ((in_dim + 1) * num_labels) - 1.0) / 2.0
    return max(1, int(round(m)))
