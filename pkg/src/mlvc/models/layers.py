from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..module import Module


class Linear(Module):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True):
        super().__init__()
        self.in_dim, self.out_dim = in_dim, out_dim
        self.w = self.add_param("w", T.glorot(rng, in_dim, out_dim))
        self.b = self.add_param("b", np.zeros(out_dim)) if bias else None

    def __call__(self, x):
        if x.shape[-1] != self.in_dim:
            raise T.ShapeError(f"linear: input dim {x.shape[-1]} != {self.in_dim}")
        y = T.matmul(x, self.w)
        return y if self.b is None else T.add_bias(y, self.b)


class MoE(Module):
    """Per-label mixture of logistic experts with a zero-output dummy expert.

    p_l = sum_g gate_{g,l} * sigmoid(expert_{g,l}), gates softmax-normalised over
    ``mixtures + 1`` entries of which the last belongs to the dummy expert.
    """

    def __init__(self, in_dim: int, num_labels: int, mixtures: int, rng: np.random.Generator):
        super().__init__()
        self.in_dim, self.num_labels, self.mixtures = in_dim, num_labels, mixtures
        L, m = num_labels, mixtures
        self.gate = self.add_module("gate", Linear(in_dim, L * (m + 1), rng))
        self.expert = self.add_module("expert", Linear(in_dim, L * m, rng))

    def __call__(self, x):
        if x.shape[-1] != self.in_dim:
            raise T.ShapeError(f"moe: input dim {x.shape[-1]} != {self.in_dim}")
        lead = tuple(x.shape[:-1])
        L, m = self.num_labels, self.mixtures
        gates = T.softmax(self.gate(x).reshape(lead + (L, m + 1)), axis=-1)
        experts = T.sigmoid(self.expert(x).reshape(lead + (L, m)))
        return T.sum_(gates[..., :m] * experts, axis=-1)


def moe_forward(features, params: MoE):
    return params(T.as_tensor(features))


class Logistic(Module):
    def __init__(self, in_dim: int, num_labels: int, rng: np.random.Generator):
        super().__init__()
        self.in_dim = in_dim
        self.linear = self.add_module("linear", Linear(in_dim, num_labels, rng))

    def __call__(self, x):
        return T.sigmoid(self.linear(x))


def time_pool(x, k: int, how: str = "mean"):
    """Pool (B, T, D) by ``k`` along time; a trailing partial window is pooled on its own."""
    x = T.as_tensor(x)
    B, steps, D = x.shape
    full = steps // k
    reduce = T.mean if how == "mean" else T.max_
    parts = []
    if full:
        parts.append(reduce(x[:, :full * k, :].reshape(B, full, k, D), axis=2))
    if steps % k:
        parts.append(reduce(x[:, full * k:, :], axis=1, keepdims=True))
    return parts[0] if len(parts) == 1 else T.concat(parts, axis=1)


def time_pool_np(x: np.ndarray, k: int) -> np.ndarray:
    B, steps, D = x.shape
    full = steps // k
    parts = []
    if full:
        parts.append(x[:, :full * k].reshape(B, full, k, D).mean(axis=2))
    if steps % k:
        parts.append(x[:, full * k:].mean(axis=1, keepdims=True))
    return np.concatenate(parts, axis=1)
