"""Attention pooling over LSTM outputs (multi-AP, positional multi-AP) and over inputs (local-AP)."""
from __future__ import annotations

import numpy as np

from .. import tensor as T
from ..module import Module
from .layers import MoE

CONSENSUS = ("max", "mean")


class MultiAttentionPool(Module):
    """K softmax attention groups over frames; one MoE shared by all groups.

    e_{ik} = W_k [x_i; y_i (; pos_i)],  a_{ik} = softmax_i(e_{ik}),
    z_k = sum_i a_{ik} y_i,  p = consensus_k MoE(z_k).
    """

    def __init__(self, x_dim: int, y_dim: int, num_labels: int, groups: int, mixtures: int,
                 rng: np.random.Generator, positional: bool = False, max_frames: int = 30, pos_dim: int = 32,
                 consensus: str = "max"):
        super().__init__()
        if groups < 1:
            raise ValueError("need at least one attention group")
        if consensus not in CONSENSUS:
            raise ValueError(f"unknown consensus {consensus!r}")
        self.groups, self.consensus, self.positional = groups, consensus, positional
        in_dim = x_dim + y_dim + (pos_dim if positional else 0)
        self.attn = self.add_param("attn", T.glorot(rng, in_dim, groups))
        if positional:
            self.pos = self.add_param("pos", 0.1 * rng.standard_normal((max_frames, pos_dim)))
        self.moe = self.add_module("moe", MoE(y_dim, num_labels, mixtures, rng))
        self.last_weights: np.ndarray | None = None

    def __call__(self, x, ys):
        if not ys:
            raise ValueError("attention pooling over an empty sequence")
        Y = T.stack(ys, axis=1)                               # (B, T, N)
        B, steps = Y.shape[0], Y.shape[1]
        parts = [T.as_tensor(x), Y]
        if self.positional:
            idx = np.minimum(np.arange(steps), self.pos.shape[0] - 1)
            emb = T.embedding(self.pos, idx).reshape(1, steps, -1)
            parts.append(emb + np.zeros((B, 1, 1)))          # broadcast over the batch
        e = T.matmul(T.concat(parts, axis=-1), self.attn)     # (B, T, K)
        a = T.softmax(e, axis=1)
        self.last_weights = a.values
        z = T.matmul(a.transpose(0, 2, 1), Y)                 # (B, K, N)
        pk = self.moe(z)                                      # (B, K, L)
        return T.max_(pk, axis=1) if self.consensus == "max" else T.mean(pk, axis=1)


class LocalAttentionPool(Module):
    """Single attention over the input frames; MoE over [LSTM representation; pooled input]."""

    def __init__(self, x_dim: int, rep_dim: int, num_labels: int, mixtures: int, rng: np.random.Generator):
        super().__init__()
        self.attn = self.add_param("attn", T.glorot(rng, x_dim, 1))
        self.moe = self.add_module("moe", MoE(rep_dim + x_dim, num_labels, mixtures, rng))
        self.last_weights: np.ndarray | None = None

    def pool(self, x):
        x = T.as_tensor(x)
        if x.shape[1] == 0:
            raise ValueError("attention pooling over an empty sequence")
        a = T.softmax(T.matmul(x, self.attn), axis=1)         # (B, T, 1)
        self.last_weights = a.values
        return T.sum_(a * x, axis=1)

    def __call__(self, x, rep):
        return self.moe(T.concat([rep, self.pool(x)], axis=-1))


def attention_pool_forward(frames, outputs, params, mode: str = "multi", rep=None):
    """``mode`` in {multi, positional, local}; ``rep`` is the LSTM representation for local mode."""
    if mode in ("multi", "positional"):
        return params(frames, outputs)
    if mode == "local":
        return params(frames, rep)
    raise ValueError(f"unknown attention mode {mode!r}")
