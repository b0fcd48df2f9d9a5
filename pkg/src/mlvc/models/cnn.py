"""Temporal convolutions whose filters span the whole per-frame feature vector."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from ..module import Module


@dataclass
class CnnParams:
    widths: tuple[int, ...] = (1, 2, 3)
    channels: tuple[int, ...] = (32, 32, 64)
    layers: int = 1
    pool: int = 2


def _windows(x, width: int, pad: bool):
    """(B, T, D) -> (B, T', width*D) stacking ``width`` consecutive frames per position."""
    if isinstance(x, T.Tensor):
        if pad and width > 1:
            B, _, D = x.shape
            x = T.concat([x, T.Tensor(np.zeros((B, width - 1, D)))], axis=1)
        steps = x.shape[1] - width + 1
        if width == 1:
            return x
        return T.concat([x[:, i:i + steps, :] for i in range(width)], axis=-1)
    x = np.asarray(x, dtype=np.float64)
    if pad and width > 1:
        x = np.concatenate([x, np.zeros((x.shape[0], width - 1, x.shape[2]))], axis=1)
    steps = x.shape[1] - width + 1
    return T.Tensor(np.concatenate([x[:, i:i + steps, :] for i in range(width)], axis=-1))


class TemporalConv(Module):
    """One convolution layer: per width ``w`` a bank of (w x D) filters, ReLU activation."""

    def __init__(self, in_dim: int, widths, channels, rng: np.random.Generator):
        super().__init__()
        if len(widths) != len(channels):
            raise ValueError("widths and channels must have equal length")
        self.in_dim, self.widths, self.channels = in_dim, tuple(widths), tuple(channels)
        self.filters = []
        for w, c in zip(self.widths, self.channels):
            W = self.add_param(f"w{w}", T.glorot(rng, w * in_dim, c))
            b = self.add_param(f"b{w}", np.zeros(c))
            self.filters.append((w, W, b))

    @property
    def out_dim(self) -> int:
        return sum(self.channels)

    def _check(self, x):
        if x.shape[-1] != self.in_dim:
            raise T.ShapeError(f"cnn: frame dim {x.shape[-1]} != filter length {self.in_dim}")

    def feature_map(self, x):
        """Same-length output (B, T, sum(channels)); frames past the end count as zeros."""
        self._check(x)
        maps = [T.relu(T.add_bias(T.matmul(_windows(x, w, pad=True), W), b)) for w, W, b in self.filters]
        return maps[0] if len(maps) == 1 else T.concat(maps, axis=-1)

    def pooled(self, x):
        """Valid convolution per width, then max over time; (B, sum(channels))."""
        self._check(x)
        if x.shape[1] < max(self.widths):
            raise ValueError(f"sequence of {x.shape[1]} frames is shorter than the widest filter ({max(self.widths)})")
        outs = [T.max_(T.relu(T.add_bias(T.matmul(_windows(x, w, pad=False), W), b)), axis=1)
                for w, W, b in self.filters]
        return outs[0] if len(outs) == 1 else T.concat(outs, axis=-1)


def cnn_over_time(frames, conv: TemporalConv):
    return conv.pooled(frames)
