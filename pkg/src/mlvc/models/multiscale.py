"""Temporal multi-scale models: segment, pooling, multi-resolution and CNN-LSTM pyramid."""
from __future__ import annotations

import numpy as np

from .. import tensor as T
from .base import VideoModel
from .chaining import Chaining
from .cnn import TemporalConv
from .layers import MoE, time_pool, time_pool_np
from .lstm import SequenceEncoder, StackedLSTM

MULTISCALE_MODES = ("segment", "pool", "resolution", "cnn-lstm")


def _frames(batch) -> np.ndarray:
    return np.concatenate([batch["rgb"], batch["audio"]], axis=-1)


def split_clips(frames: np.ndarray, clip: int) -> list[np.ndarray]:
    """Equal clips of ``clip`` frames; a shorter trailing clip is kept."""
    return [frames[:, s:s + clip] for s in range(0, frames.shape[1], clip)]


class SegmentLSTMModel(VideoModel):
    """Equal clips run through a shared clip LSTM, each clip starting from the state the
    previous clip ended in; the clip representations form a higher-level sequence for a
    second LSTM.  With several clip layers only the first layer's state is carried."""

    uses_frames = True

    def __init__(self, num_labels, dim_rgb, dim_audio, rng, clip=10, cells=32, layers=1, mixtures=8,
                 variant="vanilla", cascade_dim=0):
        super().__init__(num_labels, dim_rgb, dim_audio, cascade_dim)
        self.clip = clip
        self.clip_lstm = self.add_module("clip_lstm", StackedLSTM(dim_rgb + dim_audio, cells, rng, layers, variant))
        self.video_lstm = self.add_module("video_lstm", StackedLSTM(cells, cells, rng, 1, variant))
        self.head = self.make_head(cells, mixtures, rng)

    def clip_representations(self, frames: np.ndarray):
        reps, state = [], None
        for clip in split_clips(frames, self.clip):
            rep, _, state = self.clip_lstm(clip, state)
            reps.append(rep)
        return T.stack(reps, axis=1)

    def forward(self, batch):
        seq = self.clip_representations(_frames(batch))
        rep, _, _ = self.video_lstm(seq)
        p = self.apply_head(self.head, rep, batch)
        return p, [p]


class PoolLSTMModel(VideoModel):
    """Multi-layer LSTM run over the whole video, with temporal k-pooling between layers."""

    uses_frames = True

    def __init__(self, num_labels, dim_rgb, dim_audio, rng, cells=32, layers=2, pool=2, pool_fn="mean", mixtures=8,
                 variant="vanilla", cascade_dim=0):
        super().__init__(num_labels, dim_rgb, dim_audio, cascade_dim)
        self.k, self.pool_fn = pool, pool_fn
        dim = dim_rgb + dim_audio
        self.stack = []
        for l in range(layers):
            self.stack.append(self.add_module(f"l{l}", StackedLSTM(dim, cells, rng, 1, variant)))
            dim = cells
        self.head = self.make_head(cells, mixtures, rng)

    def forward(self, batch):
        seq = _frames(batch)
        rep = None
        for l, lstm in enumerate(self.stack):
            rep, outs, _ = lstm(seq)
            if l < len(self.stack) - 1:
                seq = time_pool(T.stack(outs, axis=1), self.k, self.pool_fn)
        p = self.apply_head(self.head, rep, batch)
        return p, [p]


class MultiResolutionModel(VideoModel):
    """Per-resolution LSTM representations joined by Chaining, coarsest resolution first."""

    uses_frames = True

    def __init__(self, num_labels, dim_rgb, dim_audio, rng, levels=3, pool=2, proj_dim=64, mixtures=4, cells=32,
                 layers=1, mode="single", cells_audio=0, variant="vanilla"):
        super().__init__(num_labels, dim_rgb, dim_audio)
        self.levels, self.k = levels, pool
        self.encoders = [self.add_module(f"encoder{r}", SequenceEncoder(
            dim_rgb, dim_audio, cells, rng, layers=layers, variant=variant, mode=mode,
            cells_audio=cells_audio or None)) for r in range(levels)]
        dims = [e.out_dim for e in self.encoders]
        self.chain = self.add_module("chain", Chaining(dims, num_labels, mixtures, proj_dim, rng))

    def pyramid(self, rgb: np.ndarray, audio: np.ndarray):
        out = [(rgb, audio)]
        for _ in range(1, self.levels):
            rgb, audio = time_pool_np(rgb, self.k), time_pool_np(audio, self.k)
            out.append((rgb, audio))
        return out

    def forward(self, batch):
        levels = self.pyramid(batch["rgb"], batch["audio"])
        # encoder r handles resolution level r; the chain runs coarsest -> original
        reps = [self.encoders[r](*levels[r])[0] for r in range(self.levels)]
        return self.chain(reps[::-1])


class CnnLSTMModel(VideoModel):
    """Conv -> 2-max-pool pyramid; each scale's feature map gets its own LSTM and MoE,
    and the per-scale predictions are combined by a consensus function."""

    uses_frames = True

    def __init__(self, num_labels, dim_rgb, dim_audio, rng, conv_layers=3, widths=(1, 2, 3), channels=(16, 16, 32),
                 cells=32, mixtures=4, pool=2, consensus="mean", variant="vanilla"):
        super().__init__(num_labels, dim_rgb, dim_audio)
        if consensus not in ("mean", "max"):
            raise ValueError(f"unknown consensus {consensus!r}")
        self.k, self.consensus = pool, consensus
        dim = dim_rgb + dim_audio
        self.convs, self.lstms, self.heads = [], [], []
        for s in range(conv_layers):
            conv = self.add_module(f"conv{s}", TemporalConv(dim, widths, channels, rng))
            self.convs.append(conv)
            self.lstms.append(self.add_module(f"lstm{s}", StackedLSTM(conv.out_dim, cells, rng, 1, variant)))
            self.heads.append(self.add_module(f"moe{s}", MoE(cells, num_labels, mixtures, rng)))
            dim = conv.out_dim

    def scale_predictions(self, frames):
        x, preds = frames, []
        for s, conv in enumerate(self.convs):
            fmap = conv.feature_map(x)
            rep, _, _ = self.lstms[s](fmap)
            preds.append(self.heads[s](rep))
            if s < len(self.convs) - 1:
                x = time_pool(fmap, self.k, "max")
        return preds

    def forward(self, batch):
        preds = self.scale_predictions(_frames(batch))
        p = combine_consensus(preds, self.consensus)
        return p, [p]


def combine_consensus(preds, how: str = "mean"):
    if len(preds) == 1:
        return preds[0]
    stacked = T.stack(preds, axis=1)
    if how == "max":
        return T.max_(stacked, axis=1)
    # anchored on the first scale so equal predictions come back unchanged
    return preds[0] + T.mean(stacked - T.stack([preds[0]] * len(preds), axis=1), axis=1)


def multiscale_forward(batch, model: VideoModel):
    return model.forward(batch)[0]
