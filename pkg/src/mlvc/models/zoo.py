"""Video-level and frame-level architectures, plus the name -> class registry."""
from __future__ import annotations

import numpy as np

from .. import tensor as T
from .attention import LocalAttentionPool, MultiAttentionPool
from .base import VideoModel
from .chaining import Chaining
from .cnn import TemporalConv
from .layers import Logistic
from .lstm import SequenceEncoder


class LogisticModel(VideoModel):
    def __init__(self, num_labels, dim_rgb, dim_audio, rng):
        super().__init__(num_labels, dim_rgb, dim_audio)
        self.lr = self.add_module("lr", Logistic(dim_rgb + dim_audio, num_labels, rng))

    def forward(self, batch):
        p = self.lr(T.Tensor(batch["video"]))
        return p, [p]


class MoEModel(VideoModel):
    def __init__(self, num_labels, dim_rgb, dim_audio, rng, mixtures=16, cascade_dim=0):
        super().__init__(num_labels, dim_rgb, dim_audio, cascade_dim)
        self.head = self.make_head(dim_rgb + dim_audio, mixtures, rng)

    def forward(self, batch):
        p = self.apply_head(self.head, T.Tensor(batch["video"]), batch)
        return p, [p]


class MeanPoolModel(MoEModel):
    """Bag-of-frames baseline: frame average followed by an MoE."""

    uses_frames = True

    def forward(self, batch):
        x = np.concatenate([batch["rgb"], batch["audio"]], axis=-1).mean(axis=1)
        p = self.apply_head(self.head, T.Tensor(x), batch)
        return p, [p]


class ChainingMoEModel(VideoModel):
    def __init__(self, num_labels, dim_rgb, dim_audio, rng, stages=8, proj_dim=128, mixtures=2):
        super().__init__(num_labels, dim_rgb, dim_audio)
        D = dim_rgb + dim_audio
        self.chain = self.add_module("chain", Chaining([D] * stages, num_labels, mixtures, proj_dim, rng))

    def forward(self, batch):
        x = T.Tensor(batch["video"])
        return self.chain([x] * self.chain.num_stages)


def _encoder(dim_rgb, dim_audio, rng, cells, layers, variant, mode, cells_audio, representation):
    return SequenceEncoder(dim_rgb, dim_audio, cells, rng, layers=layers, variant=variant, mode=mode,
                           cells_audio=cells_audio or None, representation=representation)


class LSTMModel(VideoModel):
    uses_frames = True

    def __init__(self, num_labels, dim_rgb, dim_audio, rng, cells=32, layers=2, variant="vanilla", mode="single",
                 cells_audio=0, representation="cell", mixtures=8, cascade_dim=0):
        super().__init__(num_labels, dim_rgb, dim_audio, cascade_dim)
        self.encoder = self.add_module("encoder", _encoder(dim_rgb, dim_audio, rng, cells, layers, variant, mode,
                                                           cells_audio, representation))
        self.head = self.make_head(self.encoder.out_dim, mixtures, rng)

    def forward(self, batch):
        rep, _ = self.encoder(batch["rgb"], batch["audio"])
        p = self.apply_head(self.head, rep, batch)
        return p, [p]


class CNNModel(VideoModel):
    uses_frames = True

    def __init__(self, num_labels, dim_rgb, dim_audio, rng, widths=(1, 2, 3), channels=(32, 32, 64), mixtures=8,
                 cascade_dim=0):
        super().__init__(num_labels, dim_rgb, dim_audio, cascade_dim)
        self.conv = self.add_module("conv", TemporalConv(dim_rgb + dim_audio, widths, channels, rng))
        self.head = self.make_head(self.conv.out_dim, mixtures, rng)

    def forward(self, batch):
        frames = np.concatenate([batch["rgb"], batch["audio"]], axis=-1)
        p = self.apply_head(self.head, self.conv.pooled(frames), batch)
        return p, [p]


class ChainingLSTMModel(VideoModel):
    """Chaining over LSTM representations: one encoder per stage, or one shared."""

    uses_frames = True

    def __init__(self, num_labels, dim_rgb, dim_audio, rng, stages=2, proj_dim=64, mixtures=4, cells=32, layers=2,
                 variant="vanilla", mode="single", cells_audio=0, representation="cell", shared_encoder=False):
        super().__init__(num_labels, dim_rgb, dim_audio)
        count = 1 if shared_encoder else stages
        self.encoders = [self.add_module(f"encoder{s}", _encoder(dim_rgb, dim_audio, rng, cells, layers, variant,
                                                                 mode, cells_audio, representation))
                         for s in range(count)]
        dims = [self.encoders[0].out_dim] * stages
        self.chain = self.add_module("chain", Chaining(dims, num_labels, mixtures, proj_dim, rng))

    def forward(self, batch):
        reps = [enc(batch["rgb"], batch["audio"])[0] for enc in self.encoders]
        if len(reps) == 1:
            reps = reps * self.chain.num_stages
        return self.chain(reps)


class ChainingCNNModel(VideoModel):
    uses_frames = True

    def __init__(self, num_labels, dim_rgb, dim_audio, rng, stages=4, proj_dim=64, mixtures=4, widths=(1, 2, 3),
                 channels=(16, 16, 32), shared_encoder=False):
        super().__init__(num_labels, dim_rgb, dim_audio)
        count = 1 if shared_encoder else stages
        D = dim_rgb + dim_audio
        self.convs = [self.add_module(f"conv{s}", TemporalConv(D, widths, channels, rng)) for s in range(count)]
        self.chain = self.add_module("chain", Chaining([self.convs[0].out_dim] * stages, num_labels, mixtures,
                                                       proj_dim, rng))

    def forward(self, batch):
        frames = np.concatenate([batch["rgb"], batch["audio"]], axis=-1)
        reps = [conv.pooled(frames) for conv in self.convs]
        if len(reps) == 1:
            reps = reps * self.chain.num_stages
        return self.chain(reps)


class MultiAPModel(VideoModel):
    """LSTM followed by multiple attention pooling (optionally with positional embeddings)."""

    uses_frames = True

    def __init__(self, num_labels, dim_rgb, dim_audio, rng, cells=32, layers=2, variant="vanilla", groups=8,
                 mixtures=4, positional=False, pos_dim=32, max_frames=30, consensus="max"):
        super().__init__(num_labels, dim_rgb, dim_audio)
        self.encoder = self.add_module("encoder", _encoder(dim_rgb, dim_audio, rng, cells, layers, variant,
                                                           "single", 0, "cell"))
        self.pool = self.add_module("pool", MultiAttentionPool(
            dim_rgb + dim_audio, self.encoder.output_dim, num_labels, groups, mixtures, rng,
            positional=positional, max_frames=max_frames, pos_dim=pos_dim, consensus=consensus))

    def forward(self, batch):
        _, outs = self.encoder(batch["rgb"], batch["audio"])
        x = np.concatenate([batch["rgb"], batch["audio"]], axis=-1)
        p = self.pool(x, outs)
        return p, [p]


class LocalAPModel(VideoModel):
    uses_frames = True

    def __init__(self, num_labels, dim_rgb, dim_audio, rng, cells=32, layers=2, variant="vanilla", mixtures=4,
                 representation="cell"):
        super().__init__(num_labels, dim_rgb, dim_audio)
        self.encoder = self.add_module("encoder", _encoder(dim_rgb, dim_audio, rng, cells, layers, variant,
                                                           "single", 0, representation))
        self.pool = self.add_module("pool", LocalAttentionPool(dim_rgb + dim_audio, self.encoder.out_dim,
                                                               num_labels, mixtures, rng))

    def forward(self, batch):
        rep, _ = self.encoder(batch["rgb"], batch["audio"])
        x = np.concatenate([batch["rgb"], batch["audio"]], axis=-1)
        p = self.pool(x, rep)
        return p, [p]
