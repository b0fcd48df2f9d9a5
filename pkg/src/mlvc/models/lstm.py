"""LSTM cells (vanilla, shared-gate S, input-accumulator A) and sequence encoders."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .. import tensor as T
from ..module import Module

VARIANTS = ("vanilla", "S", "A")
MODES = ("single", "parallel", "bidirectional-first")


class LSTMState(NamedTuple):
    h: T.Tensor
    c: T.Tensor
    acc: T.Tensor | None = None   # input accumulator memory c' (variant A)
    d: T.Tensor | None = None     # normalised accumulator n(c') (variant A)


class LSTMCell(Module):
    """One recurrent layer.

    Gate layout of the pre-activations: ``[o | m | i | f]`` with N entries each
    (vanilla); ``[o | m | i | f]`` with scalar i and f (S); and
    ``[o | m | i | f | i' | f']`` with the accumulator gates of width M (A).
    """

    def __init__(self, input_dim: int, cells: int, variant: str, rng: np.random.Generator):
        super().__init__()
        if variant not in VARIANTS:
            raise ValueError(f"unknown LSTM variant {variant!r}")
        self.input_dim, self.cells, self.variant = input_dim, cells, variant
        N, M = cells, input_dim
        if variant == "vanilla":
            out, rec, forget = 4 * N, N, [slice(3 * N, 4 * N)]
        elif variant == "S":
            out, rec, forget = 2 * N + 2, N, [slice(2 * N + 1, 2 * N + 2)]
        else:
            out, rec, forget = 4 * N + 2 * M, N + M, [slice(3 * N, 4 * N), slice(4 * N + M, 4 * N + 2 * M)]
        fan_in = M + rec
        self.wx = self.add_param("wx", T.glorot(rng, fan_in, out, shape=(M, out)))
        self.wh = self.add_param("wh", T.glorot(rng, fan_in, out, shape=(rec, out)))
        b = np.zeros(out)
        for s in forget:
            b[s] = 1.0
        self.b = self.add_param("b", b)

    def zero_state(self, batch: int) -> LSTMState:
        z = T.Tensor(np.zeros((batch, self.cells)))
        if self.variant == "A":
            za = T.Tensor(np.zeros((batch, self.input_dim)))
            return LSTMState(z, z, za, za)
        return LSTMState(z, z)

    def step(self, state: LSTMState, x, trace: list | None = None) -> LSTMState:
        N, M = self.cells, self.input_dim
        if x.shape[-1] != M:
            raise T.ShapeError(f"lstm_step: input dim {x.shape[-1]} != {M}")
        if state.h.shape[-1] != N:
            raise T.ShapeError(f"lstm_step: state dim {state.h.shape[-1]} != {N}")
        rec = state.h if self.variant != "A" else T.concat([state.h, state.d], axis=-1)
        z = T.add_bias(T.matmul(x, self.wx) + T.matmul(rec, self.wh), self.b)
        o, m = z[:, :N], z[:, N:2 * N]
        if self.variant == "S":
            i, f = z[:, 2 * N:2 * N + 1], z[:, 2 * N + 1:2 * N + 2]
        else:
            i, f = z[:, 2 * N:3 * N], z[:, 3 * N:4 * N]
        gi, gf = T.sigmoid(i), T.sigmoid(f)
        c = gf * state.c + gi * T.tanh(m)
        h = T.sigmoid(o) * T.tanh(c)
        if trace is not None:
            trace.append({"i": gi.values, "f": gf.values})
        if self.variant != "A":
            return LSTMState(h, c)
        ia, fa = z[:, 4 * N:4 * N + M], z[:, 4 * N + M:]
        acc = T.sigmoid(fa) * state.acc + T.sigmoid(ia) * x
        return LSTMState(h, c, acc, T.l2_normalize(acc, axis=-1))


def lstm_step(cell: LSTMCell, state: LSTMState, x, trace: list | None = None) -> LSTMState:
    return cell.step(state, T.as_tensor(x), trace)


def as_steps(inputs) -> list:
    """Per-time-step inputs from a (B, T, D) array/tensor or an existing list."""
    if isinstance(inputs, list):
        return inputs
    if isinstance(inputs, T.Tensor):
        return [inputs[:, t, :] for t in range(inputs.shape[1])]
    arr = np.asarray(inputs, dtype=np.float64)
    return [T.Tensor(arr[:, t, :]) for t in range(arr.shape[1])]


def run_cell(cell: LSTMCell, steps: list, state: LSTMState | None = None, reverse: bool = False):
    """Returns (outputs h_t in time order, final state)."""
    if not steps:
        raise ValueError("cannot encode an empty sequence")
    state = state or cell.zero_state(steps[0].shape[0])
    outs = []
    order = range(len(steps) - 1, -1, -1) if reverse else range(len(steps))
    for t in order:
        state = cell.step(state, steps[t])
        outs.append(state.h)
    if reverse:
        outs.reverse()
    return outs, state


class StackedLSTM(Module):
    """Multi-layer LSTM; optionally bidirectional in its first layer."""

    def __init__(self, input_dim: int, cells: int, rng: np.random.Generator, layers: int = 1,
                 variant: str = "vanilla", bidirectional_first: bool = False, representation: str = "cell"):
        super().__init__()
        if layers < 1:
            raise ValueError("layers must be >= 1")
        if representation not in ("cell", "output"):
            raise ValueError(f"unknown representation {representation!r}")
        self.cells, self.layers_n, self.bidir = cells, layers, bidirectional_first
        self.representation = representation
        self.layers = []
        dim = input_dim
        for k in range(layers):
            self.layers.append(self.add_module(f"l{k}", LSTMCell(dim, cells, variant, rng)))
            if k == 0 and bidirectional_first:
                self.backward_cell = self.add_module("l0_bwd", LSTMCell(dim, cells, variant, rng))
                dim = 2 * cells
            else:
                dim = cells

    @property
    def out_dim(self) -> int:
        return 2 * self.cells if (self.bidir and self.layers_n == 1) else self.cells

    @property
    def output_dim(self) -> int:
        return self.out_dim

    def __call__(self, inputs, state: LSTMState | None = None):
        """Returns (representation, top-layer outputs per step, top-layer final state)."""
        steps = as_steps(inputs)
        if not steps:
            raise ValueError("cannot encode an empty sequence")
        final = None
        for k, cell in enumerate(self.layers):
            outs, final = run_cell(cell, steps, state if k == 0 else None)
            if k == 0 and self.bidir:
                bouts, bfinal = run_cell(self.backward_cell, steps, reverse=True)
                outs = [T.concat([a, b], axis=-1) for a, b in zip(outs, bouts)]
                if self.layers_n == 1:
                    pick = (lambda s: s.c) if self.representation == "cell" else (lambda s: s.h)
                    return T.concat([pick(final), pick(bfinal)], axis=-1), outs, final
            steps = outs
        rep = final.c if self.representation == "cell" else final.h
        return rep, steps, final


class SequenceEncoder(Module):
    """single: one LSTM over [rgb; audio]; parallel: separate rgb and audio LSTMs;
    bidirectional-first: as single with a bidirectional first layer."""

    def __init__(self, dim_rgb: int, dim_audio: int, cells: int, rng: np.random.Generator, layers: int = 1,
                 variant: str = "vanilla", mode: str = "single", cells_audio: int | None = None,
                 representation: str = "cell"):
        super().__init__()
        if mode not in MODES:
            raise ValueError(f"unknown encoder mode {mode!r}")
        self.mode = mode
        if mode == "parallel":
            self.video = self.add_module("video", StackedLSTM(dim_rgb, cells, rng, layers, variant,
                                                              representation=representation))
            self.audio = self.add_module("audio", StackedLSTM(dim_audio, cells_audio or cells, rng, layers, variant,
                                                              representation=representation))
        else:
            self.lstm = self.add_module("lstm", StackedLSTM(dim_rgb + dim_audio, cells, rng, layers, variant,
                                                            bidirectional_first=(mode == "bidirectional-first"),
                                                            representation=representation))

    @property
    def out_dim(self) -> int:
        if self.mode == "parallel":
            return self.video.out_dim + self.audio.out_dim
        return self.lstm.out_dim

    @property
    def output_dim(self) -> int:
        if self.mode == "parallel":
            return self.video.output_dim + self.audio.output_dim
        return self.lstm.cells * (2 if self.lstm.bidir and self.lstm.layers_n == 1 else 1)

    def __call__(self, rgb, audio):
        """Returns (representation, per-step outputs)."""
        if rgb.shape[1] == 0:
            raise ValueError("cannot encode an empty sequence")
        if self.mode == "parallel":
            rv, ov, _ = self.video(rgb)
            ra, oa, _ = self.audio(audio)
            return T.concat([rv, ra], axis=-1), [T.concat([a, b], axis=-1) for a, b in zip(ov, oa)]
        frames = _join(rgb, audio)
        rep, outs, _ = self.lstm(frames)
        return rep, outs


def _join(rgb, audio):
    if isinstance(rgb, T.Tensor) or isinstance(audio, T.Tensor):
        return T.concat([rgb, audio], axis=-1)
    return np.concatenate([rgb, audio], axis=-1)


def encode_sequence(rgb, audio, encoder: SequenceEncoder):
    return encoder(rgb, audio)[0]
