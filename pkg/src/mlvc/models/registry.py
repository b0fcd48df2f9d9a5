"""Architecture registry.  Each entry lists its hyperparameters with defaults;
config values are coerced to the default's type."""
from __future__ import annotations

import inspect

import numpy as np

from .base import VideoModel
from .multiscale import CnnLSTMModel, MultiResolutionModel, PoolLSTMModel, SegmentLSTMModel
from .zoo import (ChainingCNNModel, ChainingLSTMModel, ChainingMoEModel, CNNModel, LocalAPModel, LogisticModel,
                  LSTMModel, MeanPoolModel, MoEModel, MultiAPModel)

ARCHITECTURES: dict[str, type[VideoModel]] = {
    "logistic": LogisticModel,
    "moe": MoEModel,
    "dbof": MeanPoolModel,
    "chaining_moe": ChainingMoEModel,
    "lstm": LSTMModel,
    "cnn": CNNModel,
    "chaining_lstm": ChainingLSTMModel,
    "chaining_cnn": ChainingCNNModel,
    "multiap": MultiAPModel,
    "local_ap": LocalAPModel,
    "segment_lstm": SegmentLSTMModel,
    "pool_lstm": PoolLSTMModel,
    "multires_lstm": MultiResolutionModel,
    "cnn_lstm": CnnLSTMModel,
}


def hyperparameters(arch: str) -> dict[str, object]:
    cls = ARCHITECTURES[arch]
    sig = inspect.signature(cls.__init__)
    skip = {"self", "num_labels", "dim_rgb", "dim_audio", "rng"}
    return {k: p.default for k, p in sig.parameters.items() if k not in skip}


def _coerce(value, default):
    if not isinstance(value, str):
        return value
    v = value.strip()
    if isinstance(default, bool):
        if v.lower() in ("1", "true", "yes", "on"):
            return True
        if v.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if isinstance(default, int):
        return int(v)
    if isinstance(default, float):
        return float(v)
    if isinstance(default, tuple):
        return tuple(int(x) for x in v.replace(",", " ").split())
    return v


def resolve_hparams(arch: str, overrides: dict) -> dict:
    if arch not in ARCHITECTURES:
        raise KeyError(f"unknown architecture {arch!r}; choose from {sorted(ARCHITECTURES)}")
    hp = hyperparameters(arch)
    for key, value in overrides.items():
        if key not in hp:
            raise KeyError(f"architecture {arch!r} has no hyperparameter {key!r}")
        hp[key] = _coerce(value, hp[key])
    return hp


def build_model(arch: str, num_labels: int, dim_rgb: int, dim_audio: int, seed: int = 0,
                **overrides) -> VideoModel:
    hp = resolve_hparams(arch, overrides)
    model = ARCHITECTURES[arch](num_labels, dim_rgb, dim_audio, np.random.default_rng(seed), **hp)
    model.arch, model.hparams = arch, hp
    return model
