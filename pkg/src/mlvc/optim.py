"""Adam with bias correction, operating in place on :class:`Tensor` parameters."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .tensor import Tensor


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, params: Mapping[str, Tensor], grads: Mapping[str, np.ndarray] | None = None) -> None:
    """Update ``params`` in place.  ``grads`` defaults to each parameter's ``.grad``."""
    if grads is None:
        grads = {k: p.grad for k, p in params.items()}
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.values.shape:
            raise ValueError(f"adam: gradient for {name!r} has shape {g.shape}, parameter {p.values.shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"adam: non-finite gradient for parameter {name!r}")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = grads[name]
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.values)
            state.v[name] = np.zeros_like(p.values)
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.values -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
