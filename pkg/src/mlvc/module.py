from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .tensor import Tensor


class Module:
    """Named parameter container.  Children contribute dotted parameter names."""

    def __init__(self):
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()
        self._children: "OrderedDict[str, Module]" = OrderedDict()

    def add_param(self, name: str, values) -> Tensor:
        t = Tensor(np.array(values, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        return t

    def add_module(self, name: str, module: "Module") -> "Module":
        self._children[name] = module
        return module

    def parameters(self) -> "OrderedDict[str, Tensor]":
        out = OrderedDict(self._params)
        for cname, child in self._children.items():
            for pname, p in child.parameters().items():
                out[f"{cname}.{pname}"] = p
        return out

    def num_params(self) -> int:
        return sum(p.values.size for p in self.parameters().values())

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((k, p.values.copy()) for k, p in self.parameters().items())

    def load_state_dict(self, state) -> None:
        params = self.parameters()
        missing = [k for k in params if k not in state]
        if missing:
            raise KeyError(f"checkpoint is missing parameter {missing[0]!r}")
        extra = [k for k in state if k not in params]
        if extra:
            raise KeyError(f"checkpoint has unexpected parameter {extra[0]!r}")
        for k, p in params.items():
            v = np.asarray(state[k], dtype=np.float64)
            if v.shape != p.values.shape:
                raise ValueError(f"shape mismatch for parameter {k!r}: checkpoint {v.shape}, model {p.values.shape}")
        for k, p in params.items():
            p.values[...] = state[k]
