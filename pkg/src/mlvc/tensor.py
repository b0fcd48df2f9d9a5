"""Reverse-mode automatic differentiation over dense float64 arrays.

Operations record onto the active :class:`Graph` (entered with ``with Graph()``)
whenever one of their inputs requires a gradient.  Outside a graph context no
recording happens, which is how inference runs.
"""
from __future__ import annotations

import contextvars
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

_ACTIVE: contextvars.ContextVar["Graph | None"] = contextvars.ContextVar("graph", default=None)

NORM_EPS = 1e-12


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("values", "requires_grad", "grad", "__weakref__")
    __array_ufunc__ = None  # make numpy defer to Tensor's reflected operators

    def __init__(self, values, requires_grad: bool = False):
        arr = np.asarray(values, dtype=np.float64)
        if requires_grad and arr.base is not None:
            arr = arr.copy()
        self.values = arr
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(arr) if requires_grad else None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def numpy(self) -> np.ndarray:
        return self.values

    def item(self) -> float:
        return float(self.values.reshape(-1)[0]) if self.values.size == 1 else float("nan")

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.values)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # operator sugar
    def __add__(self, other):
        return apply("add", [self, other])

    def __radd__(self, other):
        return apply("add", [other, self])

    def __sub__(self, other):
        return apply("sub", [self, other])

    def __rsub__(self, other):
        return apply("sub", [other, self])

    def __mul__(self, other):
        return apply("mul", [self, other])

    def __rmul__(self, other):
        return apply("mul", [other, self])

    def __neg__(self):
        return apply("mul", [self, -1.0])

    def __matmul__(self, other):
        return apply("matmul", [self, other])

    def __getitem__(self, index):
        return apply("slice", [self], index=index)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return apply("reshape", [self], shape=shape)

    def transpose(self, *axes):
        return apply("transpose", [self], axes=axes or None)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


@dataclass
class Node:
    op: str
    inputs: tuple[int, ...]
    output: Tensor
    vjp: Callable[[np.ndarray], list] | None = None


@dataclass
class Graph:
    """Append-only tape.  Node ``k`` only references inputs with id ``< k``."""

    nodes: list[Node] = field(default_factory=list)
    _ids: dict[int, int] = field(default_factory=dict, repr=False)
    _token: object = field(default=None, repr=False)

    def __enter__(self) -> "Graph":
        self._token = _ACTIVE.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE.reset(self._token)

    def node_id(self, t: Tensor) -> int | None:
        return self._ids.get(id(t))

    def _leaf(self, t: Tensor) -> int:
        k = self._ids.get(id(t))
        if k is None:
            k = len(self.nodes)
            self.nodes.append(Node("leaf", (), t))
            self._ids[id(t)] = k
        return k

    def record(self, op: str, inputs: Sequence[Tensor], out: Tensor, vjp) -> None:
        ids = tuple(self._leaf(t) for t in inputs)
        self._ids[id(out)] = len(self.nodes)
        self.nodes.append(Node(op, ids, out, vjp))


def active_graph() -> Graph | None:
    return _ACTIVE.get()


# ---------------------------------------------------------------------------
# op table: forward(values, attrs) -> array ; backward(g, values, out, attrs) -> list
# ---------------------------------------------------------------------------

def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _check_broadcast(op, a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


def _fw_add(v, at):
    _check_broadcast("add", *v)
    return v[0] + v[1]


def _bw_add(g, v, out, at):
    return [_unbroadcast(g, v[0].shape), _unbroadcast(g, v[1].shape)]


def _fw_sub(v, at):
    _check_broadcast("sub", *v)
    return v[0] - v[1]


def _bw_sub(g, v, out, at):
    return [_unbroadcast(g, v[0].shape), -_unbroadcast(g, v[1].shape)]


def _fw_mul(v, at):
    _check_broadcast("mul", *v)
    return v[0] * v[1]


def _bw_mul(g, v, out, at):
    return [_unbroadcast(g * v[1], v[0].shape), _unbroadcast(g * v[0], v[1].shape)]


def _fw_bias(v, at):
    x, b = v
    if b.ndim != 1 or x.shape[-1] != b.shape[0]:
        raise ShapeError(f"broadcast-add-bias: incompatible shapes {x.shape} and {b.shape}")
    return x + b


def _bw_bias(g, v, out, at):
    return [g, g.reshape(-1, g.shape[-1]).sum(axis=0)]


def _fw_matmul(v, at):
    a, b = v
    if a.ndim < 1 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    return a @ b


def _bw_matmul(g, v, out, at):
    a, b = v
    if a.ndim == 1:
        if b.ndim != 2:
            raise ShapeError(f"matmul: vector-matrix product needs a 2-D right side, got {b.shape}")
        return [b @ g, np.outer(a, g)]
    ga = g @ np.swapaxes(b, -1, -2)
    gb = np.swapaxes(a, -1, -2) @ g
    return [_unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)]


def _fw_concat(v, at):
    axis = at.get("axis", -1)
    try:
        return np.concatenate(v, axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[x.shape for x in v]} on axis {axis}") from None


def _bw_concat(g, v, out, at):
    axis = at.get("axis", -1)
    sizes = [x.shape[axis] for x in v]
    return np.split(g, np.cumsum(sizes)[:-1], axis=axis)


def _sigmoid(x):
    # tanh form: overflow-free and a single transcendental call
    out = np.tanh(0.5 * x)
    out += 1.0
    out *= 0.5
    return out


def _bw_sigmoid(g, v, out, at):
    return [g * out * (1.0 - out)]


def _bw_tanh(g, v, out, at):
    return [g * (1.0 - out * out)]


def _bw_relu(g, v, out, at):
    return [g * (v[0] > 0)]


def _check_axis(op, x, axis):
    if x.ndim == 0 or x.shape[axis] == 0:
        raise ShapeError(f"{op}: empty axis {axis} for shape {x.shape}")


def _fw_softmax(v, at):
    x, axis = v[0], at.get("axis", -1)
    _check_axis("softmax", x, axis)
    z = np.exp(x - x.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def _bw_softmax(g, v, out, at):
    axis = at.get("axis", -1)
    return [out * (g - (g * out).sum(axis=axis, keepdims=True))]


def _fw_l2(v, at):
    x, axis = v[0], at.get("axis", -1)
    _check_axis("l2-normalize", x, axis)
    n = np.sqrt((x * x).sum(axis=axis, keepdims=True))
    return x / np.maximum(n, NORM_EPS)


def _bw_l2(g, v, out, at):
    x, axis = v[0], at.get("axis", -1)
    n = np.sqrt((x * x).sum(axis=axis, keepdims=True))
    live = n > NORM_EPS
    d = np.maximum(n, NORM_EPS)
    proj = (g * out).sum(axis=axis, keepdims=True)
    return [np.where(live, (g - out * proj) / d, g / NORM_EPS)]


def _fw_mean(v, at):
    return v[0].mean(axis=at.get("axis"), keepdims=at.get("keepdims", False))


def _expand_reduced(g, x, axis, keepdims):
    if axis is None:
        return np.broadcast_to(g, x.shape)
    if not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, x.shape)


def _bw_mean(g, v, out, at):
    x, axis = v[0], at.get("axis")
    n = x.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return [_expand_reduced(g, x, axis, at.get("keepdims", False)) / n]


def _fw_sum(v, at):
    return v[0].sum(axis=at.get("axis"), keepdims=at.get("keepdims", False))


def _bw_sum(g, v, out, at):
    return [np.array(_expand_reduced(g, v[0], at.get("axis"), at.get("keepdims", False)))]


def _fw_max(v, at):
    x, axis = v[0], at.get("axis", -1)
    _check_axis("max", x, axis)
    return x.max(axis=axis, keepdims=at.get("keepdims", False))


def _bw_max(g, v, out, at):
    x, axis, keep = v[0], at.get("axis", -1), at.get("keepdims", False)
    o = out if keep else np.expand_dims(out, axis)
    mask = (x == o).astype(np.float64)
    mask /= mask.sum(axis=axis, keepdims=True)
    return [mask * _expand_reduced(g, x, axis, keep)]


def _fw_slice(v, at):
    return v[0][at["index"]]


def _basic_index(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(i is None or i is Ellipsis or isinstance(i, (slice, int, np.integer)) for i in items)


def _bw_slice(g, v, out, at):
    gx = np.zeros_like(v[0])
    if _basic_index(at["index"]):
        gx[at["index"]] = g
    else:
        np.add.at(gx, at["index"], g)
    return [gx]


def _fw_reshape(v, at):
    try:
        return v[0].reshape(at["shape"])
    except ValueError:
        raise ShapeError(f"reshape: cannot reshape {v[0].shape} into {at['shape']}") from None


def _bw_reshape(g, v, out, at):
    return [g.reshape(v[0].shape)]


def _fw_transpose(v, at):
    return np.transpose(v[0], at.get("axes"))


def _bw_transpose(g, v, out, at):
    axes = at.get("axes")
    inv = None if axes is None else np.argsort(axes)
    return [np.transpose(g, inv)]


def _fw_embed(v, at):
    table = v[0]
    idx = np.asarray(at["indices"])
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeError(f"embedding-lookup: indices out of range for table {table.shape}")
    return table[idx]


def _bw_embed(g, v, out, at):
    gt = np.zeros_like(v[0])
    np.add.at(gt, np.asarray(at["indices"]), g)
    return [gt]


def _fw_clip(v, at):
    return np.clip(v[0], at["lo"], at["hi"])


def _bw_clip(g, v, out, at):
    x = v[0]
    return [g * ((x >= at["lo"]) & (x <= at["hi"]))]


def _bw_log(g, v, out, at):
    return [g / v[0]]


def _bw_exp(g, v, out, at):
    return [g * out]


def _fw_xent_logits(v, at):
    z, t = v
    if z.shape != t.shape:
        raise ShapeError(f"cross-entropy-with-logits: incompatible shapes {z.shape} and {t.shape}")
    # max(z,0) - z*t + log(1+exp(-|z|))
    return np.maximum(z, 0) - z * t + np.log1p(np.exp(-np.abs(z)))


def _bw_xent_logits(g, v, out, at):
    z, t = v
    return [g * (_sigmoid(z) - t), -g * z]


_OPS: dict[str, tuple[Callable, Callable]] = {
    "add": (_fw_add, _bw_add),
    "sub": (_fw_sub, _bw_sub),
    "mul": (_fw_mul, _bw_mul),
    "broadcast-add-bias": (_fw_bias, _bw_bias),
    "matmul": (_fw_matmul, _bw_matmul),
    "concat": (_fw_concat, _bw_concat),
    "sigmoid": (lambda v, at: _sigmoid(v[0]), _bw_sigmoid),
    "tanh": (lambda v, at: np.tanh(v[0]), _bw_tanh),
    "relu": (lambda v, at: np.maximum(v[0], 0.0), _bw_relu),
    "softmax": (_fw_softmax, _bw_softmax),
    "l2-normalize": (_fw_l2, _bw_l2),
    "mean": (_fw_mean, _bw_mean),
    "sum": (_fw_sum, _bw_sum),
    "max": (_fw_max, _bw_max),
    "slice": (_fw_slice, _bw_slice),
    "reshape": (_fw_reshape, _bw_reshape),
    "transpose": (_fw_transpose, _bw_transpose),
    "embedding-lookup": (_fw_embed, _bw_embed),
    "clip": (_fw_clip, _bw_clip),
    "log": (lambda v, at: np.log(v[0]), _bw_log),
    "exp": (lambda v, at: np.exp(v[0]), _bw_exp),
    "cross-entropy-with-logits": (_fw_xent_logits, _bw_xent_logits),
}

OP_KINDS = tuple(_OPS)


def apply(op_kind: str, inputs: Sequence, **attrs) -> Tensor:
    """Run ``op_kind`` forward; record it on the active graph if needed."""
    try:
        fw, bw = _OPS[op_kind]
    except KeyError:
        raise ValueError(f"unknown op kind {op_kind!r}") from None
    ts = [as_tensor(x) for x in inputs]
    vals = [t.values for t in ts]
    out_val = np.asarray(fw(vals, attrs), dtype=np.float64)
    graph = _ACTIVE.get()
    needs = graph is not None and any(t.requires_grad for t in ts)
    out = Tensor.__new__(Tensor)
    out.values = out_val
    out.requires_grad = needs
    out.grad = None
    if needs:
        graph.record(op_kind, ts, out, lambda g: bw(g, vals, out_val, attrs))
    return out


def backward(graph: Graph, loss: Tensor) -> None:
    """Accumulate d(loss)/d(t) into ``t.grad`` for every grad-requiring tensor of ``graph``."""
    if loss.values.size != 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.shape}")
    root = graph.node_id(loss)
    if root is None:
        _fill_missing_grads(graph)
        return
    grads: dict[int, np.ndarray] = {root: np.ones_like(loss.values)}
    for k in range(root, -1, -1):
        g = grads.pop(k, None)
        if g is None:
            continue
        node = graph.nodes[k]
        node.output.grad = g if node.output.grad is None else node.output.grad + g
        if node.vjp is None:
            continue
        for i, gi in zip(node.inputs, node.vjp(g)):
            if gi is None or not graph.nodes[i].output.requires_grad:
                continue
            gi = np.asarray(gi, dtype=np.float64)
            grads[i] = grads[i] + gi if i in grads else gi
    _fill_missing_grads(graph)


def _fill_missing_grads(graph: Graph) -> None:
    for node in graph.nodes:
        t = node.output
        if t.requires_grad and t.grad is None:
            t.grad = np.zeros_like(t.values)


# ---------------------------------------------------------------------------
# functional helpers
# ---------------------------------------------------------------------------

def matmul(a, b):
    return apply("matmul", [a, b])


def add_bias(x, b):
    return apply("broadcast-add-bias", [x, b])


def concat(xs, axis=-1):
    return apply("concat", list(xs), axis=axis)


def sigmoid(x):
    return apply("sigmoid", [x])


def tanh(x):
    return apply("tanh", [x])


def relu(x):
    return apply("relu", [x])


def softmax(x, axis=-1):
    return apply("softmax", [x], axis=axis)


def l2_normalize(x, axis=-1):
    return apply("l2-normalize", [x], axis=axis)


def mean(x, axis=None, keepdims=False):
    return apply("mean", [x], axis=axis, keepdims=keepdims)


def sum_(x, axis=None, keepdims=False):
    return apply("sum", [x], axis=axis, keepdims=keepdims)


def max_(x, axis=-1, keepdims=False):
    return apply("max", [x], axis=axis, keepdims=keepdims)


def embedding(table, indices):
    return apply("embedding-lookup", [table], indices=np.asarray(indices))


def clip(x, lo, hi):
    return apply("clip", [x], lo=lo, hi=hi)


def log(x):
    return apply("log", [x])


def exp(x):
    return apply("exp", [x])


def xent_with_logits(logits, targets):
    return apply("cross-entropy-with-logits", [logits, targets])


# ---------------------------------------------------------------------------
# gradient check
# ---------------------------------------------------------------------------

def grad_check(f: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-5,
               max_entries: int | None = None, seed: int = 0) -> float:
    """Max over parameter entries of |analytic - central difference| / max(1, |analytic|).

    ``f`` must build the scalar loss from ``params`` on each call.  With
    ``max_entries`` only a random subset of entries per parameter is probed.
    """
    for p in params:
        p.zero_grad()
    with Graph() as g:
        loss = f()
    backward(g, loss)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in params:
        analytic = p.grad.copy()
        flat = p.values.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = rng.choice(flat.size, max_entries, replace=False)
        for i in idx:
            old = flat[i]
            flat[i] = old + h
            lp = f().item()
            flat[i] = old - h
            lm = f().item()
            flat[i] = old
            num = (lp - lm) / (2 * h)
            a = analytic.reshape(-1)[i]
            worst = max(worst, abs(a - num) / max(1.0, abs(a)))
    return worst


# ---------------------------------------------------------------------------
# parameter initialisation
# ---------------------------------------------------------------------------

def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


def stack(xs, axis=1):
    """Stack equally shaped tensors along a new ``axis``."""
    xs = [as_tensor(x) for x in xs]
    shape = list(xs[0].shape)
    ax = axis if axis >= 0 else len(shape) + 1 + axis
    new = tuple(shape[:ax] + [1] + shape[ax:])
    return concat([x.reshape(new) for x in xs], axis=ax)
