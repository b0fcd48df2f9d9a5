"""Stacking of frozen member predictions.

Every mode produces per-(example, label) weights on the model simplex and
shares one combination kernel.  The kernel anchors at the first member,
``p_1 + sum_m w_m (p_m - p_1)``, which is algebraically the convex combination
``sum_m w_m p_m`` but returns the members' value exactly when they agree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import tensor as T
from ..metrics import global_average_precision
from ..models.loss import cross_entropy
from ..module import Module
from ..optim import AdamState, adam_step

STACK_MODES = ("simple", "linear", "classwise", "attention")


class StackingDiverged(FloatingPointError):
    pass


def _as_members(predictions) -> np.ndarray:
    """(M, N, L) member predictions -> (N, M, L)."""
    P = np.asarray(predictions, dtype=np.float64)
    if P.ndim != 3:
        raise T.ShapeError(f"stacking: expected (M, N, L) predictions, got shape {P.shape}")
    if P.shape[0] == 0:
        raise ValueError("stacking needs at least one member model")
    return np.ascontiguousarray(P.transpose(1, 0, 2))


def combine(weights, members: np.ndarray) -> T.Tensor:
    """Weighted combination of (N, M, L) ``members`` with weights broadcastable to it."""
    anchor = members[:, 0, :]
    diff = members - members[:, :1, :]
    w = T.as_tensor(weights)
    if tuple(w.shape) != members.shape:
        w = w + np.zeros(members.shape)
    return T.clip(anchor + T.sum_(w * diff, axis=1), 0.0, 1.0)


class Stacker(Module):
    """Stacking parameters for one of :data:`STACK_MODES`.

    ``feature_dim`` (size of the averaged input features) and the mixture
    sizes ``components`` / ``rank`` only matter for the attention mode.
    """

    def __init__(self, mode: str, num_models: int, num_labels: int, rng: np.random.Generator | None = None,
                 feature_dim: int = 0, components: int = 16, rank: int = 4):
        super().__init__()
        if mode not in STACK_MODES:
            raise ValueError(f"unknown stacking mode {mode!r}; choose from {STACK_MODES}")
        if num_models < 1:
            raise ValueError("stacking needs at least one member model")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.mode, self.M, self.L = mode, num_models, num_labels
        self.feature_dim, self.K, self.D = feature_dim, components, rank
        M, L, K, D = num_models, num_labels, components, rank
        if mode == "linear":
            self.logits = self.add_param("logits", np.zeros(M))
        elif mode == "classwise":
            self.logits = self.add_param("logits", np.zeros((M, L)))
        elif mode == "attention":
            # B, b and c start at zero so every component's weight matrix is zero
            # and training starts from the plain average
            self.V = self.add_param("V", T.glorot(rng, feature_dim + L, K))
            self.v_bias = self.add_param("v_bias", np.zeros(K))
            self.A = self.add_param("A", 0.1 * rng.standard_normal((K, D, M)))
            self.B = self.add_param("B", np.zeros((K, D, L)))
            self.a = self.add_param("a", 0.1 * rng.standard_normal((K, M)))
            self.b = self.add_param("b", np.zeros((K, L)))
            self.c = self.add_param("c", np.zeros(K))

    def component_matrices(self) -> T.Tensor:
        """(K, M, L): A_k^T B_k + a_k b_k^T + c_k."""
        K, M, L = self.K, self.M, self.L
        low_rank = T.matmul(self.A.transpose(0, 2, 1), self.B)
        outer = self.a.reshape(K, M, 1) * self.b.reshape(K, 1, L)
        return low_rank + outer + self.c.reshape(K, 1, 1)

    def attention(self, members: np.ndarray, features: np.ndarray) -> T.Tensor:
        """(N, K) softmax attention over components from [mean features; mean prediction]."""
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape != (members.shape[0], self.feature_dim):
            raise T.ShapeError(f"attention stacking: features of shape {features.shape}, "
                               f"expected {(members.shape[0], self.feature_dim)}")
        h = np.concatenate([features, members.mean(axis=1)], axis=1)
        return T.softmax(T.add_bias(T.matmul(h, self.V), self.v_bias), axis=-1)

    def weights(self, members: np.ndarray, features=None) -> T.Tensor:
        """Model weights broadcastable to (N, M, L); each label's weights sum to one over models."""
        N, M, L = members.shape
        if (M, L) != (self.M, self.L):
            raise T.ShapeError(f"stacking: members have (M, L) = {(M, L)}, stacker expects {(self.M, self.L)}")
        if self.mode == "simple":
            return T.softmax(T.Tensor(np.zeros((M, L))), axis=0)
        if self.mode == "linear":
            return T.softmax(self.logits, axis=0).reshape(M, 1)
        if self.mode == "classwise":
            return T.softmax(self.logits, axis=0)
        if features is None:
            raise ValueError("attention stacking needs mean input features")
        alpha = self.attention(members, features)
        e = T.matmul(alpha, self.component_matrices().reshape(self.K, M * L)).reshape(N, M, L)
        return T.softmax(e, axis=1)

    def forward_members(self, members: np.ndarray, features=None) -> T.Tensor:
        return combine(self.weights(members, features), members)

    def __call__(self, predictions, features=None) -> T.Tensor:
        return self.forward_members(_as_members(predictions), features)


def stack_combine(predictions, params: Stacker, mode: str | None = None) -> np.ndarray:
    """Combine (M, N, L) predictions with a simple, linear or class-wise stacker."""
    mode = mode or params.mode
    if mode != params.mode:
        raise ValueError(f"stacker was built for mode {params.mode!r}, asked for {mode!r}")
    if mode == "attention":
        raise ValueError("attention stacking needs features; use attention_stack_forward")
    return params(predictions).values


def attention_stack_forward(predictions, features, params: Stacker) -> np.ndarray:
    if params.mode != "attention":
        raise ValueError(f"stacker mode is {params.mode!r}, not 'attention'")
    return params(predictions, features).values


def simple_average(predictions) -> np.ndarray:
    members = _as_members(predictions)
    return stack_combine(predictions, Stacker("simple", members.shape[1], members.shape[2]))


@dataclass
class StackerConfig:
    lr: float = 0.01
    max_steps: int = 400
    batch_size: int = 512
    eval_every: int = 10
    patience: int = 10
    components: int = 16
    rank: int = 4
    seed: int = 0


def train_stacker(predictions, labels, mode: str, valid_predictions, valid_labels,
                  features=None, valid_features=None, config: StackerConfig | None = None,
                  log=None) -> Stacker:
    """Fit a stacker by Adam on cross-entropy; keep the parameters with the best validation GAP.

    The untrained parameters (uniform weights) count as a candidate, so the
    result never validates below the simple average.
    """
    cfg = config or StackerConfig()
    members = _as_members(predictions)
    valid_members = _as_members(valid_predictions)
    labels = np.asarray(labels, dtype=np.float64)
    valid_labels = np.asarray(valid_labels, dtype=np.float64)
    N, M, L = members.shape
    if labels.shape != (N, L):
        raise T.ShapeError(f"stacking labels have shape {labels.shape}, expected {(N, L)}")
    rng = np.random.default_rng(cfg.seed)
    fdim = 0 if features is None else np.asarray(features).shape[1]
    stacker = Stacker(mode, M, L, rng, feature_dim=fdim, components=cfg.components, rank=cfg.rank)
    params = stacker.parameters()

    def score():
        return global_average_precision(stacker.forward_members(valid_members, valid_features).values, valid_labels)

    best_gap, best_state, stale = score(), stacker.state_dict(), 0
    stacker.best_gap = best_gap
    if not params:
        return stacker
    if log:
        log(step=0, gap=best_gap)
    opt = AdamState(lr=cfg.lr)
    step = 0
    while step < cfg.max_steps and stale < cfg.patience:
        for idx in np.array_split(rng.permutation(N), max(1, N // cfg.batch_size)):
            step += 1
            stacker.zero_grad()
            with T.Graph() as g:
                feats = None if features is None else np.asarray(features)[idx]
                loss = T.mean(cross_entropy(stacker.forward_members(members[idx], feats), labels[idx]))
            if not np.isfinite(loss.item()):
                raise StackingDiverged(f"stacker loss became {loss.item()} at step {step}")
            T.backward(g, loss)
            adam_step(opt, params)
            if step % cfg.eval_every == 0:
                gap = score()
                if log:
                    log(step=step, loss=loss.item(), gap=gap)
                if gap > best_gap:
                    best_gap, best_state, stale = gap, stacker.state_dict(), 0
                else:
                    stale += 1
            if step >= cfg.max_steps or stale >= cfg.patience:
                break
    stacker.load_state_dict(best_state)
    stacker.best_gap = best_gap
    return stacker
