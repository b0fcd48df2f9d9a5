"""Minibatch training with early stopping on a held-out split."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .ingest.dataset import Dataset
from .metrics import global_average_precision
from .models.base import VideoModel, predict
from .models.loss import compute_loss
from .optim import AdamState, adam_step


@dataclass
class TrainConfig:
    lr: float = 0.01
    batch_size: int = 128
    max_steps: int = 1000
    eval_every: int = 50
    patience: int = 5
    seed: int = 0
    lam: float = 0.0
    aux_share: float = 0.15
    eval_batch_size: int = 512


@dataclass
class TrainResult:
    steps: int
    best_step: int
    best_gap: float | None
    history: list[dict] = field(default_factory=list)


def _batch(dataset: Dataset, idx, donors):
    batch = dataset.batch(idx)
    if donors is not None:
        batch["donor"] = donors[idx]
    return batch


def train_model(model: VideoModel, train: Dataset, valid: Dataset | None = None,
                config: TrainConfig | None = None, sample_weights=None, soft_targets=None,
                donors=None, valid_donors=None, log=None) -> TrainResult:
    """Train ``model`` in place and restore the parameters with the best validation GAP.

    ``sample_weights`` scales each example's loss (boosting), ``soft_targets``
    are blended into the target with weight ``config.lam`` (distillation) and
    ``donors`` are the averaged donor predictions fed to a cascade head.
    Without ``valid`` the final parameters are kept.
    """
    cfg = config or TrainConfig()
    if model.uses_donors and donors is None:
        raise ValueError("cascade model needs donor predictions for training")
    if cfg.lam > 0 and soft_targets is None:
        raise ValueError("lam > 0 needs soft targets")
    rng = np.random.default_rng(cfg.seed)
    params = model.parameters()
    opt = AdamState(lr=cfg.lr)
    history: list[dict] = []

    def evaluate():
        pred = predict(model, valid, cfg.eval_batch_size, valid_donors)
        return global_average_precision(pred, valid.labels)

    best_gap = best_step = None
    best_state = model.state_dict()
    if valid is not None:
        best_gap, best_step = evaluate(), 0
        history.append({"step": 0, "gap": best_gap})
        if log:
            log(step=0, gap=best_gap)
    stale, step = 0, 0
    while step < cfg.max_steps and stale < cfg.patience:
        for idx in train.batches(cfg.batch_size, rng):
            step += 1
            model.zero_grad()
            with T.Graph() as g:
                pred, stages = model(_batch(train, idx, donors))
                loss = compute_loss(
                    pred, train.labels[idx], stages,
                    soft_target=None if soft_targets is None else soft_targets[idx],
                    lam=cfg.lam, aux_share=cfg.aux_share,
                    weights=None if sample_weights is None else sample_weights[idx])
            if not np.isfinite(loss.item()):
                raise FloatingPointError(f"training loss became {loss.item()} at step {step}")
            T.backward(g, loss)
            adam_step(opt, params)
            if valid is not None and step % cfg.eval_every == 0:
                gap = evaluate()
                history.append({"step": step, "loss": loss.item(), "gap": gap})
                if log:
                    log(step=step, loss=loss.item(), gap=gap)
                if gap > best_gap:
                    best_gap, best_step, best_state, stale = gap, step, model.state_dict(), 0
                else:
                    stale += 1
            if step >= cfg.max_steps or stale >= cfg.patience:
                break
    if valid is not None:
        model.load_state_dict(best_state)
    else:
        best_step = step
    return TrainResult(step, best_step, best_gap, history)
