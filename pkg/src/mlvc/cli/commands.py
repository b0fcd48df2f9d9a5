from __future__ import annotations

import string
import sys
from pathlib import Path

import numpy as np

from ..checkpoint import save_checkpoint
from ..ensemble.bagging import bootstrap_sample
from ..ensemble.boosting import BoostingTerminated, SampleWeights, boosting_update, kept_examples, perr_errors
from ..ensemble.predfile import read_prediction_matrix
from ..ensemble.stacking import StackerConfig, train_stacker
from ..ingest.dataset import write_shards
from ..ingest.split import PARTS
from ..ingest.synth import SynthSpec, paired_correlation, synth_generate
from ..metrics import evaluate
from ..models.base import predict
from ..models.registry import build_model
from ..train import TrainConfig, train_model
from .config import ConfigError, ExperimentConfig
from .runlog import KeyValueLog
from .runs import (DataStore, MissingInput, donor_mean, pred_path, read_run_ini, run_predictions, save_model,
                   write_predictions, write_run_ini)
from .submission import write_submission

# first shard-name character per split; the second is a digit
_SHARD_LEAD = {
    "train1": ("train", string.digits),
    "validate1": ("validatea", None),
    "train2": ("validate", "bcdefghijklmnopqrstuvwxyz"),
    "validate2": ("validate", string.digits),
    "test": ("test", string.digits),
}


def shard_names(part: str, count: int, suffix: str = ".rec") -> list[str]:
    prefix, lead = _SHARD_LEAD[part]
    if lead is None:
        alphabet = string.digits + string.ascii_lowercase
        if count > len(alphabet):
            raise ValueError(f"{part} supports at most {len(alphabet)} shards")
        return [f"{prefix}{alphabet[k]}{suffix}" for k in range(count)]
    if count > 10 * len(lead):
        raise ValueError(f"{part} supports at most {10 * len(lead)} shards")
    return [f"{prefix}{lead[k // 10]}{k % 10}{suffix}" for k in range(count)]


def _store(cfg: ExperimentConfig) -> DataStore:
    return DataStore(cfg.resolve(cfg.dataset.root), cfg.dataset.num_labels, cfg.dataset.max_frames)


def _out(cfg: ExperimentConfig) -> Path:
    out = cfg.resolve(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _train_config(cfg: ExperimentConfig, seed_offset: int = 0, lam: float = 0.0) -> TrainConfig:
    t = cfg.training
    return TrainConfig(lr=t.lr, batch_size=t.batch_size, max_steps=t.max_steps, eval_every=t.eval_every,
                       patience=t.patience, seed=t.seed + seed_offset, lam=lam, aux_share=t.aux_share)


def _run_info(cfg: ExperimentConfig, model, seed: int, donors=()) -> dict:
    d = cfg.dataset
    return {"kind": "single", "arch": model.arch, "name": cfg.model.name or model.arch, "mode": d.mode,
            "num_labels": d.num_labels, "dim_rgb": d.dim_rgb, "dim_audio": d.dim_audio, "seed": seed,
            "donors": [str(p) for p in donors]}


def _fit_single(cfg, run_dir: Path, train, valid, seed_offset=0, lam=0.0, soft=None, weights=None,
                donors=(), store=None, log=None):
    hp = dict(cfg.model.hparams)
    if donors and int(hp.get("cascade_dim", 0)) < 1:
        hp["cascade_dim"] = 128
    seed = cfg.training.seed + seed_offset
    d = cfg.dataset
    model = build_model(cfg.model.arch, d.num_labels, d.dim_rgb, d.dim_audio, seed=seed, **hp)
    if model.uses_frames and d.mode != "frame":
        raise ConfigError("dataset.mode", f"architecture {cfg.model.arch!r} needs frame-level data")
    train_donors = valid_donors = None
    if donors:
        train_donors = donor_mean(donors, "train1", store)
        valid_donors = donor_mean(donors, "validate1", store)
    result = train_model(model, train, valid, _train_config(cfg, seed_offset, lam), sample_weights=weights,
                         soft_targets=soft, donors=train_donors, valid_donors=valid_donors, log=log)
    save_model(run_dir, model, _run_info(cfg, model, seed, donors))
    return model, result


def cmd_synth(cfg: ExperimentConfig) -> None:
    s, d = cfg.synth, cfg.dataset
    sizes = {"train1": s.n_train1, "validate1": s.n_validate1, "train2": s.n_train2,
             "validate2": s.n_validate2, "test": s.n_test}
    corr = paired_correlation(d.num_labels, s.rho, s.correlated_pairs) if s.correlated_pairs else None
    spec = SynthSpec(seed=s.seed, n=sum(sizes.values()), num_labels=d.num_labels, dim_rgb=d.dim_rgb,
                     dim_audio=d.dim_audio, max_frames=d.max_frames, min_frames=s.min_frames, correlation=corr,
                     mean_labels=s.mean_labels, window=s.window, noise=s.noise, label_noise=s.label_noise)
    try:
        spec.validate()
    except ValueError as err:
        raise ConfigError("synth", str(err)) from None
    dataset, _ = synth_generate(spec)
    root = cfg.resolve(d.root)
    start = 0
    for part in PARTS:
        n = sizes[part]
        if n == 0:
            continue
        chunk = dataset.subset(np.arange(start, start + n))
        start += n
        names = shard_names(part, max(1, -(-n // s.shard_size)))
        for mode in ("video", "frame"):
            write_shards(chunk, root / mode, names, mode)
        print(f"{part}: {n} videos in {len(names)} shard(s)")


def cmd_split(cfg: ExperimentConfig) -> None:
    parts, rejects = _store(cfg).files(cfg.dataset.mode)
    for part in PARTS:
        names = " ".join(p.name for p in parts[part])
        print(f"{part}: {len(parts[part])} file(s) {names}")
    for name in rejects:
        print(f"unmatched file: {name}", file=sys.stderr)


def _train_like(cfg: ExperimentConfig, command: str, lam: float = 0.0, soft=None, donors=()) -> None:
    store, out = _store(cfg), _out(cfg)
    train = store.load("train1", cfg.dataset.mode)
    valid = store.load("validate1", cfg.dataset.mode)
    log = KeyValueLog(out / "train.log", cmd=command)
    model, result = _fit_single(cfg, out, train, valid, lam=lam, soft=soft, donors=donors, store=store, log=log)
    log(event="done", steps=result.steps, best_step=result.best_step,
        gap="nan" if result.best_gap is None else result.best_gap)
    print(f"trained {model.arch}: {result.steps} steps, best validate1 GAP {result.best_gap:.6f} "
          f"at step {result.best_step}")


def cmd_train(cfg: ExperimentConfig) -> None:
    _train_like(cfg, "train")


def cmd_distill_train(cfg: ExperimentConfig) -> None:
    if not cfg.training.soft_target:
        raise ConfigError("training.soft_target", "distill-train needs a soft-target run directory")
    donor = cfg.resolve(cfg.training.soft_target)
    path = pred_path(donor, "train1")
    if not path.exists():
        raise MissingInput(f"soft targets {path} not found (run predict with train1 in output.predict_parts)")
    soft = read_prediction_matrix(path)[0]
    _train_like(cfg, "distill-train", lam=cfg.training.lam, soft=soft)


def cmd_cascade_train(cfg: ExperimentConfig) -> None:
    if not cfg.model.donors:
        raise ConfigError("model.donors", "cascade-train needs at least one donor run directory")
    _train_like(cfg, "cascade-train", donors=[cfg.resolve(p) for p in cfg.model.donors])


def cmd_predict(cfg: ExperimentConfig) -> None:
    store, out = _store(cfg), _out(cfg)
    run, _ = read_run_ini(out)
    mode = run["feature_mode"] if run["kind"] == "stack" else run["mode"]
    for part in cfg.output.predict_parts:
        pred = run_predictions(out, part, store, reuse=False)
        labels = store.load(part, mode).labels
        gap = write_predictions(out, part, pred, labels, str(out), run.get("name", run["kind"]))
        print(f"{part}: wrote {pred_path(out, part).name}" + ("" if gap is None else f" (GAP {gap:.6f})"))


def cmd_eval(cfg: ExperimentConfig) -> None:
    store, out = _store(cfg), _out(cfg)
    log = KeyValueLog(out / "eval.log", cmd="eval")
    found = False
    for part in cfg.output.predict_parts:
        path = pred_path(out, part)
        if not path.exists():
            continue
        found = True
        pred, meta = read_prediction_matrix(path)
        labels = store.load(part, cfg.dataset.mode).labels
        report = evaluate(pred, labels)
        log(part=part, **report.as_dict())
        print(f"[{part}]\n{report.to_text()}")
    if not found:
        raise MissingInput(f"no prediction files in {out} for {cfg.output.predict_parts}")


def cmd_bag(cfg: ExperimentConfig) -> None:
    store, out = _store(cfg), _out(cfg)
    train = store.load("train1", cfg.dataset.mode)
    valid = store.load("validate1", cfg.dataset.mode)
    members = []
    for k in range(cfg.training.members):
        idx = bootstrap_sample(len(train), cfg.training.seed + k)
        member_dir = out / "members" / f"{k:02d}"
        log = KeyValueLog(out / "train.log", cmd="bag", member=k)
        _fit_single(cfg, member_dir, train.subset(idx), valid, seed_offset=k, log=log)
        members.append(member_dir)
        print(f"bagging member {k} trained")
    write_run_ini(out, {"kind": "bag", "name": cfg.model.name or f"bag_{cfg.model.arch}",
                        "mode": cfg.dataset.mode, "members": [str(m) for m in members]})


def cmd_boost(cfg: ExperimentConfig) -> None:
    store, out = _store(cfg), _out(cfg)
    t = cfg.training
    train = store.load("train1", cfg.dataset.mode)
    valid = store.load("validate1", cfg.dataset.mode)
    weights = SampleWeights.initial(len(train))
    members = []
    for k in range(t.members):
        member_dir = out / "members" / f"{k:02d}"
        log = KeyValueLog(out / "train.log", cmd="boost", member=k)
        w = weights.W
        if t.boost_drop_clipped:
            w = np.zeros_like(w)
            keep = kept_examples(weights, t.boost_clip)
            w[keep] = weights.W[keep]
        model, _ = _fit_single(cfg, member_dir, train, valid, seed_offset=k, weights=w, log=log)
        members.append(member_dir)
        err = perr_errors(predict(model, train), train.labels)
        try:
            weights = boosting_update(weights, err, t.boost_alpha, t.boost_clip)
        except BoostingTerminated as stop:
            log(event="terminated", reason=str(stop).replace(" ", "_"))
            print(f"boosting stopped after member {k}: {stop}")
            break
        log(event="reweight", mean_err=float(err.mean()), max_weight=float(weights.W.max()))
        print(f"boosting member {k} trained (mean error {err.mean():.4f})")
    write_run_ini(out, {"kind": "boost", "name": cfg.model.name or f"boost_{cfg.model.arch}",
                        "mode": cfg.dataset.mode, "members": [str(m) for m in members]})


def cmd_stack(cfg: ExperimentConfig) -> None:
    s = cfg.stack
    if not s.members:
        raise ConfigError("stack.members", "stack needs member run directories")
    store, out = _store(cfg), _out(cfg)
    members = [cfg.resolve(m) for m in s.members]

    def member_preds(part):
        return np.stack([run_predictions(m, part, store) for m in members])

    mode = cfg.dataset.mode
    train2, valid2 = store.load("train2", mode), store.load("validate2", mode)
    feats = (train2.video_features(), valid2.video_features()) if s.mode == "attention" else (None, None)
    log = KeyValueLog(out / "train.log", cmd="stack", mode=s.mode)
    stacker = train_stacker(member_preds("train2"), train2.labels, s.mode, member_preds("validate2"),
                            valid2.labels, feats[0], feats[1],
                            StackerConfig(lr=s.lr, max_steps=s.max_steps, batch_size=s.batch_size,
                                          eval_every=s.eval_every, patience=s.patience,
                                          components=s.components, rank=s.rank, seed=s.seed), log=log)
    save_checkpoint(out / "stacker.ckpt", stacker.state_dict())
    write_run_ini(out, {"kind": "stack", "name": cfg.model.name or f"stack_{s.mode}", "mode": s.mode,
                        "feature_mode": mode, "feature_dim": stacker.feature_dim, "components": stacker.K,
                        "rank": stacker.D, "members": [str(m) for m in members]})
    print(f"stacker ({s.mode}) best validate2 GAP {getattr(stacker, 'best_gap', float('nan')):.6f}")


def cmd_submit(cfg: ExperimentConfig) -> None:
    sub = cfg.submit
    path = cfg.resolve(sub.predictions) if sub.predictions else pred_path(cfg.resolve(cfg.output.dir), sub.part)
    if not path.exists():
        raise MissingInput(f"prediction file {path} not found")
    pred, _ = read_prediction_matrix(path)
    ids = _store(cfg).load(sub.part, cfg.dataset.mode).ids
    if len(ids) != pred.shape[0]:
        raise MissingInput(f"{path} has {pred.shape[0]} rows but split {sub.part!r} has {len(ids)} videos")
    target = cfg.resolve(sub.path)
    target.parent.mkdir(parents=True, exist_ok=True)
    write_submission(np.clip(pred, 0.0, 1.0), ids, target, sub.top_k)
    print(f"wrote {target}")


COMMANDS = {
    "synth": cmd_synth,
    "split": cmd_split,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "bag": cmd_bag,
    "boost": cmd_boost,
    "cascade-train": cmd_cascade_train,
    "distill-train": cmd_distill_train,
    "stack": cmd_stack,
    "submit": cmd_submit,
}
