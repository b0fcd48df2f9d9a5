"""Directional experiments on synthetic data.

Each ``run_*`` function trains a baseline and a candidate on the same
generated corpus for one seed and returns a :class:`Comparison`.  The
``scripts/`` directory drives them over several seeds; the acceptance
suite asserts on the aggregated outcome.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .ensemble import StackerConfig, simple_average, train_stacker
from .ingest import Dataset, SynthSpec, paired_correlation, synth_generate
from .metrics import global_average_precision
from .models import build_model, matched_mixtures, predict
from .train import TrainConfig, train_model


@dataclass
class Comparison:
    seed: int
    scores: dict[str, float]
    baseline: str
    candidate: str
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def delta(self) -> float:
        return self.scores[self.candidate] - self.scores[self.baseline]


@dataclass
class Summary:
    wins: int
    seeds: int
    mean_delta: float
    deltas: list[float]

    def line(self, name: str) -> str:
        shown = " ".join(f"{d:+.4f}" for d in self.deltas)
        return f"{name}: wins {self.wins}/{self.seeds}, mean delta {self.mean_delta:+.4f} [{shown}]"


def summarize(results: list[Comparison], margin: float = 0.0) -> Summary:
    """A seed counts as a win when ``delta > margin`` (``margin`` may be negative to allow ties)."""
    deltas = [r.delta for r in results]
    return Summary(sum(d > margin for d in deltas), len(deltas), float(np.mean(deltas)), deltas)


def _split(data: Dataset, sizes: list[int]) -> list[Dataset]:
    out, start = [], 0
    for n in sizes:
        out.append(data.subset(np.arange(start, start + n)))
        start += n
    return out


def _gap(model, data: Dataset) -> float:
    return global_average_precision(predict(model, data), data.labels)


# ---------------------------------------------------------------------------
# label correlation: chaining vs a flat MoE of equal size
# ---------------------------------------------------------------------------

@dataclass
class ChainingSetup:
    num_train: int = 1000
    num_valid: int = 1000
    num_test: int = 1000
    num_labels: int = 25
    dim_rgb: int = 32
    dim_audio: int = 8
    rho: float = 0.9
    stages: int = 8
    proj_dim: int = 128
    mixtures: int = 2
    chain_lr: float = 0.003
    flat_lr: float = 0.01
    batch_size: int = 256
    max_steps: int = 2000
    eval_every: int = 50
    patience: int = 5


def chaining_corpus(seed: int, setup: ChainingSetup) -> list[Dataset]:
    """Correlated pairs tie a frequent label to a rare one; the rare member has no
    evidence of its own, so it is only predictable through its partner."""
    s = setup
    spec = SynthSpec(seed=seed, n=s.num_train + s.num_valid + s.num_test, num_labels=s.num_labels,
                     dim_rgb=s.dim_rgb, dim_audio=s.dim_audio,
                     correlation=paired_correlation(s.num_labels, s.rho, spread=True),
                     weak_partner=True, weak_scale=0.0)
    data, _ = synth_generate(spec)
    return _split(data, [s.num_train, s.num_valid, s.num_test])


def run_chaining(seed: int, setup: ChainingSetup | None = None) -> Comparison:
    s = setup or ChainingSetup()
    start = time.time()
    train, valid, test = chaining_corpus(seed, s)
    chain = build_model("chaining_moe", s.num_labels, s.dim_rgb, s.dim_audio, seed=seed,
                        stages=s.stages, proj_dim=s.proj_dim, mixtures=s.mixtures)
    m = matched_mixtures(chain.num_params(), s.dim_rgb + s.dim_audio, s.num_labels)
    flat = build_model("moe", s.num_labels, s.dim_rgb, s.dim_audio, seed=seed, mixtures=m)
    scores, details = {}, {"chain_params": chain.num_params(), "flat_params": flat.num_params(), "flat_mixtures": m}
    for name, model, lr in (("chaining", chain, s.chain_lr), ("flat", flat, s.flat_lr)):
        res = train_model(model, train, valid, TrainConfig(lr=lr, batch_size=s.batch_size, max_steps=s.max_steps,
                                                           eval_every=s.eval_every, patience=s.patience, seed=seed))
        scores[name] = _gap(model, test)
        details[f"{name}_best_step"] = res.best_step
    return Comparison(seed, scores, "flat", "chaining", time.time() - start, details)


# ---------------------------------------------------------------------------
# temporal localisation: multiple attention pooling vs a plain LSTM
# ---------------------------------------------------------------------------

@dataclass
class AttentionSetup:
    num_train: int = 2000
    num_valid: int = 500
    num_test: int = 500
    num_labels: int = 25
    dim_rgb: int = 32
    dim_audio: int = 8
    frames: int = 20
    window: int = 2
    noise: float = 0.5
    groups: int = 8
    cells: int = 32
    layers: int = 1
    mixtures: int = 4
    lr: float = 0.01
    batch_size: int = 64
    max_steps: int = 1500
    eval_every: int = 100
    patience: int = 4


def attention_corpus(seed: int, setup: AttentionSetup) -> list[Dataset]:
    """Each label's evidence occupies a short window at a random position; all other frames are noise."""
    s = setup
    spec = SynthSpec(seed=seed, n=s.num_train + s.num_valid + s.num_test, num_labels=s.num_labels,
                     dim_rgb=s.dim_rgb, dim_audio=s.dim_audio, max_frames=s.frames, window=s.window, noise=s.noise)
    data, _ = synth_generate(spec)
    return _split(data, [s.num_train, s.num_valid, s.num_test])


def run_attention(seed: int, setup: AttentionSetup | None = None) -> Comparison:
    s = setup or AttentionSetup()
    start = time.time()
    train, valid, test = attention_corpus(seed, s)
    common = dict(cells=s.cells, layers=s.layers, mixtures=s.mixtures)
    models = {"multi_ap": build_model("multiap", s.num_labels, s.dim_rgb, s.dim_audio, seed=seed,
                                      groups=s.groups, max_frames=s.frames, **common),
              "lstm": build_model("lstm", s.num_labels, s.dim_rgb, s.dim_audio, seed=seed, **common)}
    scores, details = {}, {}
    for name, model in models.items():
        res = train_model(model, train, valid, TrainConfig(lr=s.lr, batch_size=s.batch_size, max_steps=s.max_steps,
                                                           eval_every=s.eval_every, patience=s.patience, seed=seed))
        scores[name] = _gap(model, test)
        details[f"{name}_best_step"] = res.best_step
    return Comparison(seed, scores, "lstm", "multi_ap", time.time() - start, details)


# ---------------------------------------------------------------------------
# stacking: simple average vs class-wise weights vs attention weights
# ---------------------------------------------------------------------------

@dataclass
class StackingSetup:
    num_train1: int = 3000
    num_valid1: int = 1000
    num_train2: int = 2000
    num_valid2: int = 1000
    num_test: int = 2000
    num_labels: int = 25
    dim_rgb: int = 32
    dim_audio: int = 8
    domain_frac: float = 0.5
    lr: float = 0.01
    batch_size: int = 256
    max_steps: int = 600
    eval_every: int = 50
    patience: int = 4
    stack: StackerConfig = field(default_factory=lambda: StackerConfig(max_steps=600))
    # (architecture, training domain or "all", hyperparameters) per member
    members: tuple = (
        ("moe", 0, {"mixtures": 4}),
        ("moe", 1, {"mixtures": 4}),
        ("logistic", 0, {}),
        ("logistic", 1, {}),
        ("moe", "all", {"mixtures": 2}),
        ("logistic", "all", {}),
    )


def feature_view(data: Dataset, view: str) -> Dataset:
    """Blank the audio (``rgb``) or the rgb (``audio``) half of the video-level features."""
    if view == "all":
        return data
    rgb = data.mean_rgb if view == "rgb" else np.zeros_like(data.mean_rgb)
    audio = data.mean_audio if view == "audio" else np.zeros_like(data.mean_audio)
    return Dataset(ids=data.ids, labels=data.labels, mean_rgb=rgb, mean_audio=audio)


def _video_level(data: Dataset) -> Dataset:
    return Dataset(ids=data.ids, labels=data.labels, mean_rgb=data.mean_rgb, mean_audio=data.mean_audio)


def stacking_members(seed: int, setup: StackingSetup) -> tuple[dict, list[Dataset]]:
    """Train every member on (a domain of) train1 with early stopping on validate1 and
    collect its predictions on train2, validate2 and test.

    Half of the videos come from a second domain whose label evidence is inverted, so
    members trained on one domain are reliable only on that domain's videos.
    """
    s = setup
    sizes = [s.num_train1, s.num_valid1, s.num_train2, s.num_valid2, s.num_test]
    spec = SynthSpec(seed=seed, n=sum(sizes), num_labels=s.num_labels, dim_rgb=s.dim_rgb, dim_audio=s.dim_audio,
                     domain_frac=s.domain_frac)
    data, truth = synth_generate(spec)
    train1, valid1, train2, valid2, test = [_video_level(d) for d in _split(data, sizes)]
    dom1, dom_v1 = truth.domains[:sizes[0]], truth.domains[sizes[0]:sizes[0] + sizes[1]]
    preds = {"train2": [], "valid2": [], "test": []}
    for k, (arch, domain, hp) in enumerate(s.members):
        tr, va = train1, valid1
        if domain != "all":
            tr, va = train1.subset(np.flatnonzero(dom1 == domain)), valid1.subset(np.flatnonzero(dom_v1 == domain))
        model = build_model(arch, s.num_labels, s.dim_rgb, s.dim_audio, seed=seed * 100 + k, **hp)
        train_model(model, tr, va, TrainConfig(lr=s.lr, batch_size=s.batch_size, max_steps=s.max_steps,
                                               eval_every=s.eval_every, patience=s.patience, seed=seed * 100 + k))
        for key, part in (("train2", train2), ("valid2", valid2), ("test", test)):
            preds[key].append(predict(model, part))
    return {k: np.stack(v) for k, v in preds.items()}, [train2, valid2, test]


def run_stacking(seed: int, setup: StackingSetup | None = None) -> Comparison:
    s = setup or StackingSetup()
    start = time.time()
    P, (train2, valid2, test) = stacking_members(seed, s)
    scores = {"simple": global_average_precision(simple_average(P["test"]), test.labels)}
    details = {"members": [global_average_precision(p, test.labels) for p in P["test"]]}
    cfg = StackerConfig(**{**s.stack.__dict__, "seed": seed})
    for mode in ("classwise", "attention"):
        feats = (train2.video_features(), valid2.video_features(), test.video_features()) \
            if mode == "attention" else (None, None, None)
        stacker = train_stacker(P["train2"], train2.labels, mode, P["valid2"], valid2.labels, feats[0], feats[1], cfg)
        scores[mode] = global_average_precision(stacker(P["test"], feats[2]).values, test.labels)
    return Comparison(seed, scores, "simple", "attention", time.time() - start, details)


def stacking_order_holds(result: Comparison, tolerance: float = 0.001) -> bool:
    """attention >= classwise >= simple, each step allowed to fall short by ``tolerance``."""
    s = result.scores
    return s["attention"] - s["classwise"] >= -tolerance and s["classwise"] - s["simple"] >= -tolerance


# ---------------------------------------------------------------------------
# distillation: student with ensemble soft targets vs the same student without
# ---------------------------------------------------------------------------

@dataclass
class DistillationSetup:
    num_train: int = 1000
    num_valid: int = 1000
    num_test: int = 2000
    num_labels: int = 25
    dim_rgb: int = 32
    dim_audio: int = 8
    noise: float = 0.8
    label_noise: float = 0.3
    teachers: int = 4
    teacher_arch: str = "cnn"
    teacher_hparams: dict = field(default_factory=lambda: {"widths": (2, 4), "channels": (32, 32), "mixtures": 4})
    teacher_batch_size: int = 64
    student_arch: str = "moe"
    student_hparams: dict = field(default_factory=lambda: {"mixtures": 4})
    lam: float = 0.5
    lr: float = 0.01
    batch_size: int = 256
    max_steps: int = 1500
    eval_every: int = 50
    patience: int = 5


def run_distillation(seed: int, setup: DistillationSetup | None = None) -> Comparison:
    """Four frame-level teachers (different seeds) form the ensemble whose averaged
    predictions on the training split are the soft targets of a video-level student."""
    s = setup or DistillationSetup()
    start = time.time()
    spec = SynthSpec(seed=seed, n=s.num_train + s.num_valid + s.num_test, num_labels=s.num_labels,
                     dim_rgb=s.dim_rgb, dim_audio=s.dim_audio, noise=s.noise, label_noise=s.label_noise)
    data, _ = synth_generate(spec)
    train, valid, test = _split(data, [s.num_train, s.num_valid, s.num_test])

    def cfg(offset, lam=0.0, batch_size=s.batch_size):
        return TrainConfig(lr=s.lr, batch_size=batch_size, max_steps=s.max_steps, eval_every=s.eval_every,
                           patience=s.patience, seed=seed * 100 + offset, lam=lam)

    teacher_train, teacher_test = [], []
    for k in range(s.teachers):
        teacher = build_model(s.teacher_arch, s.num_labels, s.dim_rgb, s.dim_audio, seed=seed * 100 + 10 + k,
                              **s.teacher_hparams)
        t_train, t_valid = (train, valid) if teacher.uses_frames else (_video_level(train), _video_level(valid))
        train_model(teacher, t_train, t_valid, cfg(10 + k, batch_size=s.teacher_batch_size))
        teacher_train.append(predict(teacher, t_train))
        teacher_test.append(predict(teacher, test if teacher.uses_frames else _video_level(test)))
    soft_targets = np.mean(teacher_train, axis=0)
    train, valid, test = _video_level(train), _video_level(valid), _video_level(test)
    scores = {}
    for name, lam in (("plain", 0.0), ("distilled", s.lam)):
        student = build_model(s.student_arch, s.num_labels, s.dim_rgb, s.dim_audio, seed=seed * 100,
                              **s.student_hparams)
        train_model(student, train, valid, cfg(0, lam), soft_targets=soft_targets if lam > 0 else None)
        scores[name] = _gap(student, test)
    details = {"ensemble": global_average_precision(np.mean(teacher_test, axis=0), test.labels)}
    return Comparison(seed, scores, "plain", "distilled", time.time() - start, details)
