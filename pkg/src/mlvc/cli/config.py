"""Experiment configuration.

Grammar: an INI file (``configparser``) with the sections below.  Keys are
``name = value``; lists are whitespace or comma separated; ``none`` clears an
optional value.  Any ``[model]`` key other than ``arch``/``name``/``donors``
is an architecture hyperparameter.  ``--set section.key=value`` on the command
line overrides file values.

    [synth]     data generation (sizes per split, label correlation, ...)
    [dataset]   root directory, feature mode (video|frame) and dimensions
    [model]     arch, name, donors, hyperparameters
    [training]  optimiser, early stopping, boosting / bagging / distillation knobs
    [stack]     member run directories and stacker settings
    [output]    run directory and which splits to predict
    [submit]    prediction file to turn into a submission CSV
"""
from __future__ import annotations

import configparser
import dataclasses
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

from ..models.registry import ARCHITECTURES, build_model, resolve_hparams


class ConfigError(ValueError):
    """A config problem, reported with its ``section.key`` path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class SynthSection:
    seed: int = 0
    n_train1: int = 10000
    n_validate1: int = 2000
    n_train2: int = 2000
    n_validate2: int = 2000
    n_test: int = 2000
    shard_size: int = 1000
    correlated_pairs: int = 0
    rho: float = 0.9
    mean_labels: float = 3.4
    window: int = 4
    noise: float = 0.5
    min_frames: int | None = None
    label_noise: float = 0.0


@dataclass
class DatasetSection:
    root: str = "data"
    mode: str = "video"
    num_labels: int = 25
    dim_rgb: int = 32
    dim_audio: int = 8
    max_frames: int = 30


@dataclass
class ModelSection:
    arch: str = "moe"
    name: str = ""
    donors: tuple[str, ...] = ()
    hparams: dict = field(default_factory=dict)


@dataclass
class TrainingSection:
    lr: float = 0.01
    batch_size: int = 1024
    max_steps: int = 1000
    eval_every: int = 50
    patience: int = 5
    seed: int = 0
    lam: float = 0.5
    aux_share: float = 0.15
    soft_target: str = ""
    members: int = 8
    boost_alpha: float = 1.0
    boost_clip: float = 5.0
    boost_drop_clipped: bool = False


@dataclass
class StackSection:
    members: tuple[str, ...] = ()
    mode: str = "attention"
    lr: float = 0.01
    max_steps: int = 400
    batch_size: int = 512
    eval_every: int = 10
    patience: int = 10
    components: int = 16
    rank: int = 4
    seed: int = 0


@dataclass
class OutputSection:
    dir: str = "runs/model"
    predict_parts: tuple[str, ...] = ("validate1", "train2", "validate2", "test")


@dataclass
class SubmitSection:
    predictions: str = ""
    part: str = "test"
    top_k: int = 20
    path: str = "submission.csv"


@dataclass
class ExperimentConfig:
    synth: SynthSection = field(default_factory=SynthSection)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    model: ModelSection = field(default_factory=ModelSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    stack: StackSection = field(default_factory=StackSection)
    output: OutputSection = field(default_factory=OutputSection)
    submit: SubmitSection = field(default_factory=SubmitSection)
    base_dir: Path = field(default_factory=Path)

    def resolve(self, path: str) -> Path:
        """Relative paths in a config are relative to the config file."""
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _coerce(path: str, raw: str, tp):
    raw = raw.strip()
    if isinstance(tp, types.UnionType) or typing.get_origin(tp) is typing.Union:
        if raw.lower() == "none":
            return None
        tp = next(a for a in typing.get_args(tp) if a is not type(None))
    try:
        if tp is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if tp is int:
            return int(raw)
        if tp is float:
            return float(raw)
        if typing.get_origin(tp) is tuple:
            return tuple(x for x in raw.replace(",", " ").split())
        return raw
    except ValueError:
        name = getattr(tp, "__name__", str(tp))
        raise ConfigError(path, f"expected {name}, got {raw!r}") from None


def _section(section: str, cls, items: dict[str, str]):
    hints = typing.get_type_hints(cls)
    values = {}
    for key, raw in items.items():
        if key not in hints or key == "hparams":
            raise ConfigError(f"{section}.{key}", "unknown key")
        values[key] = _coerce(f"{section}.{key}", raw, hints[key])
    return cls(**values)


def _validate(cfg: ExperimentConfig) -> None:
    def need(ok, path, msg):
        if not ok:
            raise ConfigError(path, msg)

    d, t, s = cfg.dataset, cfg.training, cfg.stack
    need(d.mode in ("video", "frame"), "dataset.mode", f"must be 'video' or 'frame', got {d.mode!r}")
    for name in ("num_labels", "dim_rgb", "dim_audio", "max_frames"):
        need(getattr(d, name) >= 1, f"dataset.{name}", "must be >= 1")
    need(t.lr > 0, "training.lr", "must be > 0")
    need(t.batch_size >= 1, "training.batch_size", "must be >= 1")
    need(t.max_steps >= 0, "training.max_steps", "must be >= 0")
    need(t.eval_every >= 1, "training.eval_every", "must be >= 1")
    need(t.patience >= 1, "training.patience", "must be >= 1")
    need(0 <= t.lam <= 1, "training.lam", "must lie in [0, 1]")
    need(0 <= t.aux_share < 0.5, "training.aux_share", "must lie in [0, 0.5)")
    need(t.members >= 1, "training.members", "must be >= 1")
    need(t.boost_clip >= 1, "training.boost_clip", "must be >= 1")
    need(s.mode in ("simple", "linear", "classwise", "attention"), "stack.mode",
         f"unknown stacking mode {s.mode!r}")
    need(cfg.submit.top_k >= 1, "submit.top_k", "must be >= 1")
    from ..ingest.split import PARTS
    for p in cfg.output.predict_parts:
        need(p in PARTS, "output.predict_parts", f"unknown split {p!r}; choose from {PARTS}")
    need(cfg.submit.part in PARTS, "submit.part", f"unknown split {cfg.submit.part!r}")
    need(cfg.model.arch in ARCHITECTURES, "model.arch",
         f"unknown architecture {cfg.model.arch!r}; choose from {sorted(ARCHITECTURES)}")
    for key, value in cfg.model.hparams.items():
        try:
            resolve_hparams(cfg.model.arch, {key: value})
        except (KeyError, ValueError) as err:
            raise ConfigError(f"model.{key}", str(err).strip('"')) from None
    # value checks that only the architecture itself knows about (variants, modes, ...)
    d = cfg.dataset
    try:
        build_model(cfg.model.arch, d.num_labels, d.dim_rgb, d.dim_audio, **cfg.model.hparams)
    except (KeyError, ValueError) as err:
        raise ConfigError("model", str(err).strip('"')) from None


SECTIONS = {f.name: f.type for f in dataclasses.fields(ExperimentConfig) if f.name != "base_dir"}


def parse_config(text: str = "", overrides=(), base_dir: Path | str = ".") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError("<file>", str(err).splitlines()[0]) from None
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot or not name:
            raise ConfigError(item, "override must look like section.key=value")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name, value)
    hints = typing.get_type_hints(ExperimentConfig)
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(section, "unknown section")
        items = dict(parser.items(section))
        if section == "model":
            hparams = {k: v.strip() for k, v in items.items() if k not in ("arch", "name", "donors")}
            items = {k: v for k, v in items.items() if k not in hparams}
            model = _section(section, hints[section], items)
            model.hparams = hparams
            values[section] = model
        else:
            values[section] = _section(section, hints[section], items)
    cfg = ExperimentConfig(**values, base_dir=Path(base_dir))
    _validate(cfg)
    return cfg


def load_config(path, overrides=()) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "config file not found")
    return parse_config(path.read_text(), overrides, base_dir=path.parent.resolve())
