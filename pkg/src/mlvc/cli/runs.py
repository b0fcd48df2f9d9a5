"""Run directories: checkpoints, run descriptions and prediction files.

A run directory holds ``run.ini`` (what produced it), ``model.ckpt`` for a
single model, ``members/NN/`` for bagging and boosting, ``stacker.ckpt`` for a
stacker, ``train.log`` and ``pred_<split>.pred`` prediction matrices.
"""
from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from ..checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from ..ensemble.predfile import read_prediction_matrix, write_prediction_matrix
from ..ensemble.stacking import Stacker
from ..ingest.dataset import Dataset, load_files
from ..ingest.split import split_files
from ..metrics import UndefinedMetric, global_average_precision
from ..models.base import predict
from ..models.registry import build_model

RUN_INI = "run.ini"


class MissingInput(FileNotFoundError):
    pass


class DataStore:
    """Loads and caches dataset splits from ``root/<mode>/``."""

    def __init__(self, root: Path, num_labels: int, max_frames: int):
        self.root, self.num_labels, self.max_frames = Path(root), num_labels, max_frames
        self._cache: dict[tuple[str, str], Dataset] = {}

    def files(self, mode: str):
        directory = self.root / mode
        if not directory.is_dir():
            raise MissingInput(f"dataset directory {directory} does not exist (run the synth command first)")
        splits, rejects = split_files(sorted(p.name for p in directory.iterdir() if p.is_file()))
        return {s.part: [directory / f for f in s.files] for s in splits}, rejects

    def load(self, part: str, mode: str) -> Dataset:
        key = (part, mode)
        if key not in self._cache:
            files = self.files(mode)[0][part]
            if not files:
                raise MissingInput(f"no {mode}-level files for split {part!r} under {self.root / mode}")
            self._cache[key] = load_files(files, mode, self.num_labels, self.max_frames)
        return self._cache[key]


def pred_path(run_dir: Path, part: str) -> Path:
    return Path(run_dir) / f"pred_{part}.pred"


def write_run_ini(run_dir: Path, run: dict, hparams: dict | None = None) -> None:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp["run"] = {k: " ".join(map(str, v)) if isinstance(v, (list, tuple)) else str(v) for k, v in run.items()}
    if hparams is not None:
        cp["hparams"] = {k: " ".join(map(str, v)) if isinstance(v, tuple) else str(v) for k, v in hparams.items()}
    Path(run_dir).mkdir(parents=True, exist_ok=True)
    with (Path(run_dir) / RUN_INI).open("w") as fh:
        cp.write(fh)


def read_run_ini(run_dir: Path) -> tuple[dict, dict]:
    path = Path(run_dir) / RUN_INI
    if not path.exists():
        raise MissingInput(f"{run_dir} is not a run directory (no {RUN_INI})")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read(path)
    return dict(cp["run"]), dict(cp["hparams"]) if cp.has_section("hparams") else {}


def save_model(run_dir: Path, model, run: dict) -> None:
    write_run_ini(run_dir, run, model.hparams)
    save_checkpoint(Path(run_dir) / "model.ckpt", model.state_dict())


def load_model(run_dir: Path):
    run, hparams = read_run_ini(run_dir)
    model = build_model(run["arch"], int(run["num_labels"]), int(run["dim_rgb"]), int(run["dim_audio"]),
                        seed=int(run.get("seed", 0)), **hparams)
    path = Path(run_dir) / "model.ckpt"
    try:
        model.load_state_dict(load_checkpoint(path))
    except (KeyError, ValueError) as err:
        raise CheckpointError(f"{path}: {err.args[0]}") from None
    return model, run


def _paths(value: str) -> list[Path]:
    return [Path(p) for p in value.split()]


def donor_mean(donors, part: str, store: DataStore) -> np.ndarray:
    return np.mean([run_predictions(Path(d), part, store) for d in donors], axis=0)


def run_predictions(run_dir: Path, part: str, store: DataStore, reuse: bool = True) -> np.ndarray:
    """Predictions of the run in ``run_dir`` on ``part``.

    With ``reuse`` an existing prediction file is read instead of recomputing.
    """
    if reuse and pred_path(run_dir, part).exists():
        return read_prediction_matrix(pred_path(run_dir, part))[0]
    run, _ = read_run_ini(run_dir)
    kind = run["kind"]
    if kind == "single":
        model, _ = load_model(run_dir)
        dataset = store.load(part, run["mode"])
        donors = donor_mean(_paths(run["donors"]), part, store) if model.uses_donors else None
        return predict(model, dataset, donors=donors)
    if kind in ("bag", "boost"):
        return np.mean([run_predictions(m, part, store) for m in _paths(run["members"])], axis=0)
    if kind == "stack":
        members = np.stack([run_predictions(m, part, store) for m in _paths(run["members"])])
        stacker = Stacker(run["mode"], members.shape[0], members.shape[2],
                          feature_dim=int(run["feature_dim"]), components=int(run["components"]),
                          rank=int(run["rank"]))
        path = Path(run_dir) / "stacker.ckpt"
        try:
            stacker.load_state_dict(load_checkpoint(path))
        except (KeyError, ValueError) as err:
            raise CheckpointError(f"{path}: {err.args[0]}") from None
        feats = store.load(part, run["feature_mode"]).video_features() if run["mode"] == "attention" else None
        return stacker(members, feats).values
    raise ValueError(f"{run_dir}: unknown run kind {kind!r}")


def safe_gap(pred, labels) -> float | None:
    try:
        return global_average_precision(pred, labels)
    except UndefinedMetric:
        return None


def write_predictions(run_dir: Path, part: str, pred: np.ndarray, labels, source: str, name: str) -> float | None:
    gap = safe_gap(pred, labels)
    write_prediction_matrix(pred_path(run_dir, part), pred, {
        "model": name, "source": source, "part": part, "gap": "nan" if gap is None else repr(gap)})
    return gap
