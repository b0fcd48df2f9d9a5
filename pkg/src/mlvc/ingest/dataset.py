"""In-memory dataset used by training, prediction and stacking."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .example import Example
from .proto import decode_example, encode_frame_example, encode_video_example
from .records import read_records, write_records


@dataclass
class Dataset:
    ids: list[str]
    labels: np.ndarray                      # (N, L) in {0, 1}
    mean_rgb: np.ndarray | None = None      # (N, D_v)
    mean_audio: np.ndarray | None = None    # (N, D_a)
    rgb: list[np.ndarray] | None = None     # N x (F_n, D_v)
    audio: list[np.ndarray] | None = None   # N x (F_n, D_a)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.rgb is not None and self.mean_rgb is None:
            self.mean_rgb = np.stack([f.mean(axis=0) for f in self.rgb])
            self.mean_audio = np.stack([f.mean(axis=0) for f in self.audio])
        if len(self.ids) != self.labels.shape[0]:
            raise ValueError("ids and labels disagree on the number of examples")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def num_labels(self) -> int:
        return self.labels.shape[1]

    @property
    def has_frames(self) -> bool:
        return self.rgb is not None

    @property
    def dims(self) -> tuple[int, int]:
        return self.mean_rgb.shape[1], self.mean_audio.shape[1]

    @property
    def lengths(self) -> np.ndarray:
        if self.rgb is None:
            return np.ones(len(self), dtype=int)
        return np.array([f.shape[0] for f in self.rgb])

    def video_features(self, idx=None) -> np.ndarray:
        feats = np.concatenate([self.mean_rgb, self.mean_audio], axis=1)
        return feats if idx is None else feats[idx]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        pick = (lambda seq: None if seq is None else [seq[i] for i in idx])
        return Dataset(
            ids=[self.ids[i] for i in idx],
            labels=self.labels[idx],
            mean_rgb=None if self.mean_rgb is None else self.mean_rgb[idx],
            mean_audio=None if self.mean_audio is None else self.mean_audio[idx],
            rgb=pick(self.rgb),
            audio=pick(self.audio),
        )

    def batch(self, idx) -> dict[str, np.ndarray]:
        """Feature arrays for ``idx``; frame tensors need equal lengths within ``idx``."""
        idx = np.asarray(idx, dtype=int)
        out = {"video": self.video_features(idx), "labels": self.labels[idx], "index": idx}
        if self.rgb is not None:
            out["rgb"] = np.stack([self.rgb[i] for i in idx])
            out["audio"] = np.stack([self.audio[i] for i in idx])
        return out

    def batches(self, batch_size: int, rng: np.random.Generator | None = None) -> list[np.ndarray]:
        """Index batches grouped by sequence length (no padding anywhere downstream)."""
        order = np.arange(len(self)) if rng is None else rng.permutation(len(self))
        lengths = self.lengths[order]
        out = []
        for length in np.unique(lengths):
            members = order[lengths == length]
            out.extend(members[i:i + batch_size] for i in range(0, len(members), batch_size))
        if rng is not None:
            out = [out[i] for i in rng.permutation(len(out))]
        return out

    @classmethod
    def from_examples(cls, examples: Sequence[Example], num_labels: int) -> "Dataset":
        labels = np.zeros((len(examples), num_labels))
        for n, ex in enumerate(examples):
            ex.validate(num_labels)
            labels[n, list(ex.labels)] = 1.0
        frames = all(ex.has_frame_level for ex in examples) and len(examples) > 0
        return cls(
            ids=[ex.video_id for ex in examples],
            labels=labels,
            mean_rgb=None if frames else np.stack([ex.mean_rgb for ex in examples]),
            mean_audio=None if frames else np.stack([ex.mean_audio for ex in examples]),
            rgb=[ex.rgb for ex in examples] if frames else None,
            audio=[ex.audio for ex in examples] if frames else None,
        )

    def to_examples(self, frames: bool | None = None) -> list[Example]:
        frames = self.has_frames if frames is None else frames
        out = []
        for n, vid in enumerate(self.ids):
            labels = tuple(int(i) for i in np.flatnonzero(self.labels[n]))
            if frames:
                out.append(Example(vid, labels, rgb=self.rgb[n], audio=self.audio[n]))
            else:
                out.append(Example(vid, labels, mean_rgb=self.mean_rgb[n], mean_audio=self.mean_audio[n]))
        return out


def load_files(paths: Iterable, mode: str, num_labels: int, max_frames: int | None = None) -> Dataset:
    """Decode every record of ``paths`` (in the given order) into a Dataset."""
    examples = []
    for path in paths:
        for payload in read_records(path):
            ex = decode_example(payload, mode)
            if max_frames is not None and ex.has_frame_level and ex.num_frames > max_frames:
                ex = Example(ex.video_id, ex.labels, rgb=ex.rgb[:max_frames], audio=ex.audio[:max_frames])
            examples.append(ex)
    return Dataset.from_examples(examples, num_labels)


def write_shards(dataset: Dataset, directory, names: Sequence[str], mode: str) -> list[Path]:
    """Write ``dataset`` contiguously across the named shard files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    examples = dataset.to_examples(frames=(mode == "frame"))
    encode = encode_frame_example if mode == "frame" else encode_video_example
    chunks = np.array_split(np.arange(len(examples)), len(names))
    paths = []
    for name, chunk in zip(names, chunks):
        path = directory / name
        write_records(path, (encode(examples[i]) for i in chunk))
        paths.append(path)
    return paths
