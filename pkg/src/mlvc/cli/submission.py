"""Submission CSV: ``VideoId,LabelConfidencePairs`` then one line per video with its
top-k ``label confidence`` pairs, highest confidence first."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ..metrics import top_k_indices

HEADER = "VideoId,LabelConfidencePairs"


def format_submission(predictions, video_ids, top_k: int = 20) -> str:
    P = np.asarray(predictions, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != len(video_ids):
        raise ValueError(f"predictions {P.shape} do not match {len(video_ids)} video ids")
    if np.any(P < 0) or np.any(P > 1):
        raise ValueError("confidences must lie in [0, 1]")
    seen = set()
    lines = [HEADER]
    for vid, row in zip(video_ids, P):
        if vid in seen:
            raise ValueError(f"duplicate video id {vid!r}")
        seen.add(vid)
        pairs = " ".join(f"{label} {row[label]:.6f}" for label in top_k_indices(row, top_k))
        lines.append(f"{vid},{pairs}")
    return "\n".join(lines) + "\n"


def write_submission(predictions, video_ids, path, top_k: int = 20) -> None:
    Path(path).write_text(format_submission(predictions, video_ids, top_k))


def read_submission(path) -> dict[str, list[tuple[int, float]]]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != HEADER:
        raise ValueError(f"{path}: missing header {HEADER!r}")
    out = {}
    for n, line in enumerate(lines[1:], start=2):
        vid, sep, rest = line.partition(",")
        fields = rest.split()
        if not sep or len(fields) % 2:
            raise ValueError(f"{path}:{n}: malformed line")
        out[vid] = [(int(fields[i]), float(fields[i + 1])) for i in range(0, len(fields), 2)]
    return out
