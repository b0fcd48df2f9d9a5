from __future__ import annotations

from dataclasses import dataclass

import numpy as np

QUANT_MIN = -2.0
QUANT_MAX = 2.0


def dequantize(byte, lo: float = QUANT_MIN, hi: float = QUANT_MAX):
    """Map u8 codes onto ``[lo, hi]``; works on scalars and arrays."""
    return lo + (hi - lo) * np.asarray(byte, dtype=np.float64) / 255.0


def quantize(x, lo: float = QUANT_MIN, hi: float = QUANT_MAX) -> np.ndarray:
    q = np.rint((np.asarray(x, dtype=np.float64) - lo) * 255.0 / (hi - lo))
    return np.clip(q, 0, 255).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class Example:
    """One video.  ``rgb``/``audio`` are (frames, dim) matrices when frame-level data is present."""

    video_id: str
    labels: tuple[int, ...]
    mean_rgb: np.ndarray | None = None
    mean_audio: np.ndarray | None = None
    rgb: np.ndarray | None = None
    audio: np.ndarray | None = None

    @property
    def has_video_level(self) -> bool:
        return self.mean_rgb is not None and self.mean_audio is not None

    @property
    def has_frame_level(self) -> bool:
        return self.rgb is not None

    @property
    def num_frames(self) -> int:
        return 0 if self.rgb is None else self.rgb.shape[0]

    def validate(self, num_labels: int | None = None, max_frames: int | None = None) -> "Example":
        if not (self.has_video_level or self.has_frame_level):
            raise ValueError(f"example {self.video_id!r} has neither video-level nor frame-level features")
        if self.has_frame_level:
            if self.num_frames < 1:
                raise ValueError(f"example {self.video_id!r} has no frames")
            if max_frames is not None and self.num_frames > max_frames:
                raise ValueError(f"example {self.video_id!r} has {self.num_frames} frames > {max_frames}")
            if self.audio is not None and self.audio.shape[0] != self.num_frames:
                raise ValueError(f"example {self.video_id!r}: rgb/audio frame counts differ")
        if any(l < 0 for l in self.labels):
            raise ValueError(f"example {self.video_id!r} has a negative label")
        if num_labels is not None and any(l >= num_labels for l in self.labels):
            raise ValueError(f"example {self.video_id!r} has a label >= vocabulary size {num_labels}")
        return self
