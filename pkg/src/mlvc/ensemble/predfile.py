"""PredictionMatrix files: ``b"PRED" | version u32 | N u32 | L u32 | f32 * N * L`` (little-endian,
row-major) with a ``key = value`` text manifest alongside at ``<path>.manifest``."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"PRED"
VERSION = 1


def manifest_path(path) -> Path:
    return Path(str(path) + ".manifest")


def write_prediction_matrix(path, predictions, manifest: dict | None = None) -> None:
    P = np.asarray(predictions, dtype="<f4")
    if P.ndim != 2:
        raise ValueError(f"prediction matrix must be 2-D, got shape {P.shape}")
    Path(path).write_bytes(MAGIC + struct.pack("<III", VERSION, *P.shape) + np.ascontiguousarray(P).tobytes())
    if manifest is not None:
        manifest_path(path).write_text("".join(f"{k} = {v}\n" for k, v in manifest.items()))


def read_prediction_matrix(path) -> tuple[np.ndarray, dict]:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != MAGIC:
        raise ValueError(f"{path}: not a prediction matrix (bad magic)")
    version, N, L = struct.unpack("<III", data[4:16])
    if version != VERSION:
        raise ValueError(f"{path}: unsupported prediction matrix version {version}")
    if len(data) != 16 + 4 * N * L:
        raise ValueError(f"{path}: expected {16 + 4 * N * L} bytes, found {len(data)}")
    P = np.frombuffer(data, dtype="<f4", offset=16).reshape(N, L).astype(np.float64)
    meta = {}
    mp = manifest_path(path)
    if mp.exists():
        for line in mp.read_text().splitlines():
            if "=" in line:
                k, v = line.split("=", 1)
                meta[k.strip()] = v.strip()
    return P, meta
