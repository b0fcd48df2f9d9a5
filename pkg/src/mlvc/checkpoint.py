"""Binary parameter checkpoints.

Layout (little-endian)::

    b"CSTK" | version u32 | count u32
    per parameter: name_len u16 | utf-8 name | rank u8 | extents u32 * rank | values f64 * prod(extents)
"""
from __future__ import annotations

import struct
from collections import OrderedDict
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"CSTK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def encode_checkpoint(params: Mapping[str, np.ndarray]) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(params))]
    for name, arr in params.items():
        arr = np.asarray(arr, dtype="<f8")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(parts)


def decode_checkpoint(data: bytes) -> "OrderedDict[str, np.ndarray]":
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise CheckpointError(f"truncated checkpoint at offset {pos} (need {n} bytes, have {len(data) - pos})")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    if take(4) != MAGIC:
        raise CheckpointError("bad checkpoint magic at offset 0")
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} at offset 4")
    out: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for _ in range(count):
        start = pos
        (nlen,) = struct.unpack("<H", take(2))
        try:
            name = take(nlen).decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointError(f"invalid parameter name at offset {start}") from None
        (rank,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{rank}I", take(4 * rank))
        n = int(np.prod(shape, dtype=np.int64))
        out[name] = np.frombuffer(take(8 * n), dtype="<f8").reshape(shape).astype(np.float64)
    if pos != len(data):
        raise CheckpointError(f"trailing bytes after last parameter at offset {pos}")
    return out


def save_checkpoint(path, params: Mapping[str, np.ndarray]) -> None:
    Path(path).write_bytes(encode_checkpoint(params))


def load_checkpoint(path) -> "OrderedDict[str, np.ndarray]":
    return decode_checkpoint(Path(path).read_bytes())
