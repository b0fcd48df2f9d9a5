"""Independent reference encoders for the record wire format.

Written from the protobuf wire-format rules directly (not from the package):
repeated scalars are emitted unpacked, map entries put the value before the
key, and the top-level message carries an unknown field the decoder must skip.
"""
from __future__ import annotations

import struct

import numpy as np

POLY = 0x82F63B78


def crc32c_bitwise(data: bytes) -> int:
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ (POLY if crc & 1 else 0)
    return crc ^ 0xFFFFFFFF


def masked(data: bytes) -> int:
    c = crc32c_bitwise(data)
    return ((((c >> 15) | (c << 17)) & 0xFFFFFFFF) + 0xA282EAD8) & 0xFFFFFFFF


def frame(payload: bytes) -> bytes:
    n = struct.pack("<Q", len(payload))
    return n + struct.pack("<I", masked(n)) + payload + struct.pack("<I", masked(payload))


def varint(v: int) -> bytes:
    v &= (1 << 64) - 1
    out = b""
    while v >= 0x80:
        out += bytes([(v & 0x7F) | 0x80])
        v >>= 7
    return out + bytes([v])


def tag(field: int, wire: int) -> bytes:
    return varint(field << 3 | wire)


def ld(field: int, body: bytes) -> bytes:
    return tag(field, 2) + varint(len(body)) + body


def bytes_list(values) -> bytes:
    return ld(1, b"".join(ld(1, v) for v in values))


def float_list(values) -> bytes:
    return ld(2, b"".join(tag(1, 5) + struct.pack("<f", float(v)) for v in values))


def int64_list(values) -> bytes:
    return ld(3, b"".join(tag(1, 0) + varint(int(v)) for v in values))


def features(entries: dict) -> bytes:
    # value first, key second: legal on the wire and unlike the package encoder
    return b"".join(ld(1, ld(2, value) + ld(1, key.encode())) for key, value in entries.items())


def video_example(vid: str, labels, mean_rgb, mean_audio) -> bytes:
    feats = {"mean_audio": float_list(mean_audio), "labels": int64_list(labels),
             "mean_rgb": float_list(mean_rgb), "id": bytes_list([vid.encode()])}
    return tag(7, 0) + varint(99) + ld(1, features(feats))


def frame_example(vid: str, labels, rgb_bytes: np.ndarray, audio_bytes: np.ndarray) -> bytes:
    context = ld(1, features({"labels": int64_list(labels), "id": bytes_list([vid.encode()])}))

    def feature_list(rows):
        return b"".join(ld(1, bytes_list([bytes(r.astype(np.uint8))])) for r in rows)

    lists = ld(2, features({"audio": feature_list(audio_bytes), "rgb": feature_list(rgb_bytes)}))
    return lists + context
