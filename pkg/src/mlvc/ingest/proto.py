"""A protobuf wire-format subset for ``Example`` / ``SequenceExample`` payloads.

Only the messages and keys used by the video corpus are understood; unknown
fields are skipped so newer writers stay readable.

    Example         { Features features = 1; }
    SequenceExample { Features context = 1; FeatureLists feature_lists = 2; }
    Features        { map<string, Feature> feature = 1; }
    FeatureLists    { map<string, FeatureList> feature_list = 1; }
    FeatureList     { repeated Feature feature = 1; }
    Feature         { oneof { BytesList bytes_list = 1; FloatList float_list = 2; Int64List int64_list = 3; } }
"""
from __future__ import annotations

import struct
from typing import Iterator

import numpy as np

from .example import Example, QUANT_MAX, QUANT_MIN, dequantize, quantize

VARINT, FIXED64, LENGTH, FIXED32 = 0, 1, 2, 5


class WireError(ValueError):
    pass


# -- decoding ---------------------------------------------------------------

def _read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise WireError(f"truncated varint at offset {pos}")
        b = buf[pos]
        pos += 1
        result |= (b & 0x7F) << shift
        if not b & 0x80:
            return result, pos
        shift += 7
        if shift >= 70:
            raise WireError(f"varint too long at offset {pos}")


def iter_fields(buf: bytes) -> Iterator[tuple[int, int, object]]:
    pos = 0
    n = len(buf)
    while pos < n:
        key, pos = _read_varint(buf, pos)
        field, wt = key >> 3, key & 7
        if field == 0:
            raise WireError(f"invalid field number 0 at offset {pos}")
        if wt == VARINT:
            val, pos = _read_varint(buf, pos)
        elif wt == FIXED64:
            if pos + 8 > n:
                raise WireError(f"field {field}: truncated 64-bit value")
            val, pos = buf[pos:pos + 8], pos + 8
        elif wt == LENGTH:
            ln, pos = _read_varint(buf, pos)
            if pos + ln > n:
                raise WireError(f"field {field}: truncated length-delimited value")
            val, pos = buf[pos:pos + ln], pos + ln
        elif wt == FIXED32:
            if pos + 4 > n:
                raise WireError(f"field {field}: truncated 32-bit value")
            val, pos = buf[pos:pos + 4], pos + 4
        else:
            raise WireError(f"field {field}: unsupported wire type {wt}")
        yield field, wt, val


def _expect(field: int, wt: int, want: int) -> None:
    if wt != want:
        raise WireError(f"field {field}: wire type {wt}, expected {want}")


def _signed64(v: int) -> int:
    return v - (1 << 64) if v >= 1 << 63 else v


def _decode_feature(buf: bytes):
    """Return ('bytes'|'float'|'int64', list) for a Feature message."""
    kind, values = None, []
    for field, wt, val in iter_fields(buf):
        if field == 1:
            _expect(field, wt, LENGTH)
            kind = "bytes"
            for f2, wt2, v2 in iter_fields(val):
                if f2 == 1:
                    _expect(f2, wt2, LENGTH)
                    values.append(bytes(v2))
        elif field == 2:
            _expect(field, wt, LENGTH)
            kind = "float"
            for f2, wt2, v2 in iter_fields(val):
                if f2 != 1:
                    continue
                if wt2 == LENGTH:
                    if len(v2) % 4:
                        raise WireError(f"field {f2}: packed float length {len(v2)} not a multiple of 4")
                    values.extend(np.frombuffer(v2, dtype="<f4").tolist())
                elif wt2 == FIXED32:
                    values.append(struct.unpack("<f", v2)[0])
                else:
                    raise WireError(f"field {f2}: wire type {wt2} invalid for float_list")
        elif field == 3:
            _expect(field, wt, LENGTH)
            kind = "int64"
            for f2, wt2, v2 in iter_fields(val):
                if f2 != 1:
                    continue
                if wt2 == LENGTH:
                    p = 0
                    while p < len(v2):
                        x, p = _read_varint(v2, p)
                        values.append(_signed64(x))
                elif wt2 == VARINT:
                    values.append(_signed64(v2))
                else:
                    raise WireError(f"field {f2}: wire type {wt2} invalid for int64_list")
    return kind, values


def _decode_map(buf: bytes, map_field: int) -> dict[str, bytes]:
    """Decode a ``map<string, Message>`` container, returning raw value bytes."""
    out: dict[str, bytes] = {}
    for field, wt, val in iter_fields(buf):
        if field != map_field:
            continue
        _expect(field, wt, LENGTH)
        key, value = None, b""
        for f2, wt2, v2 in iter_fields(val):
            if f2 == 1:
                _expect(f2, wt2, LENGTH)
                key = bytes(v2).decode("utf-8")
            elif f2 == 2:
                _expect(f2, wt2, LENGTH)
                value = bytes(v2)
        if key is None:
            raise WireError(f"field {map_field}: map entry without key")
        out[key] = value
    return out


def _features(buf: bytes) -> dict[str, tuple]:
    return {k: _decode_feature(v) for k, v in _decode_map(buf, 1).items()}


def _require(feats: dict, key: str, kind: str, alt: str | None = None):
    if key not in feats and alt is not None and alt in feats:
        key = alt
    if key not in feats:
        raise KeyError(f"missing required key {key!r}")
    got, values = feats[key]
    if got is not None and got != kind:
        raise WireError(f"key {key!r}: expected {kind}_list, found {got}_list")
    return values


def decode_example(payload: bytes, mode: str = "video", lo: float = QUANT_MIN,
                   hi: float = QUANT_MAX) -> Example:
    """Decode one record payload.  ``mode`` is ``"video"`` or ``"frame"``."""
    if mode == "video":
        feats = {}
        for field, wt, val in iter_fields(payload):
            if field == 1:
                _expect(field, wt, LENGTH)
                feats.update(_features(val))
        vid = _require(feats, "id", "bytes", alt="video_id")
        labels = _require(feats, "labels", "int64")
        mean_rgb = np.asarray(_require(feats, "mean_rgb", "float"), dtype=np.float64)
        mean_audio = np.asarray(_require(feats, "mean_audio", "float"), dtype=np.float64)
        return Example(vid[0].decode("utf-8") if vid else "", tuple(int(x) for x in labels),
                       mean_rgb=mean_rgb, mean_audio=mean_audio).validate()
    if mode == "frame":
        context, lists = {}, {}
        for field, wt, val in iter_fields(payload):
            if field == 1:
                _expect(field, wt, LENGTH)
                context.update(_features(val))
            elif field == 2:
                _expect(field, wt, LENGTH)
                lists.update(_decode_map(val, 1))
        vid = _require(context, "id", "bytes", alt="video_id")
        labels = _require(context, "labels", "int64")
        streams = {}
        for key in ("rgb", "audio"):
            if key not in lists:
                raise KeyError(f"missing required key {key!r}")
            frames = []
            for field, wt, val in iter_fields(lists[key]):
                if field != 1:
                    continue
                _expect(field, wt, LENGTH)
                kind, vals = _decode_feature(val)
                if kind != "bytes" or len(vals) != 1:
                    raise WireError(f"key {key!r}: each frame must be a single bytes value")
                frames.append(np.frombuffer(vals[0], dtype=np.uint8))
            if not frames:
                raise ValueError(f"key {key!r}: sequence has no frames")
            streams[key] = dequantize(np.stack(frames), lo, hi)
        return Example(vid[0].decode("utf-8") if vid else "", tuple(int(x) for x in labels),
                       rgb=streams["rgb"], audio=streams["audio"]).validate()
    raise ValueError(f"unknown decode mode {mode!r}")


# -- encoding ---------------------------------------------------------------

def _varint(v: int) -> bytes:
    if v < 0:
        v += 1 << 64
    out = bytearray()
    while True:
        b = v & 0x7F
        v >>= 7
        if v:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def _len_field(field: int, data: bytes) -> bytes:
    return _varint((field << 3) | LENGTH) + _varint(len(data)) + data


def _bytes_feature(values) -> bytes:
    return _len_field(1, b"".join(_len_field(1, v) for v in values))


def _float_feature(values) -> bytes:
    return _len_field(2, _len_field(1, np.asarray(values, dtype="<f4").tobytes()))


def _int64_feature(values) -> bytes:
    return _len_field(3, _len_field(1, b"".join(_varint(int(v)) for v in values)))


def _map(entries: dict[str, bytes]) -> bytes:
    return b"".join(_len_field(1, _len_field(1, k.encode("utf-8")) + _len_field(2, v))
                    for k, v in entries.items())


def encode_video_example(ex: Example) -> bytes:
    feats = {
        "id": _bytes_feature([ex.video_id.encode("utf-8")]),
        "labels": _int64_feature(ex.labels),
        "mean_rgb": _float_feature(ex.mean_rgb),
        "mean_audio": _float_feature(ex.mean_audio),
    }
    return _len_field(1, _map(feats))


def encode_frame_example(ex: Example, lo: float = QUANT_MIN, hi: float = QUANT_MAX) -> bytes:
    context = {
        "id": _bytes_feature([ex.video_id.encode("utf-8")]),
        "labels": _int64_feature(ex.labels),
    }
    lists = {}
    for key, mat in (("rgb", ex.rgb), ("audio", ex.audio)):
        q = quantize(mat, lo, hi)
        lists[key] = b"".join(_len_field(1, _bytes_feature([row.tobytes()])) for row in q)
    return _len_field(1, _map(context)) + _len_field(2, _map(lists))
