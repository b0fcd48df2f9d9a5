"""Length-prefixed record streams with masked CRC32C checksums.

Each record is laid out (little-endian) as::

    u64 length | u32 masked_crc(length bytes) | payload | u32 masked_crc(payload)
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterable, Iterator

from crc32c import crc32c

_MASK_DELTA = 0xA282EAD8


class RecordError(ValueError):
    def __init__(self, message: str, index: int, offset: int, which: str | None = None):
        super().__init__(message)
        self.index = index
        self.offset = offset
        self.which = which


def masked_crc(data: bytes) -> int:
    c = crc32c(data)
    return (((c >> 15) | (c << 17)) + _MASK_DELTA) & 0xFFFFFFFF


def frame_record(payload: bytes) -> bytes:
    header = struct.pack("<Q", len(payload))
    return b"".join((header, struct.pack("<I", masked_crc(header)), payload,
                     struct.pack("<I", masked_crc(payload))))


def write_record_stream(payloads: Iterable[bytes]) -> bytes:
    return b"".join(frame_record(bytes(p)) for p in payloads)


def iter_record_stream(data: bytes) -> Iterator[bytes]:
    view = memoryview(data)
    pos = 0
    index = 0
    n = len(data)
    while pos < n:
        if pos + 12 > n:
            raise RecordError(f"record {index}: truncated header at byte offset {pos}", index, pos)
        header = bytes(view[pos:pos + 8])
        (length,) = struct.unpack("<Q", header)
        (hcrc,) = struct.unpack("<I", view[pos + 8:pos + 12])
        if masked_crc(header) != hcrc:
            raise RecordError(f"record {index}: length CRC mismatch at byte offset {pos}", index, pos, "length")
        start = pos + 12
        end = start + length
        if end + 4 > n:
            raise RecordError(f"record {index}: truncated payload at byte offset {start}", index, start)
        payload = bytes(view[start:end])
        (pcrc,) = struct.unpack("<I", view[end:end + 4])
        if masked_crc(payload) != pcrc:
            raise RecordError(f"record {index}: payload CRC mismatch at byte offset {start}", index, start, "payload")
        yield payload
        pos = end + 4
        index += 1


def parse_record_stream(data: bytes) -> list[bytes]:
    return list(iter_record_stream(data))


def read_records(path) -> list[bytes]:
    return parse_record_stream(Path(path).read_bytes())


def write_records(path, payloads: Iterable[bytes]) -> None:
    Path(path).write_bytes(write_record_stream(payloads))
