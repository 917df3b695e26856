"""Versioned binary weight file.

Layout: magic "MSNN", u32 version, u32 entry count, then per entry a
name (u16 length + utf-8), dtype code (u8: 0=f64 1=f32), rank (u8) and
u32 dims, followed by the raw little-endian parameter blocks in entry
order, and a trailing CRC32 (of everything after the magic).
"""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

MAGIC = b"MSNN"
VERSION = 1
_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}
_CODES = {np.dtype("float64"): 0, np.dtype("float32"): 1}


class WeightFormatError(ValueError):
    pass


def save_weights(path: str | Path, entries: list[tuple[str, np.ndarray]]) -> None:
    body = bytearray()
    body += struct.pack("<II", VERSION, len(entries))
    for name, arr in entries:
        if arr.dtype not in _CODES:
            raise WeightFormatError(f"unsupported dtype {arr.dtype}")
        nb = name.encode()
        body += struct.pack("<H", len(nb)) + nb
        body += struct.pack("<BB", _CODES[arr.dtype], arr.ndim)
        body += struct.pack(f"<{arr.ndim}I", *arr.shape)
    for _, arr in entries:
        body += np.ascontiguousarray(arr).astype(arr.dtype.newbyteorder("<")).tobytes()
    crc = zlib.crc32(bytes(body))
    Path(path).write_bytes(MAGIC + bytes(body) + struct.pack("<I", crc))


def load_weights(path: str | Path) -> list[tuple[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise WeightFormatError("bad magic")
    body, (crc,) = raw[4:-4], struct.unpack("<I", raw[-4:])
    if zlib.crc32(body) != crc:
        raise WeightFormatError("CRC mismatch")
    off = 0

    def take(fmt: str):
        nonlocal off
        size = struct.calcsize(fmt)
        vals = struct.unpack_from(fmt, body, off)
        off += size
        return vals

    version, count = take("<II")
    if version != VERSION:
        raise WeightFormatError(f"unsupported version {version}")
    headers = []
    for _ in range(count):
        (nlen,) = take("<H")
        name = body[off:off + nlen].decode()
        off += nlen
        code, ndim = take("<BB")
        shape = take(f"<{ndim}I") if ndim else ()
        headers.append((name, _DTYPES[code], tuple(shape)))
    entries = []
    for name, dt, shape in headers:
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(body, dtype=dt, count=n, offset=off).reshape(shape)
        off += n * dt.itemsize
        entries.append((name, arr.astype(dt.newbyteorder("="))))
    if off != len(body):
        raise WeightFormatError("trailing bytes in weight file")
    return entries
