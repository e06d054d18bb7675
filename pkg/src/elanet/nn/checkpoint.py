"""Versioned binary checkpoints.

Byte layout (all integers little-endian):

    offset  size  field
    0       8     magic b"ELANETCP"
    8       4     format version, uint32 (currently 1)
    12      4     tensor count, uint32
    --- repeated per tensor, in parameter order ---
            2     name length, uint16
            *     name, UTF-8
            1     ndim, uint8
            4*nd  shape, uint32 each
    --- after the manifest ---
            *     tensor data, float32 little-endian, C order,
                  concatenated in manifest order

Writes go to a temp file in the target directory followed by an atomic
rename, so a failed write never leaves a partial checkpoint behind.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import ElanetError
from ..fileio import atomic_write_bytes
from .network import Params

MAGIC = b"ELANETCP"
VERSION = 1


def save_checkpoint(params: Params, path: str | Path) -> None:
    path = Path(path)
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<II", VERSION, len(params))
    for name, tensor in params.items():
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded)) + encoded
        blob += struct.pack("<B", tensor.ndim)
        blob += struct.pack(f"<{tensor.ndim}I", *tensor.shape)
    for tensor in params.values():
        blob += np.ascontiguousarray(tensor, dtype="<f4").tobytes()
    atomic_write_bytes(path, bytes(blob))


def load_checkpoint(path: str | Path) -> Params:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ElanetError(f"{path}: not a checkpoint (bad magic)")
    version, count = struct.unpack_from("<II", data, 8)
    if version != VERSION:
        raise ElanetError(f"{path}: unsupported checkpoint version {version}")
    offset = 16
    manifest: list[tuple[str, tuple[int, ...]]] = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", data, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        manifest.append((name, shape))
    params: Params = {}
    for name, shape in manifest:
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=offset).reshape(shape)
        params[name] = arr.copy()
        offset += 4 * n
    if offset != len(data):
        raise ElanetError(f"{path}: {len(data) - offset} trailing bytes")
    return params
