"""Binary checkpoint format.

Layout (all integers little-endian):

    magic    8 bytes  b"GFXNET01"
    version  u32
    meta_len u32, then meta_len bytes of UTF-8 JSON (variant, arch, seed,
             filterbank checksum, anything else the trainer records)
    count    u32, then per tensor:
        name_len u16, name bytes
        dtype    u8 (0 = float32, 1 = float64, 2 = int64)
        rank     u8
        dims     rank * u32
        payload  row-major little-endian

Round-trips are bitwise exact for the supported dtypes.
"""

import json
import struct

import numpy as np

from ..errors import IOFailure

MAGIC = b"GFXNET01"
VERSION = 1

_DTYPES = {0: "<f4", 1: "<f8", 2: "<i8"}
_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1, np.dtype("int64"): 2}


def save_checkpoint(path, meta, tensors):
    """Write meta (JSON-able dict) and named arrays to path."""
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", VERSION)
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    blob += struct.pack("<I", len(meta_bytes))
    blob += meta_bytes
    blob += struct.pack("<I", len(tensors))
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        if arr.dtype not in _CODES:
            raise ValueError(f"{name}: unsupported dtype {arr.dtype}")
        name_bytes = name.encode("utf-8")
        blob += struct.pack("<H", len(name_bytes))
        blob += name_bytes
        blob += struct.pack("<BB", _CODES[arr.dtype], arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_checkpoint(path):
    """Read a checkpoint; returns (meta, {name: array})."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read checkpoint {path}: {exc}") from exc
    if blob[:8] != MAGIC:
        raise IOFailure(f"{path}: not a gfxlab checkpoint (bad magic)")
    off = 8
    (version,) = struct.unpack_from("<I", blob, off)
    off += 4
    if version != VERSION:
        raise IOFailure(f"{path}: unsupported checkpoint version {version}")
    (meta_len,) = struct.unpack_from("<I", blob, off)
    off += 4
    meta = json.loads(blob[off:off + meta_len].decode("utf-8"))
    off += meta_len
    (count,) = struct.unpack_from("<I", blob, off)
    off += 4
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, off)
        off += 2
        name = blob[off:off + name_len].decode("utf-8")
        off += name_len
        code, rank = struct.unpack_from("<BB", blob, off)
        off += 2
        dims = struct.unpack_from(f"<{rank}I", blob, off)
        off += 4 * rank
        dtype = np.dtype(_DTYPES[code])
        nbytes = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
        arr = np.frombuffer(blob[off:off + nbytes], dtype=dtype).reshape(dims)
        off += nbytes
        tensors[name] = arr.copy()
    return meta, tensors
