"""Flat binary checkpoint container.

Layout (documented contract, little-endian throughout):

    line 1:  `streamlearn-checkpoint v1`
    header:  `key = value` lines (precision, model config, counters,
             serialized RNG states); terminated by a line reading `BINARY`
    records: repeated until EOF, one per tensor:
               u32  name length, then that many UTF-8 bytes
               u8   dtype code (0=f32 1=f64 2=i64 3=u8/bool)
               u32  ndim, then ndim u32 dims
               raw  row-major little-endian values

Tensors cover model parameters plus any optimizer, accumulator, anchor,
blind-baseline, and diagnostic state needed to resume a run bitwise.
"""
from __future__ import annotations

import struct

import numpy as np

MAGIC = "streamlearn-checkpoint v1"

_DTYPE_CODES = {
    np.dtype("<f4"): 0,
    np.dtype("<f8"): 1,
    np.dtype("<i8"): 2,
    np.dtype("u1"): 3,
}
_CODE_DTYPES = {v: k for k, v in _DTYPE_CODES.items()}


def _canonical(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    if arr.dtype == np.bool_:
        return arr.astype("u1")
    if arr.dtype.kind == "i" and arr.dtype != np.dtype("<i8"):
        return arr.astype("<i8")
    if arr.dtype not in _DTYPE_CODES:
        raise ValueError(f"unsupported checkpoint dtype {arr.dtype}")
    return arr.astype(arr.dtype.newbyteorder("<"), copy=False)


def save_checkpoint(path, header: dict, tensors: dict):
    """Write header key/values and named arrays to `path`."""
    with open(path, "wb") as f:
        f.write((MAGIC + "\n").encode())
        for key, value in header.items():
            text = str(value)
            if "\n" in text:
                raise ValueError(f"header value for {key!r} contains newline")
            f.write(f"{key} = {text}\n".encode())
        f.write(b"BINARY\n")
        for name, arr in tensors.items():
            arr = _canonical(np.asarray(arr))
            nb = name.encode()
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            f.write(struct.pack("<BI", _DTYPE_CODES[arr.dtype], arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())


def load_checkpoint(path):
    """Read a checkpoint; returns (header dict, name -> array dict)."""
    with open(path, "rb") as f:
        blob = f.read()
    newline = blob.index(b"\n")
    if blob[:newline].decode() != MAGIC:
        raise ValueError(f"{path}: not a streamlearn checkpoint")
    offset = newline + 1
    header = {}
    while True:
        end = blob.index(b"\n", offset)
        line = blob[offset:end].decode()
        offset = end + 1
        if line == "BINARY":
            break
        key, _, value = line.partition(" = ")
        header[key] = value
    tensors = {}
    while offset < len(blob):
        (name_len,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        name = blob[offset:offset + name_len].decode()
        offset += name_len
        code, ndim = struct.unpack_from("<BI", blob, offset)
        offset += 5
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        dtype = _CODE_DTYPES[code]
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=offset)
        offset += arr.nbytes
        tensors[name] = arr.reshape(shape).copy()
    return header, tensors
