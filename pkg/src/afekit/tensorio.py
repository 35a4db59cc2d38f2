"""Tensor interchange files.

Layout: one line of JSON (the header) terminated by ``\\n``, then the raw
little-endian float32 payload in row-major order. The header always has
``shape``, ``dtype`` ("f32") and ``kind``; kinds add their own fields
(``rate_hz``/``dim`` for embeddings, ``fps`` for aligned windows, ...).

A path of ``"-"`` means stdin/stdout.
"""

import io
import json
import sys

import numpy as np

from .errors import FormatError, ShapeError

KINDS = ("mel", "emb", "aligned", "img", "feat")
_DTYPE = np.dtype("<f4")


def encode_tensor(array, kind, **extra):
    """Return the file bytes for ``array`` (cast to float32)."""
    if kind not in KINDS:
        raise ValueError(f"unknown tensor kind {kind!r}")
    arr = np.ascontiguousarray(array, dtype=_DTYPE)
    header = {"shape": list(arr.shape), "dtype": "f32", "kind": kind}
    header.update(extra)
    line = json.dumps(header, separators=(",", ":")).encode("utf-8")
    return line + b"\n" + arr.tobytes(order="C")


def decode_tensor(data):
    """Parse bytes produced by :func:`encode_tensor`; returns ``(array, header)``."""
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("tensor file has no header line")
    try:
        header = json.loads(data[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unparseable tensor header: {exc}") from None
    if not isinstance(header, dict):
        raise FormatError("tensor header is not a JSON object")
    for key in ("shape", "dtype", "kind"):
        if key not in header:
            raise FormatError(f"tensor header missing field {key!r}")
    if header["dtype"] != "f32":
        raise FormatError(f"unsupported tensor dtype {header['dtype']!r}")
    shape = header["shape"]
    if not isinstance(shape, list) or not all(isinstance(d, int) and d >= 0 for d in shape):
        raise ShapeError(f"invalid tensor shape {shape!r}")
    payload = data[nl + 1:]
    expected = int(np.prod(shape, dtype=np.int64)) * _DTYPE.itemsize
    if len(payload) != expected:
        raise FormatError(
            f"payload is {len(payload)} bytes, header shape {shape} needs {expected}"
        )
    arr = np.frombuffer(payload, dtype=_DTYPE).reshape(shape).astype(np.float32)
    return arr, header


def write_tensor(path, array, kind, **extra):
    data = encode_tensor(array, kind, **extra)
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    with open(path, "wb") as fh:
        fh.write(data)


def read_tensor(path, kind=None):
    """Read a tensor file, optionally insisting on a particular ``kind``."""
    if path == "-":
        data = sys.stdin.buffer.read()
    elif isinstance(path, (bytes, bytearray)):
        data = bytes(path)
    elif isinstance(path, io.IOBase):
        data = path.read()
    else:
        with open(path, "rb") as fh:
            data = fh.read()
    arr, header = decode_tensor(data)
    if kind is not None and header["kind"] != kind:
        raise FormatError(f"expected tensor kind {kind!r}, got {header['kind']!r}")
    return arr, header


def is_tensor_file(path):
    """Cheap sniff: does the file start with a JSON tensor header?"""
    with open(path, "rb") as fh:
        head = fh.read(1)
    return head == b"{"
