"""Binary model files.

Layout (all little-endian)::

    b"SHEX"                      magic
    u32                          format version (currently 1)
    u64 d, u64 q, u64 s
    f64[s * d]                   sample points, row-major
    f64[s]                       weights z
    u64                          checksum

The checksum is BLAKE2b with an 8-byte digest over every byte between the
magic and the checksum, read as a little-endian u64.
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidParameterError, FileAccessError
from .harmonics import MAX_DEGREE, ProblemParams
from .regression import ExpansionModel

MAGIC = b"SHEX"
VERSION = 1
_HEADER = struct.Struct("<IQQQ")
_CHECKSUM = struct.Struct("<Q")


def _checksum(payload: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def serialize_model(model: ExpansionModel) -> bytes:
    d, q, s = model.params.d, model.params.q, model.s
    payload = b"".join((
        _HEADER.pack(VERSION, d, q, s),
        np.ascontiguousarray(model.points, dtype="<f8").tobytes(),
        np.ascontiguousarray(model.weights, dtype="<f8").tobytes(),
    ))
    return MAGIC + payload + _CHECKSUM.pack(_checksum(payload))


def deserialize_model(data: bytes) -> ExpansionModel:
    data = bytes(data)
    if len(data) < len(MAGIC) + _HEADER.size + _CHECKSUM.size:
        raise FormatError(f"model stream truncated: {len(data)} bytes is shorter than the header")
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    version, d, q, s = _HEADER.unpack_from(data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported format version {version} (this build reads {VERSION})")
    if d < 2 or q > MAX_DEGREE or s < 1:
        raise FormatError(f"inconsistent header: d={d}, q={q}, s={s}")
    body = 4 + _HEADER.size
    n_points, n_weights = s * d * 8, s * 8
    have = len(data) - body - _CHECKSUM.size
    if have < n_points:
        raise FormatError(f"points: header promises s*d = {s * d} coordinates, stream holds {max(have, 0) // 8}")
    if have != n_points + n_weights:
        raise FormatError(
            f"weights: header promises s = {s} weight records, stream holds {(have - n_points) / 8:g}")
    payload = data[4:len(data) - _CHECKSUM.size]
    (stored,) = _CHECKSUM.unpack_from(data, len(data) - _CHECKSUM.size)
    if stored != _checksum(payload):
        raise FormatError("checksum mismatch: model stream is corrupted")
    points = np.frombuffer(data, dtype="<f8", count=s * d, offset=body).reshape(s, d).astype(np.float64)
    weights = np.frombuffer(data, dtype="<f8", count=s, offset=body + n_points).astype(np.float64)
    try:
        params = ProblemParams(int(d), int(q))
    except InvalidParameterError as exc:
        raise FormatError(f"inconsistent header: {exc}") from exc
    return ExpansionModel(points, weights, params)


def atomic_write(path, data: bytes | str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    except OSError as exc:
        raise FileAccessError(f"cannot write {path}: {exc.strerror or exc}") from exc
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        # mkstemp creates 0600; give the file the permissions open() would have
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except OSError as exc:
        Path(tmp).unlink(missing_ok=True)
        raise FileAccessError(f"cannot write {path}: {exc.strerror or exc}") from exc


def save_model(model: ExpansionModel, path) -> None:
    atomic_write(path, serialize_model(model))


def load_model(path) -> ExpansionModel:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise FileAccessError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return deserialize_model(data)
