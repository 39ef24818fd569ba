"""Binary predictor output streams.

``VAPD`` v1 carries one 256-way label distribution per frame, ``VAPT`` v1 one
turn-hold probability per frame.  Layout (little-endian)::

    magic   4 bytes   b"VAPD" or b"VAPT"
    version u32       1
    rate    f32       frames per second
    n       u32       number of frames
    data    n * k * f32   (k = 256 for VAPD, 1 for VAPT)
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

import numpy as np

HEADER = struct.Struct("<4sIfI")
VERSION = 1
WIDTH = {b"VAPD": 256, b"VAPT": 1}


class StreamFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Stream:
    kind: bytes
    frame_rate: float
    data: np.ndarray  # (n_frames, 256) or (n_frames,)


def encode_stream(data: np.ndarray, frame_rate: float, kind: bytes | None = None) -> bytes:
    data = np.asarray(data)
    if kind is None:
        kind = b"VAPT" if data.ndim == 1 else b"VAPD"
    if kind not in WIDTH:
        raise StreamFormatError(f"unknown stream kind {kind!r}")
    rows = data.reshape(len(data), WIDTH[kind]) if len(data) else data.reshape(0, WIDTH[kind])
    return HEADER.pack(kind, VERSION, frame_rate, len(rows)) + rows.astype("<f4").tobytes()


def decode_stream(buf: bytes) -> Stream:
    if len(buf) < HEADER.size:
        raise StreamFormatError(f"truncated header ({len(buf)} bytes)")
    magic, version, rate, n = HEADER.unpack_from(buf)
    if magic not in WIDTH:
        raise StreamFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise StreamFormatError(f"unsupported {magic.decode()} version {version}")
    k = WIDTH[magic]
    need = HEADER.size + 4 * n * k
    if len(buf) < need:
        raise StreamFormatError(f"truncated stream: header declares {n} frames, payload has "
                                f"{(len(buf) - HEADER.size) // (4 * k)}")
    data = np.frombuffer(buf, dtype="<f4", count=n * k, offset=HEADER.size).astype(np.float64)
    data = data.reshape(n, k) if k > 1 else data
    return Stream(magic, float(rate), data)


def write_stream(path_or_fh: str | Path | BinaryIO, data: np.ndarray, frame_rate: float,
                 kind: bytes | None = None) -> None:
    payload = encode_stream(data, frame_rate, kind)
    if isinstance(path_or_fh, (str, Path)):
        Path(path_or_fh).write_bytes(payload)
    else:
        path_or_fh.write(payload)


def read_stream(path_or_fh: str | Path | BinaryIO | bytes) -> Stream:
    if isinstance(path_or_fh, (bytes, bytearray)):
        return decode_stream(bytes(path_or_fh))
    if isinstance(path_or_fh, (str, Path)):
        return decode_stream(Path(path_or_fh).read_bytes())
    if isinstance(path_or_fh, io.IOBase) or hasattr(path_or_fh, "read"):
        return decode_stream(path_or_fh.read())
    raise TypeError(f"cannot read stream from {type(path_or_fh)!r}")
