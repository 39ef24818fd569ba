import io
import struct

import numpy as np
import pytest

from fillerhold.streams import StreamFormatError, decode_stream, encode_stream, read_stream, write_stream


def test_vapd_roundtrip(tmp_path, rng):
    data = rng.dirichlet(np.ones(256), size=7).astype(np.float32)
    p = tmp_path / "x.vapd"
    write_stream(p, data, 50.0)
    s = read_stream(p)
    assert s.kind == b"VAPD" and s.frame_rate == 50.0
    np.testing.assert_array_equal(s.data, data)


def test_vapt_roundtrip_from_bytes(rng):
    v = rng.uniform(size=11).astype(np.float32)
    s = decode_stream(encode_stream(v, 25.0))
    assert s.kind == b"VAPT"
    np.testing.assert_array_equal(s.data, v)
    fh = io.BytesIO()
    write_stream(fh, v, 25.0)
    np.testing.assert_array_equal(read_stream(fh.getvalue()).data, v)


def test_header_layout():
    buf = encode_stream(np.array([0.5], np.float32), 50.0)
    magic, version, rate, n = struct.unpack_from("<4sIfI", buf)
    assert (magic, version, rate, n) == (b"VAPT", 1, 50.0, 1)
    assert len(buf) == 16 + 4


def test_bad_streams():
    good = encode_stream(np.zeros(3, np.float32), 50.0)
    with pytest.raises(StreamFormatError, match="magic"):
        decode_stream(b"XXXX" + good[4:])
    with pytest.raises(StreamFormatError, match="version"):
        decode_stream(good[:4] + struct.pack("<I", 9) + good[8:])
    with pytest.raises(StreamFormatError):
        decode_stream(good[:-2])
    with pytest.raises(StreamFormatError):
        decode_stream(good[:5])
