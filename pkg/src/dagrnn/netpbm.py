"""Binary PPM (P6) and PGM (P5) reading and writing, 8-bit only."""
import numpy as np

from .errors import ParseError


def _tokens(data, count, start):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    out, pos = [], start
    while len(out) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ParseError("truncated header", pos)
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        begin = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tok = data[begin:pos]
        if not tok.isdigit():
            raise ParseError(f"expected a decimal number, found {tok[:16]!r}", begin)
        out.append(int(tok))
    # exactly one whitespace byte separates the header from the raster
    return out, pos + 1


def decode(data, expect=None):
    """Decode netpbm bytes to a ``uint8`` array (``[H, W]`` for P5, ``[H, W, 3]`` for P6)."""
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise ParseError(f"unsupported magic {magic!r}", 0)
    if expect is not None and magic != expect:
        raise ParseError(f"expected {expect.decode()} file, found {magic.decode()}", 0)
    (width, height, maxval), pos = _tokens(data, 3, 2)
    if width < 1 or height < 1:
        raise ParseError("image extents must be positive", 2)
    if maxval != 255:
        raise ParseError(f"only 8-bit files are supported (maxval {maxval})", pos - 1)
    channels = 3 if magic == b"P6" else 1
    n = width * height * channels
    raster = data[pos : pos + n]
    if len(raster) != n:
        raise ParseError(f"raster holds {len(raster)} of {n} bytes", pos + len(raster))
    arr = np.frombuffer(raster, dtype=np.uint8)
    return arr.reshape(height, width, 3) if channels == 3 else arr.reshape(height, width)


def encode(arr):
    arr = np.asarray(arr)
    if arr.dtype != np.uint8:
        raise ValueError(f"netpbm encode needs uint8 data, got {arr.dtype}")
    if arr.ndim == 2:
        magic = b"P5"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot encode array of shape {arr.shape}")
    h, w = arr.shape[:2]
    return magic + f"\n{w} {h}\n255\n".encode() + np.ascontiguousarray(arr).tobytes()


def read_ppm(path):
    with open(path, "rb") as fh:
        return decode(fh.read(), b"P6")


def read_pgm(path):
    with open(path, "rb") as fh:
        return decode(fh.read(), b"P5")


def write(path, arr):
    with open(path, "wb") as fh:
        fh.write(encode(arr))
