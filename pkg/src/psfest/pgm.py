"""Portable graymap (PGM) reader and writer.

Supports the binary (P5) and ASCII (P2) variants at 8 or 16 bits.
Saving quantizes with round-half-even after an affine range map and
records that map in a sidecar text file next to the image, so restored
images remain comparable across runs.
"""

from __future__ import annotations

import numpy as np

from .lattice import LatticeSignal

__all__ = [
    "load_image",
    "save_image",
    "MalformedHeaderError",
    "DepthMismatchError",
    "TruncatedPayloadError",
]


class MalformedHeaderError(ValueError):
    pass


class DepthMismatchError(ValueError):
    pass


class TruncatedPayloadError(ValueError):
    pass


def _read_tokens(data: bytes, count: int):
    """First ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    i = 0
    n = len(data)
    while len(tokens) < count and i < n:
        c = data[i:i + 1]
        if c.isspace():
            i += 1
            continue
        if c == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j:j + 1].isspace():
            j += 1
        tokens.append(data[i:j])
        i = j
    return tokens, i


def load_image(path) -> LatticeSignal:
    """Read a P2 or P5 graymap into a float signal with offset 0."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, pos = _read_tokens(data, 4)
    if len(tokens) < 4:
        raise MalformedHeaderError("incomplete PGM header")
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise MalformedHeaderError(f"not a PGM file (magic {magic!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise MalformedHeaderError(f"non-numeric header field: {exc}") from exc
    if width <= 0 or height <= 0:
        raise MalformedHeaderError("non-positive image dimensions")
    if not (0 < maxval < 65536):
        raise DepthMismatchError(f"unsupported max value {maxval}")
    if magic == b"P5":
        payload = data[pos + 1:]          # single whitespace after maxval
        itemsize = 1 if maxval < 256 else 2
        need = width * height * itemsize
        if len(payload) < need:
            raise TruncatedPayloadError(
                f"payload holds {len(payload)} bytes, need {need}"
            )
        dtype = np.uint8 if itemsize == 1 else np.dtype(">u2")
        pixels = np.frombuffer(payload[:need], dtype=dtype).astype(float)
    else:
        vals, _ = _read_tokens(data[pos:], width * height)
        if len(vals) < width * height:
            raise TruncatedPayloadError(
                f"payload holds {len(vals)} samples, need {width * height}"
            )
        try:
            pixels = np.array([int(v) for v in vals], dtype=float)
        except ValueError as exc:
            raise TruncatedPayloadError(f"non-numeric sample: {exc}") from exc
    if pixels.max(initial=0) > maxval:
        raise DepthMismatchError("sample exceeds declared max value")
    return LatticeSignal((0, 0), pixels.reshape(height, width))


def save_image(signal: LatticeSignal, path, depth: int = 8,
               normalize: bool = False, ascii_format: bool = False):
    """Write a 2-D signal as PGM.

    depth 8 or 16 selects the max value (255 or 65535). With
    ``normalize=True`` the value range [min, max] is mapped onto the full
    depth; otherwise values are taken as already being in pixel units and
    are clipped. The applied affine map value -> (value - shift) * scale is
    recorded in ``<path>.meta.txt``.
    """
    if signal.dims != 2:
        raise ValueError("only 2-D signals can be written as graymaps")
    if depth not in (8, 16):
        raise DepthMismatchError(f"unsupported depth {depth}")
    maxval = 255 if depth == 8 else 65535
    vals = signal.values
    if normalize:
        lo, hi = float(vals.min()), float(vals.max())
        scale = maxval / (hi - lo) if hi > lo else 1.0
        shift = lo
    else:
        scale, shift = 1.0, 0.0
    mapped = (vals - shift) * scale
    pixels = np.clip(np.rint(mapped), 0, maxval)
    height, width = vals.shape
    path = str(path)
    if ascii_format:
        lines = [f"P2\n{width} {height}\n{maxval}\n"]
        flat = pixels.astype(int).ravel()
        for row in range(height):
            lines.append(" ".join(str(v) for v in flat[row * width:(row + 1) * width]) + "\n")
        with open(path, "w", newline="\n") as fh:
            fh.writelines(lines)
    else:
        dtype = np.uint8 if depth == 8 else np.dtype(">u2")
        with open(path, "wb") as fh:
            fh.write(f"P5\n{width} {height}\n{maxval}\n".encode())
            fh.write(pixels.astype(dtype).tobytes())
    with open(path + ".meta.txt", "w", newline="\n") as fh:
        fh.write(
            f"depth={depth}\nshift={shift:.17g}\nscale={scale:.17g}\n"
            f"map=pixel=(value-shift)*scale, round-half-even, clipped to [0,{maxval}]\n"
        )
