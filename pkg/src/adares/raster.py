"""8-bit single-channel binary PGM (P5) reading and writing."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import IoError


def write_pgm(path: str | Path, image: np.ndarray) -> None:
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ValueError(f"PGM output needs a 2-D uint8 array, got {image.dtype} {image.shape}")
    h, w = image.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(np.ascontiguousarray(image).tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    out, pos = [], 0
    while len(out) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        out.append(data[start:pos])
    return out, pos + 1  # exactly one whitespace byte precedes the raster


def read_pgm(path: str | Path) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        (magic, w, h, maxval), offset = _tokens(data, 4)
        w, h, maxval = int(w), int(h), int(maxval)
    except (ValueError, IndexError) as exc:
        raise IoError(f"{path}: malformed PGM header") from exc
    if magic != b"P5" or maxval != 255:
        raise IoError(f"{path}: only 8-bit binary PGM (P5, maxval 255) is supported")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=offset) if len(data) >= offset + w * h else None
    if pixels is None:
        raise IoError(f"{path}: truncated raster")
    return pixels.reshape(h, w).copy()
