"""Binary PPM (P6, 8-bit) image storage.

All images in the lab are float arrays of shape (H, W, 3) with values in
[0, 1]. Quantization to 8-bit happens exactly once, at write time, via
round(v * 255); reads divide by 255. This keeps the on-disk format bit-exact
and trivially reimplementable.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from mialab.errors import DimensionError, FormatError, StorageError


def write_ppm(path: str | Path, img: np.ndarray) -> None:
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) image, got shape {img.shape}")
    h, w = img.shape[:2]
    data = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    try:
        Path(path).write_bytes(header + data.tobytes())
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def read_ppm(path: str | Path) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    if not raw.startswith(b"P6"):
        raise FormatError(f"{path}: not a binary PPM (P6) file")
    # header is three whitespace-separated tokens after the magic: w h maxval
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PPM header")
        fields.append(int(raw[start:pos]))
    pos += 1  # single whitespace byte after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    expected = w * h * 3
    body = raw[pos : pos + expected]
    if len(body) != expected:
        raise FormatError(f"{path}: expected {expected} pixel bytes, got {len(body)}")
    data = np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3)
    return data.astype(np.float32) / 255.0
