"""Image and perturbation files.

``.delta`` layout, all little-endian: 4-byte magic ``b"CFDL"``, uint16
version (1), uint16 channels, uint32 height, uint32 width, then
``C*H*W`` float32 values in C order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL.PngImagePlugin import PngInfo

from .errors import DimensionError

DELTA_MAGIC = b"CFDL"
DELTA_VERSION = 1
_HEADER = struct.Struct("<4sHHII")


def quantize_roundtrip(x: np.ndarray) -> np.ndarray:
    """Snap an image to the 8-bit grid: ``round(x * 255) / 255``, clipped."""
    return np.clip(np.round(np.asarray(x, dtype=np.float64) * 255.0), 0, 255) / 255.0


def save_png(path, x: np.ndarray, metadata: dict | None = None) -> None:
    """Write a float image as an 8-bit RGB PNG with optional text metadata."""
    arr = np.clip(np.round(np.asarray(x) * 255.0), 0, 255).astype(np.uint8)
    info = PngInfo()
    for key, value in (metadata or {}).items():
        info.add_text(key, value if isinstance(value, str) else json.dumps(value, sort_keys=True))
    PILImage.fromarray(np.transpose(arr, (1, 2, 0)), mode="RGB").save(path, format="PNG", pnginfo=info)


def load_png(path) -> np.ndarray:
    """Read any Pillow-readable image as a float64 ``(3, H, W)`` array in [0, 1]."""
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return np.ascontiguousarray(np.transpose(arr, (2, 0, 1)))


def png_metadata(path) -> dict:
    with PILImage.open(path) as im:
        return dict(im.text)


def write_delta(path, delta: np.ndarray) -> None:
    delta = np.asarray(delta)
    if delta.ndim != 3:
        raise DimensionError(f"delta must be (C, H, W), got {delta.shape}")
    c, h, w = delta.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(DELTA_MAGIC, DELTA_VERSION, c, h, w))
        fh.write(np.ascontiguousarray(delta, dtype="<f4").tobytes())


def read_delta(path) -> np.ndarray:
    """Read a ``.delta`` file; values come back as float32."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, c, h, w = _HEADER.unpack_from(raw)
    if magic != DELTA_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != DELTA_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    body = raw[_HEADER.size :]
    if len(body) != 4 * c * h * w:
        raise ValueError(f"{path}: expected {4 * c * h * w} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f4").reshape(c, h, w).astype(np.float32)
