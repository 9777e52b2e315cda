"""Minimal IDX image reader for training data.

Big-endian headers, optional gzip (sniffed from the two-byte magic). Only
images are needed here; the autoencoder is unsupervised.
"""

from __future__ import annotations

import gzip
import struct

import numpy as np

IMAGE_MAGIC = 0x00000803


class IdxError(ValueError):
    """Raised for malformed IDX files."""


def load_images(path: str) -> np.ndarray:
    """Read an IDX image file into a float32 (count, rows, cols) array in [0, 1]."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    if len(raw) < 16:
        raise IdxError(f"{path}: too short for an IDX image header ({len(raw)} bytes)")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IMAGE_MAGIC:
        raise IdxError(f"{path}: bad image magic 0x{magic:08x}")
    expected = 16 + count * rows * cols
    if len(raw) != expected:
        raise IdxError(f"{path}: expected {expected} bytes, found {len(raw)}")
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, rows, cols)
    return pixels.astype(np.float32) / 255.0
