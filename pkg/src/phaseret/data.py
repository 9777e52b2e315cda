"""Image datasets: IDX-format digit files and jittered Shepp-Logan phantoms.

Images live as flattened float64 rows in [0, 1]. The IDX reader accepts both
raw and gzip-compressed files and validates magic numbers, counts, and sizes;
the phantom synthesizer derives one child seed per image so any image in a
dataset can be regenerated in isolation.
"""

from __future__ import annotations

import dataclasses
import gzip
import struct

import numpy as np

from .numerics import Array, SeededRng

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class IdxFormatError(ValueError):
    """Raised for malformed IDX files (bad magic, truncation, count mismatch)."""


@dataclasses.dataclass(eq=False)
class ImageDataset:
    """A stack of flattened grayscale images with values in [0, 1]."""

    images: Array
    width: int
    height: int
    source: str
    labels: Array | None = None

    def __post_init__(self) -> None:
        imgs = np.asarray(self.images, dtype=np.float64)
        if imgs.ndim != 2 or imgs.shape[1] != self.width * self.height:
            raise ValueError(
                f"images must be (count, {self.width * self.height}), got shape {imgs.shape}"
            )
        if imgs.size and (imgs.min() < 0.0 or imgs.max() > 1.0):
            raise ValueError("image values must lie in [0, 1]")
        if self.labels is not None and len(self.labels) != imgs.shape[0]:
            raise ValueError(
                f"{len(self.labels)} labels for {imgs.shape[0]} images"
            )
        self.images = imgs

    @property
    def count(self) -> int:
        return self.images.shape[0]


def _read_file(path: str) -> bytes:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def load_idx_images(path: str) -> Array:
    """Read an IDX image file into a (count, rows, cols) uint8 array."""
    raw = _read_file(path)
    if len(raw) < 16:
        raise IdxFormatError(f"{path}: too short for an IDX image header ({len(raw)} bytes)")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise IdxFormatError(f"{path}: bad image magic 0x{magic:08x}")
    expected = 16 + count * rows * cols
    if len(raw) < expected:
        raise IdxFormatError(f"{path}: truncated, expected {expected} bytes, found {len(raw)}")
    if len(raw) > expected:
        raise IdxFormatError(f"{path}: {len(raw) - expected} trailing bytes")
    return np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, rows, cols)


def load_idx_labels(path: str) -> Array:
    """Read an IDX label file into a (count,) uint8 array."""
    raw = _read_file(path)
    if len(raw) < 8:
        raise IdxFormatError(f"{path}: too short for an IDX label header ({len(raw)} bytes)")
    magic, count = struct.unpack(">II", raw[:8])
    if magic != IDX_LABEL_MAGIC:
        raise IdxFormatError(f"{path}: bad label magic 0x{magic:08x}")
    expected = 8 + count
    if len(raw) < expected:
        raise IdxFormatError(f"{path}: truncated, expected {expected} bytes, found {len(raw)}")
    if len(raw) > expected:
        raise IdxFormatError(f"{path}: {len(raw) - expected} trailing bytes")
    return np.frombuffer(raw, dtype=np.uint8, offset=8).copy()


def load_mnist(images_path: str, labels_path: str) -> ImageDataset:
    """Load an IDX image/label pair, scaling pixel values to [0, 1]."""
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"count mismatch: {images.shape[0]} images but {labels.shape[0]} labels"
        )
    count, rows, cols = images.shape
    flat = images.reshape(count, rows * cols).astype(np.float64) / 255.0
    return ImageDataset(images=flat, width=cols, height=rows, source="mnist", labels=labels)


def write_idx_images(path: str, images: Array) -> None:
    """Write a (count, rows, cols) uint8 stack as an IDX image file (.gz aware)."""
    arr = np.asarray(images)
    if arr.ndim != 3 or arr.dtype != np.uint8:
        raise ValueError(f"need a (count, rows, cols) uint8 array, got {arr.dtype} {arr.shape}")
    payload = struct.pack(">IIII", IDX_IMAGE_MAGIC, *arr.shape) + arr.tobytes()
    _write_maybe_gzip(path, payload)


def write_idx_labels(path: str, labels: Array) -> None:
    """Write a (count,) uint8 vector as an IDX label file (.gz aware)."""
    arr = np.asarray(labels)
    if arr.ndim != 1 or arr.dtype != np.uint8:
        raise ValueError(f"need a (count,) uint8 array, got {arr.dtype} {arr.shape}")
    payload = struct.pack(">II", IDX_LABEL_MAGIC, arr.shape[0]) + arr.tobytes()
    _write_maybe_gzip(path, payload)


def _write_maybe_gzip(path: str, payload: bytes) -> None:
    if path.endswith(".gz"):
        # mtime pinned so identical content gives identical bytes
        payload = gzip.compress(payload, mtime=0)
    with open(path, "wb") as fh:
        fh.write(payload)


@dataclasses.dataclass(frozen=True)
class Ellipse:
    """One additive ellipse: intensity, half axes, center, rotation (degrees)."""

    intensity: float
    half_width: float
    half_height: float
    center_x: float
    center_y: float
    rotation_deg: float


SHEPP_LOGAN_ELLIPSES: tuple[Ellipse, ...] = (
    Ellipse(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    Ellipse(-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    Ellipse(-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    Ellipse(-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    Ellipse(0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    Ellipse(0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    Ellipse(0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    Ellipse(0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    Ellipse(0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    Ellipse(0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)


@dataclasses.dataclass(frozen=True)
class PhantomSpec:
    """Base ellipse table plus jitter ranges for randomized phantoms."""

    ellipses: tuple[Ellipse, ...] = SHEPP_LOGAN_ELLIPSES
    center_jitter: float = 0.1
    axis_scale_range: tuple[float, float] = (0.8, 1.2)
    rotation_jitter_deg: float = 10.0
    width: int = 28
    height: int = 28
    rng: SeededRng = SeededRng(0)

    def __post_init__(self) -> None:
        if len(self.ellipses) < 1:
            raise ValueError("need at least one ellipse")
        if self.center_jitter < 0.0 or self.rotation_jitter_deg < 0.0:
            raise ValueError("jitter ranges must be >= 0")
        lo, hi = self.axis_scale_range
        if not (0.0 < lo <= hi):
            raise ValueError(f"axis_scale_range must satisfy 0 < lo <= hi, got ({lo}, {hi})")
        if self.width < 1 or self.height < 1:
            raise ValueError("width and height must be >= 1")


def rasterize_ellipses(ellipses: tuple[Ellipse, ...], width: int, height: int) -> Array:
    """Sum ellipse intensities at pixel centers and clamp to [0, 1].

    The unit square maps to [-1, 1]^2 with the y axis pointing up.
    """
    xs = 2.0 * (np.arange(width) + 0.5) / width - 1.0
    ys = 1.0 - 2.0 * (np.arange(height) + 0.5) / height
    grid_x, grid_y = np.meshgrid(xs, ys, indexing="xy")
    img = np.zeros((height, width))
    for e in ellipses:
        phi = np.deg2rad(e.rotation_deg)
        dx = grid_x - e.center_x
        dy = grid_y - e.center_y
        u = dx * np.cos(phi) + dy * np.sin(phi)
        v = -dx * np.sin(phi) + dy * np.cos(phi)
        inside = (u / e.half_width) ** 2 + (v / e.half_height) ** 2 <= 1.0
        img += e.intensity * inside
    return np.clip(img, 0.0, 1.0).ravel()


def _jitter_ellipses(spec: PhantomSpec, g: np.random.Generator) -> tuple[Ellipse, ...]:
    lo, hi = spec.axis_scale_range
    out = []
    for e in spec.ellipses:
        # fixed draw order per ellipse: center dx, dy, axis scale, rotation
        dx = g.uniform(-spec.center_jitter, spec.center_jitter)
        dy = g.uniform(-spec.center_jitter, spec.center_jitter)
        scale = g.uniform(lo, hi)
        drot = g.uniform(-spec.rotation_jitter_deg, spec.rotation_jitter_deg)
        out.append(
            Ellipse(
                intensity=e.intensity,
                half_width=e.half_width * scale,
                half_height=e.half_height * scale,
                center_x=e.center_x + dx,
                center_y=e.center_y + dy,
                rotation_deg=e.rotation_deg + drot,
            )
        )
    return tuple(out)


def synthesize_shepp_logan(spec: PhantomSpec, count: int) -> ImageDataset:
    """Generate `count` jittered phantoms; image i uses child seed split(i)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    images = np.empty((count, spec.width * spec.height))
    for i in range(count):
        g = spec.rng.split(i).generator()
        images[i] = rasterize_ellipses(_jitter_ellipses(spec, g), spec.width, spec.height)
    return ImageDataset(
        images=images, width=spec.width, height=spec.height, source="shepp-logan"
    )
