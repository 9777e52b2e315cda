"""Sensing models: complex Gaussian ensembles and a simulated single-pixel
terahertz diffraction setup.

The diffraction model follows the discrete diffraction transform (DDT): a
scene at distance d from the modulating masks and a single-pixel detector at
distance D behind the scene, with free-space propagation between planes given
by the discrete Fresnel kernel. Both a physically-ordered forward simulation
and the equivalent per-mask effective row representation are provided; they
agree to float precision and the tests hold them to 1e-10.
"""

from __future__ import annotations

import dataclasses
import struct

import numpy as np

from .numerics import Array, SeededRng, as_complex_matrix, as_vector, ensure_finite, gaussian_complex

OPERATOR_KINDS = ("gaussian", "diffraction")
_SENS_MAGIC = b"SENS"
_SENS_VERSION = 1
_KIND_CODES = {"gaussian": 0, "diffraction": 1}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}

MAX_DIFFRACTION_PIXELS = 4096

DEFAULT_WAVELENGTH_M = 0.856e-3
DEFAULT_PIXEL_PITCH_M = 0.5e-3
DEFAULT_GRID_SIDE = 28


@dataclasses.dataclass(frozen=True, eq=False)
class SensingOperator:
    """An m x n measurement matrix plus cached row energies.

    ``matrix`` rows are the measurement vectors in the bilinear convention:
    intensities are |matrix @ x|^2. Arrays are frozen after construction.
    """

    matrix: Array
    kind: str
    row_norms_sq: Array

    def __post_init__(self) -> None:
        if self.kind not in OPERATOR_KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        m = self.matrix
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError(f"operator matrix must be 2-D and non-empty, got shape {m.shape}")
        norms = np.sum(np.abs(m) ** 2, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("operator has a zero row; every measurement vector must be nonzero")
        if not np.allclose(norms, self.row_norms_sq, rtol=1e-12, atol=0.0):
            raise ValueError("row_norms_sq inconsistent with matrix")
        self.matrix.setflags(write=False)
        self.row_norms_sq.setflags(write=False)

    @classmethod
    def from_matrix(cls, matrix: Array, kind: str) -> "SensingOperator":
        m = as_complex_matrix(matrix, "operator matrix").copy()
        norms = np.sum(np.abs(m) ** 2, axis=1)
        return cls(matrix=m, kind=kind, row_norms_sq=norms)

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]


def gaussian_operator(rng: SeededRng, m: int, n: int) -> SensingOperator:
    """i.i.d. complex Gaussian operator with unit-second-moment entries."""
    return SensingOperator.from_matrix(gaussian_complex(rng, m, n), "gaussian")


def intensity_forward(operator: SensingOperator, x: Array) -> Array:
    """Measured intensities y = |A x|^2 (always >= 0, float64)."""
    v = as_vector(x)
    if v.shape[0] != operator.n:
        raise ValueError(f"signal length {v.shape[0]} does not match operator n = {operator.n}")
    u = operator.matrix @ v
    return np.abs(u) ** 2


@dataclasses.dataclass(frozen=True)
class DiffractionSpec:
    """Geometry of one free-space propagation step between square grids."""

    distance_m: float
    wavelength_m: float = DEFAULT_WAVELENGTH_M
    pixel_pitch_m: float = DEFAULT_PIXEL_PITCH_M
    grid_side: int = DEFAULT_GRID_SIDE

    def __post_init__(self) -> None:
        for field in ("distance_m", "wavelength_m", "pixel_pitch_m"):
            value = getattr(self, field)
            if not (value > 0.0) or not np.isfinite(value):
                raise ValueError(f"{field} must be positive and finite, got {value}")
        if self.grid_side < 1:
            raise ValueError(f"grid_side must be >= 1, got {self.grid_side}")
        if self.grid_side**2 > MAX_DIFFRACTION_PIXELS:
            raise ValueError(
                f"grid_side {self.grid_side} gives {self.grid_side ** 2} pixels; "
                f"dense kernels are capped at {MAX_DIFFRACTION_PIXELS}"
            )


def build_diffraction_matrix(spec: DiffractionSpec) -> Array:
    """Dense discrete Fresnel kernel between two coaxial pixel grids.

    Entry (k, j) couples source pixel j to target pixel k:
    (pitch^2 / (i lambda d)) exp(i 2 pi d / lambda)
    exp(i pi ((xk - xj)^2 + (yk - yj)^2) / (lambda d)),
    with pixel centers at (idx - (side-1)/2) * pitch. The kernel depends only
    on coordinate differences, so the matrix is symmetric.
    """
    side = spec.grid_side
    coords = (np.arange(side) - (side - 1) / 2.0) * spec.pixel_pitch_m
    xs, ys = np.meshgrid(coords, coords, indexing="xy")
    x = xs.ravel()
    y = ys.ravel()
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    lam, d = spec.wavelength_m, spec.distance_m
    prefactor = spec.pixel_pitch_m**2 / (1j * lam * d) * np.exp(1j * 2.0 * np.pi * d / lam)
    return prefactor * np.exp(1j * np.pi * (dx**2 + dy**2) / (lam * d))


@dataclasses.dataclass(frozen=True, eq=False)
class MaskSet:
    """Binary modulation patterns, one mask per measurement (rows of `masks`)."""

    masks: Array
    bernoulli_p: float

    def __post_init__(self) -> None:
        m = self.masks
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError(f"masks must be 2-D and non-empty, got shape {m.shape}")
        if m.dtype != np.float64 or not np.all((m == 0.0) | (m == 1.0)):
            raise ValueError("mask entries must be float64 zeros and ones")
        if not (0.0 < self.bernoulli_p < 1.0):
            raise ValueError(f"bernoulli_p must lie in (0, 1), got {self.bernoulli_p}")
        self.masks.setflags(write=False)

    @property
    def count(self) -> int:
        return self.masks.shape[0]

    @property
    def n(self) -> int:
        return self.masks.shape[1]


def generate_masks(rng: SeededRng, count: int, n: int, p: float = 0.5) -> MaskSet:
    if count < 1 or n < 1:
        raise ValueError(f"count and n must be >= 1, got ({count}, {n})")
    if not (0.0 < p < 1.0):
        raise ValueError(f"p must lie in (0, 1), got {p}")
    g = rng.generator()
    masks = (g.random((count, n)) < p).astype(np.float64)
    return MaskSet(masks=masks, bernoulli_p=p)


def effective_rows(masks: MaskSet, d_ms: Array, d_sd: Array) -> SensingOperator:
    """Collapse mask -> scene -> detector propagation into one row per mask.

    The single-pixel detector sums the field propagated from the scene plane,
    so each mask a_i contributes the scalar sum_k (D_sd diag(x) D_ms a_i)_k =
    sum_j w_j (D_ms a_i)_j x_j with w = D_sd^T 1. Stored rows are the
    conjugates (D_sd^H 1) ⊙ (conj(D_ms) a_i): the elementwise weighting by the
    summed detector kernel applies after propagating the mask to the scene
    plane, and |row · x| then matches the physical chain exactly.
    """
    ms = as_complex_matrix(d_ms, "d_ms")
    sd = as_complex_matrix(d_sd, "d_sd")
    n = masks.n
    if ms.shape != (n, n) or sd.shape != (n, n):
        raise ValueError(
            f"propagation matrices must be ({n}, {n}) to match the masks, "
            f"got {ms.shape} and {sd.shape}"
        )
    w = sd.conj().T @ np.ones(n, dtype=np.complex128)
    rows = (masks.masks @ ms.conj().T) * w[None, :]
    return SensingOperator.from_matrix(rows, "diffraction")


def physical_forward(masks: MaskSet, d_ms: Array, d_sd: Array, x: Array) -> Array:
    """Intensities from the plane-by-plane simulation (no effective rows).

    Each mask is propagated to the scene plane, multiplied by the scene
    transmittance, propagated to the detector plane, and summed into the
    single detector bucket. Used as the independent reference for
    :func:`effective_rows`.
    """
    ms = as_complex_matrix(d_ms, "d_ms")
    sd = as_complex_matrix(d_sd, "d_sd")
    v = as_vector(x)
    n = masks.n
    if ms.shape != (n, n) or sd.shape != (n, n) or v.shape[0] != n:
        raise ValueError("masks, propagation matrices, and scene must share one grid size")
    field_at_scene = ms @ masks.masks.T.astype(np.complex128)  # (n, count)
    transmitted = v[:, None] * field_at_scene
    at_detector = sd @ transmitted
    bucket = at_detector.sum(axis=0)
    return np.abs(bucket) ** 2


def save_operator(operator: SensingOperator, path: str) -> None:
    """Write an operator to the fixed binary layout (see load_operator)."""
    header = struct.pack(
        "<4sIBII", _SENS_MAGIC, _SENS_VERSION, _KIND_CODES[operator.kind], operator.m, operator.n
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(operator.matrix, dtype="<c16").tobytes())


def load_operator(path: str) -> SensingOperator:
    """Read an operator written by save_operator.

    Layout: magic "SENS", u32 version, u8 kind (0 gaussian / 1 diffraction),
    u32 m, u32 n, then m*n little-endian float64 (re, im) pairs row-major.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    header_size = struct.calcsize("<4sIBII")
    if len(raw) < header_size:
        raise ValueError(f"operator file truncated: {len(raw)} bytes is too short for the header")
    magic, version, kind_code, m, n = struct.unpack_from("<4sIBII", raw, 0)
    if magic != _SENS_MAGIC:
        raise ValueError(f"not an operator file (magic {magic!r})")
    if version != _SENS_VERSION:
        raise ValueError(f"unsupported operator file version {version}")
    if kind_code not in _CODE_KINDS:
        raise ValueError(f"unknown operator kind code {kind_code}")
    expected = header_size + 16 * m * n
    if len(raw) < expected:
        raise ValueError(f"operator file truncated: expected {expected} bytes, found {len(raw)}")
    if len(raw) > expected:
        raise ValueError(f"operator file has {len(raw) - expected} trailing bytes")
    matrix = np.frombuffer(raw, dtype="<c16", count=m * n, offset=header_size).reshape(m, n)
    ensure_finite(matrix.view(np.float64), "operator matrix")
    return SensingOperator.from_matrix(matrix, _CODE_KINDS[kind_code])
