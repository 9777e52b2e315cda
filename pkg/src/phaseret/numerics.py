"""Shared dense complex linear algebra and seeded randomness.

Conventions used throughout the package: matrices are 2-D complex128 ndarrays
in row-major layout, vectors are 1-D, and ``matvec`` is the plain bilinear
product M @ v (no implicit conjugation). Anything random flows from a
:class:`SeededRng`, which is a pure function of its integer seed.
"""

from __future__ import annotations

import dataclasses

import numpy as np

Array = np.ndarray

_POWER_START_SEED = 0x9E3779B97F4A7C15  # fixed internal stream for power iteration starts


@dataclasses.dataclass(frozen=True)
class SeededRng:
    """Immutable handle on a PCG64 stream.

    ``generator()`` always returns a fresh ``np.random.Generator`` seeded the
    same way, so a SeededRng can be reused or shipped to a worker process
    without any shared mutable state. ``split`` derives statistically
    independent child streams from integer keys; the same keys always yield
    the same child.
    """

    seed: int

    def __post_init__(self) -> None:
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed))

    def split(self, *keys: int) -> "SeededRng":
        for k in keys:
            if not isinstance(k, (int, np.integer)) or k < 0:
                raise ValueError(f"split keys must be non-negative integers, got {k!r}")
        child = np.random.SeedSequence([self.seed, *[int(k) for k in keys]])
        return SeededRng(int(child.generate_state(1, dtype=np.uint64)[0]))


def ensure_finite(arr: Array, name: str) -> None:
    # np.isfinite on complex arrays checks both parts
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")


def as_complex_matrix(matrix: Array, name: str = "matrix") -> Array:
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    m = m.astype(np.complex128, copy=False)
    ensure_finite(m, name)
    return m


def as_vector(vector: Array, name: str = "vector", dtype=np.complex128) -> Array:
    v = np.asarray(vector)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    v = v.astype(dtype, copy=False)
    ensure_finite(v, name)
    return v


def matvec(matrix: Array, vector: Array) -> Array:
    """Bilinear product M @ v in complex128; real inputs are promoted."""
    m = as_complex_matrix(matrix)
    v = as_vector(vector)
    if m.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: matrix is {m.shape}, vector has length {v.shape[0]}")
    return m @ v


def hermitian_transpose(matrix: Array) -> Array:
    return as_complex_matrix(matrix).conj().T


def power_iteration(matrix: Array, iters: int = 200, tol: float = 1e-8) -> tuple[float, Array]:
    """Leading eigenpair of a Hermitian matrix.

    Starts from a fixed internally seeded complex vector so the output is a
    deterministic function of the input matrix and the budget. Stops early
    when consecutive Rayleigh quotients differ by less than ``tol``.
    Returns ``(eigenvalue, unit eigenvector)``; the eigenvector is defined up
    to a global phase.
    """
    m = as_complex_matrix(matrix)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"power_iteration needs a square matrix, got {m.shape}")
    if iters < 1:
        raise ValueError("iters must be >= 1")
    n = m.shape[0]
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.conj().T).max() > 1e-10 * scale:
        raise ValueError("power_iteration needs a Hermitian matrix")

    g = np.random.Generator(np.random.PCG64(_POWER_START_SEED))
    v = g.standard_normal(n) + 1j * g.standard_normal(n)
    v /= np.linalg.norm(v)
    rayleigh = float(np.real(np.vdot(v, m @ v)))
    for _ in range(iters):
        w = m @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # v is in the kernel; any unit vector is as dominant as it gets
            return 0.0, v
        v = w / norm
        new_rayleigh = float(np.real(np.vdot(v, m @ v)))
        if abs(new_rayleigh - rayleigh) < tol:
            rayleigh = new_rayleigh
            break
        rayleigh = new_rayleigh
    return rayleigh, v


def numerical_rank(matrix: Array, rel_tol: float) -> int:
    """Count singular values above rel_tol times the largest.

    Uses a full SVD rather than a Gram eigendecomposition: squaring would put
    the noise floor at sqrt(machine eps), too coarse for tolerances near 1e-8.
    """
    m = as_complex_matrix(matrix)
    if m.size == 0:
        raise ValueError("numerical_rank needs a non-empty matrix")
    if not (0.0 < rel_tol < 1.0):
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    sigma = np.linalg.svd(m, compute_uv=False)
    top = sigma[0]
    if top == 0.0:
        return 0
    return int(np.count_nonzero(sigma > rel_tol * top))


def gaussian_complex(rng: SeededRng, rows: int, cols: int) -> Array:
    """Complex Gaussian matrix with i.i.d. entries of unit second moment.

    Real and imaginary parts are independent N(0, 1/2), so E|a_ij|^2 = 1.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"rows and cols must be >= 1, got ({rows}, {cols})")
    g = rng.generator()
    return np.sqrt(0.5) * (g.standard_normal((rows, cols)) + 1j * g.standard_normal((rows, cols)))


def phase_align_to_real(v: Array) -> Array:
    """Rotate a complex vector by the global phase that maximizes its real energy.

    theta = angle(sum v_j^2) / 2; returns Re(e^{-i theta} v). For a vector that
    is already real this is the identity. The result is defined up to sign
    (both theta and theta + pi maximize the real energy); np.angle's branch
    makes the choice deterministic.
    """
    v = as_vector(v)
    s = np.sum(v * v)
    theta = 0.5 * np.angle(s) if s != 0 else 0.0
    return np.real(np.exp(-1j * theta) * v)
