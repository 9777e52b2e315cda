"""Reconstruction quality metrics for real-valued images.

Phase retrieval recovers real signals only up to a global sign, so every
metric here first aligns the candidate's sign to the reference. PSNR uses a
fixed peak of 1.0 by default; SSIM follows the standard Gaussian-window
formulation (11x11, sigma 1.5, K1 = 0.01, K2 = 0.03, unit dynamic range)
evaluated at valid window positions only.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.signal import convolve2d

from .numerics import Array, as_vector

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def sign_align(candidate: Array, reference: Array) -> Array:
    """Flip the candidate's sign if that reduces distance to the reference."""
    c = as_vector(candidate, "candidate", dtype=np.float64)
    r = as_vector(reference, "reference", dtype=np.float64)
    if c.shape[0] != r.shape[0]:
        raise ValueError(f"length mismatch: {c.shape[0]} vs {r.shape[0]}")
    return c if float(np.dot(c, r)) >= 0.0 else -c


def psnr(candidate: Array, reference: Array, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give +inf."""
    c = as_vector(candidate, "candidate", dtype=np.float64)
    r = as_vector(reference, "reference", dtype=np.float64)
    if c.shape[0] != r.shape[0]:
        raise ValueError(f"length mismatch: {c.shape[0]} vs {r.shape[0]}")
    if not (peak > 0.0):
        raise ValueError(f"peak must be positive, got {peak}")
    mse = float(np.mean((c - r) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak**2 / mse)


def gaussian_window(size: int, sigma: float) -> Array:
    """Normalized 2-D Gaussian window (sums to 1)."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"window size must be odd and >= 1, got {size}")
    offsets = np.arange(size) - (size - 1) / 2.0
    w = np.exp(-(offsets**2) / (2.0 * sigma**2))
    win = np.outer(w, w)
    return win / win.sum()


def ssim(candidate: Array, reference: Array, width: int, height: int) -> float:
    """Mean structural similarity over valid window positions.

    Images smaller than the default 11-pixel window fall back to the largest
    odd window that fits; images smaller than 3 pixels on a side are
    rejected.
    """
    c = as_vector(candidate, "candidate", dtype=np.float64)
    r = as_vector(reference, "reference", dtype=np.float64)
    n = width * height
    if c.shape[0] != n or r.shape[0] != n:
        raise ValueError(f"images must have length {n} for {width}x{height}")
    shortest = min(width, height)
    if shortest < 3:
        raise ValueError(f"ssim needs images at least 3 pixels on a side, got {width}x{height}")
    size = min(SSIM_WINDOW, shortest if shortest % 2 == 1 else shortest - 1)
    win = gaussian_window(size, SSIM_SIGMA)

    img1 = c.reshape(height, width)
    img2 = r.reshape(height, width)
    mu1 = convolve2d(img1, win, mode="valid")
    mu2 = convolve2d(img2, win, mode="valid")
    var1 = convolve2d(img1 * img1, win, mode="valid") - mu1**2
    var2 = convolve2d(img2 * img2, win, mode="valid") - mu2**2
    cov = convolve2d(img1 * img2, win, mode="valid") - mu1 * mu2
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    score_map = ((2.0 * mu1 * mu2 + c1) * (2.0 * cov + c2)) / (
        (mu1**2 + mu2**2 + c1) * (var1 + var2 + c2)
    )
    return float(score_map.mean())


@dataclasses.dataclass(frozen=True)
class QualityScore:
    """Sign-aligned reconstruction quality: relative error, PSNR, SSIM."""

    aligned_rel_error: float
    psnr_db: float
    ssim: float


def score(candidate: Array, reference: Array, width: int, height: int) -> QualityScore:
    """Sign-align, then bundle relative error, PSNR, and SSIM."""
    aligned = sign_align(candidate, reference)
    ref_norm = float(np.linalg.norm(reference))
    err_norm = float(np.linalg.norm(aligned - np.asarray(reference, dtype=np.float64)))
    if ref_norm > 0.0:
        rel = err_norm / ref_norm
    else:
        rel = 0.0 if err_norm == 0.0 else float("inf")
    return QualityScore(
        aligned_rel_error=rel,
        psnr_db=psnr(aligned, reference),
        ssim=ssim(aligned, reference, width, height),
    )
