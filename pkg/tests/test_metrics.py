import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaseret.metrics import (
    SSIM_K1,
    SSIM_K2,
    SSIM_SIGMA,
    SSIM_WINDOW,
    gaussian_window,
    psnr,
    score,
    sign_align,
    ssim,
)


def rand_image(seed, side, low=0.0, high=1.0):
    g = np.random.Generator(np.random.PCG64(seed))
    return g.uniform(low, high, size=side * side)


class TestSignAlign:
    def test_keeps_matching_sign(self):
        ref = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(sign_align(ref * 0.5, ref), ref * 0.5)

    def test_flips_opposed_candidate(self):
        ref = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(sign_align(-ref, ref), ref)

    def test_zero_dot_keeps_candidate(self):
        cand = np.array([1.0, -1.0])
        assert np.array_equal(sign_align(cand, np.array([1.0, 1.0])), cand)

    def test_idempotent(self):
        g = np.random.Generator(np.random.PCG64(5))
        cand = g.normal(size=40)
        ref = g.normal(size=40)
        once = sign_align(cand, ref)
        assert np.array_equal(sign_align(once, ref), once)

    @given(st.integers(0, 10**9))
    @settings(max_examples=50, deadline=None)
    def test_never_farther_than_flip(self, seed):
        g = np.random.Generator(np.random.PCG64(seed))
        cand = g.normal(size=16)
        ref = g.normal(size=16)
        aligned = sign_align(cand, ref)
        assert np.linalg.norm(aligned - ref) <= np.linalg.norm(-aligned - ref) + 1e-12


class TestPsnr:
    def test_identical_is_infinite(self):
        img = rand_image(6, 8)
        assert psnr(img, img) == float("inf")

    def test_constant_offset_gives_twenty_db(self):
        ref = rand_image(7, 8, low=0.0, high=0.5)
        assert abs(psnr(ref + 0.1, ref) - 20.0) < 1e-9

    def test_matches_scalar_loop(self):
        cand = rand_image(8, 6)
        ref = rand_image(9, 6)
        acc = 0.0
        for a, b in zip(cand, ref):
            acc += (a - b) ** 2
        expected = 10.0 * np.log10(1.0 / (acc / cand.size))
        assert abs(psnr(cand, ref) - expected) < 1e-12

    def test_symmetric(self):
        cand = rand_image(10, 6)
        ref = rand_image(11, 6)
        assert psnr(cand, ref) == psnr(ref, cand)

    def test_decreases_with_noise_level(self):
        ref = rand_image(12, 8)
        noise = rand_image(13, 8) - 0.5
        values = [psnr(ref + s * noise, ref) for s in (0.01, 0.1, 1.0)]
        assert values[0] > values[1] > values[2]

    def test_peak_validation(self):
        img = rand_image(14, 4)
        with pytest.raises(ValueError):
            psnr(img, img, peak=0.0)


def ssim_loop_oracle(img1, img2, size):
    """Per-window loop over valid positions; weighted stats computed longhand."""
    win = gaussian_window(size, SSIM_SIGMA)
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    h, w = img1.shape
    total = 0.0
    count = 0
    for top in range(h - size + 1):
        for left in range(w - size + 1):
            # convolution flips the kernel; the window is symmetric so a
            # plain weighted patch sum is the same thing
            p1 = img1[top : top + size, left : left + size]
            p2 = img2[top : top + size, left : left + size]
            mu1 = float((win * p1).sum())
            mu2 = float((win * p2).sum())
            var1 = float((win * p1 * p1).sum()) - mu1**2
            var2 = float((win * p2 * p2).sum()) - mu2**2
            cov = float((win * p1 * p2).sum()) - mu1 * mu2
            total += ((2 * mu1 * mu2 + c1) * (2 * cov + c2)) / (
                (mu1**2 + mu2**2 + c1) * (var1 + var2 + c2)
            )
            count += 1
    return total / count


class TestSsim:
    def test_identical_is_one(self):
        img = rand_image(20, 16)
        assert ssim(img, img, 16, 16) == pytest.approx(1.0, abs=1e-12)

    def test_inversion_scores_low(self):
        img = rand_image(21, 16)
        assert ssim(1.0 - img, img, 16, 16) < 0.5

    def test_matches_window_loop(self):
        img1 = rand_image(22, 16)
        img2 = np.clip(img1 + 0.2 * (rand_image(23, 16) - 0.5), 0.0, 1.0)
        expected = ssim_loop_oracle(img1.reshape(16, 16), img2.reshape(16, 16), SSIM_WINDOW)
        assert abs(ssim(img1, img2, 16, 16) - expected) < 1e-12

    def test_small_image_fallback_window(self):
        # 8x8 cannot hold an 11x11 window; the largest odd fit is 7
        img1 = rand_image(24, 8)
        img2 = np.clip(img1 + 0.1 * (rand_image(25, 8) - 0.5), 0.0, 1.0)
        expected = ssim_loop_oracle(img1.reshape(8, 8), img2.reshape(8, 8), 7)
        assert abs(ssim(img1, img2, 8, 8) - expected) < 1e-12

    def test_matches_skimage(self):
        skmetrics = pytest.importorskip("skimage.metrics")
        img1 = rand_image(26, 28).reshape(28, 28)
        img2 = np.clip(img1 + 0.3 * (rand_image(27, 28).reshape(28, 28) - 0.5), 0.0, 1.0)
        reference = skmetrics.structural_similarity(
            img1,
            img2,
            gaussian_weights=True,
            sigma=SSIM_SIGMA,
            use_sample_covariance=False,
            data_range=1.0,
        )
        assert abs(ssim(img1.ravel(), img2.ravel(), 28, 28) - reference) < 1e-7

    def test_symmetric(self):
        img1 = rand_image(28, 16)
        img2 = rand_image(29, 16)
        assert ssim(img1, img2, 16, 16) == pytest.approx(ssim(img2, img1, 16, 16), abs=1e-12)

    def test_rejects_tiny_images(self):
        img = np.zeros(4)
        with pytest.raises(ValueError, match="3 pixels"):
            ssim(img, img, 2, 2)

    def test_rectangular_image(self):
        g = np.random.Generator(np.random.PCG64(30))
        img1 = g.uniform(size=(12, 20))
        img2 = np.clip(img1 + 0.1 * (g.uniform(size=(12, 20)) - 0.5), 0.0, 1.0)
        expected = ssim_loop_oracle(img1, img2, SSIM_WINDOW)
        assert abs(ssim(img1.ravel(), img2.ravel(), 20, 12) - expected) < 1e-12


class TestGaussianWindow:
    def test_normalized_and_symmetric(self):
        win = gaussian_window(11, 1.5)
        assert win.shape == (11, 11)
        assert abs(win.sum() - 1.0) < 1e-12
        assert np.allclose(win, win.T)
        assert np.allclose(win, win[::-1, ::-1])
        assert win[5, 5] == win.max()

    def test_rejects_even_size(self):
        with pytest.raises(ValueError):
            gaussian_window(10, 1.5)


class TestScore:
    def test_perfect_reconstruction(self):
        ref = rand_image(31, 16)
        q = score(-ref, ref, 16, 16)
        assert q.aligned_rel_error == 0.0
        assert q.psnr_db == float("inf")
        assert q.ssim == pytest.approx(1.0, abs=1e-12)

    def test_relative_error_definition(self):
        ref = rand_image(32, 16)
        cand = ref + 0.05
        q = score(cand, ref, 16, 16)
        expected = np.linalg.norm(cand - ref) / np.linalg.norm(ref)
        assert q.aligned_rel_error == pytest.approx(expected, rel=1e-12)
