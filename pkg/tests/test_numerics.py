import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaseret.numerics import (
    SeededRng,
    gaussian_complex,
    hermitian_transpose,
    matvec,
    numerical_rank,
    phase_align_to_real,
    power_iteration,
)


def _random_complex(g, *shape):
    return g.standard_normal(shape) + 1j * g.standard_normal(shape)


class TestMatvec:
    def test_identity(self):
        v = np.array([1.0 + 2.0j, -3.0j, 4.0])
        assert np.array_equal(matvec(np.eye(3), v), v)

    def test_permutation(self):
        p = np.array([[0.0, 1.0], [1.0, 0.0]])
        out = matvec(p, np.array([1.0 + 1.0j, 2.0]))
        assert np.array_equal(out, np.array([2.0 + 0.0j, 1.0 + 1.0j]))

    def test_matches_scalar_loop(self):
        # oracle: summation written out entry by entry
        g = np.random.Generator(np.random.PCG64(42))
        m_mat = _random_complex(g, 5, 3)
        v = _random_complex(g, 3)
        expected = np.zeros(5, dtype=np.complex128)
        for i in range(5):
            for j in range(3):
                expected[i] += m_mat[i, j] * v[j]
        assert np.allclose(matvec(m_mat, v), expected, rtol=1e-12, atol=1e-12)

    def test_real_promoted_to_complex(self):
        out = matvec(np.array([[2.0]]), np.array([3.0]))
        assert out.dtype == np.complex128
        assert out[0] == 6.0 + 0.0j

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            matvec(np.eye(3), np.ones(4))

    def test_rejects_nan(self):
        bad = np.array([[np.nan, 0.0], [0.0, 1.0]])
        with pytest.raises(ValueError, match="NaN or Inf"):
            matvec(bad, np.ones(2))

    @given(st.integers(0, 10**9))
    @settings(max_examples=25, deadline=None)
    def test_linearity(self, seed):
        g = np.random.Generator(np.random.PCG64(seed))
        m_mat = _random_complex(g, 4, 4)
        u = _random_complex(g, 4)
        v = _random_complex(g, 4)
        alpha = complex(g.standard_normal(), g.standard_normal())
        lhs = matvec(m_mat, alpha * u + v)
        rhs = alpha * matvec(m_mat, u) + matvec(m_mat, v)
        assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10)


class TestHermitianTranspose:
    def test_imaginary_unit(self):
        assert hermitian_transpose(np.array([[1.0j]]))[0, 0] == -1.0j

    def test_real_symmetric_unchanged(self):
        s = np.array([[2.0, 1.0], [1.0, 3.0]])
        assert np.array_equal(hermitian_transpose(s), s)

    def test_involution_exact(self):
        g = np.random.Generator(np.random.PCG64(1))
        m_mat = _random_complex(g, 4, 6)
        assert np.array_equal(hermitian_transpose(hermitian_transpose(m_mat)), m_mat)

    def test_adjoint_identity(self):
        # <M x, y> == <x, M^H y> with the Hermitian inner product
        g = np.random.Generator(np.random.PCG64(2))
        m_mat = _random_complex(g, 5, 3)
        x = _random_complex(g, 3)
        y = _random_complex(g, 5)
        lhs = np.vdot(y, m_mat @ x)
        rhs = np.vdot(hermitian_transpose(m_mat) @ y, x)
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


class TestPowerIteration:
    def test_diagonal_dominant(self):
        value, vector = power_iteration(np.diag([3.0, 1.0]), tol=1e-14)
        assert value == pytest.approx(3.0, abs=1e-8)
        # eigenvector is e1 up to global phase
        assert abs(vector[0]) == pytest.approx(1.0, abs=1e-6)
        assert abs(vector[1]) == pytest.approx(0.0, abs=1e-6)

    def test_degenerate_spectrum(self):
        value, vector = power_iteration(np.diag([2.0, 2.0]))
        assert value == pytest.approx(2.0, abs=1e-8)
        assert np.linalg.norm(vector) == pytest.approx(1.0, abs=1e-12)

    def test_matches_dense_eigensolver(self):
        # oracle: full Hermitian eigendecomposition
        g = np.random.Generator(np.random.PCG64(3))
        b = _random_complex(g, 8, 8)
        m_mat = b @ b.conj().T
        value, vector = power_iteration(m_mat, iters=2000, tol=1e-14)
        eigvals = np.linalg.eigvalsh(m_mat)
        assert value == pytest.approx(eigvals[-1], rel=1e-8)
        residual = np.linalg.norm(m_mat @ vector - value * vector)
        assert residual < 1e-6 * eigvals[-1]

    def test_dominance_over_random_vectors(self):
        g = np.random.Generator(np.random.PCG64(4))
        b = _random_complex(g, 6, 6)
        m_mat = b @ b.conj().T
        value, _ = power_iteration(m_mat, iters=2000, tol=1e-14)
        for _ in range(50):
            v = _random_complex(g, 6)
            v /= np.linalg.norm(v)
            rayleigh = float(np.real(np.vdot(v, m_mat @ v)))
            assert value >= rayleigh - 1e-8

    def test_deterministic(self):
        g = np.random.Generator(np.random.PCG64(5))
        b = _random_complex(g, 5, 5)
        m_mat = b @ b.conj().T
        v1 = power_iteration(m_mat)[1]
        v2 = power_iteration(m_mat)[1]
        assert np.array_equal(v1, v2)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            power_iteration(np.ones((2, 3)))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            power_iteration(np.array([[0.0, 1.0], [2.0, 0.0]]))


class TestNumericalRank:
    def test_identity(self):
        assert numerical_rank(np.eye(4), 1e-8) == 4

    def test_rank_one(self):
        u = np.arange(1.0, 5.0)
        assert numerical_rank(np.outer(u, u), 1e-8) == 1

    def test_matches_svd_oracle(self):
        g = np.random.Generator(np.random.PCG64(6))
        left = _random_complex(g, 9, 3)
        right = _random_complex(g, 3, 7)
        m_mat = left @ right + 1e-12 * _random_complex(g, 9, 7)
        tol = 1e-6
        sigma = np.linalg.svd(m_mat, compute_uv=False)
        expected = int(np.count_nonzero(sigma > tol * sigma[0]))
        assert numerical_rank(m_mat, tol) == expected == 3

    def test_permutation_invariance(self):
        g = np.random.Generator(np.random.PCG64(7))
        m_mat = _random_complex(g, 6, 6)
        perm = np.eye(6)[g.permutation(6)]
        assert numerical_rank(m_mat @ perm, 1e-8) == numerical_rank(m_mat, 1e-8)

    def test_zero_matrix(self):
        assert numerical_rank(np.zeros((3, 3)), 1e-8) == 0

    def test_rejects_bad_tolerance(self):
        with pytest.raises(ValueError, match="rel_tol"):
            numerical_rank(np.eye(2), 1.5)
        with pytest.raises(ValueError, match="rel_tol"):
            numerical_rank(np.eye(2), 0.0)

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="non-empty"):
            numerical_rank(np.zeros((0, 3)), 1e-8)


class TestGaussianComplex:
    def test_deterministic(self):
        a = gaussian_complex(SeededRng(9), 10, 10)
        b = gaussian_complex(SeededRng(9), 10, 10)
        assert np.array_equal(a, b)

    def test_unit_second_moment(self):
        a = gaussian_complex(SeededRng(10), 400, 250)
        second_moment = np.mean(np.abs(a) ** 2)
        assert abs(second_moment - 1.0) < 0.01
        assert abs(a.mean()) < 0.01

    def test_real_imag_balance(self):
        a = gaussian_complex(SeededRng(11), 300, 300)
        assert abs(np.var(a.real) - 0.5) < 0.01
        assert abs(np.var(a.imag) - 0.5) < 0.01

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            gaussian_complex(SeededRng(0), 0, 4)


class TestSeededRng:
    def test_same_seed_same_stream(self):
        a = SeededRng(123).generator().standard_normal(32)
        b = SeededRng(123).generator().standard_normal(32)
        assert np.array_equal(a, b)

    def test_generator_is_fresh_each_call(self):
        rng = SeededRng(5)
        first = rng.generator().standard_normal(8)
        second = rng.generator().standard_normal(8)
        assert np.array_equal(first, second)

    def test_split_deterministic(self):
        assert SeededRng(7).split(1, 2) == SeededRng(7).split(1, 2)

    def test_split_children_differ(self):
        parent = SeededRng(7)
        children = {parent.split(k).seed for k in range(64)}
        assert len(children) == 64
        assert parent.seed not in children

    def test_split_order_matters(self):
        assert SeededRng(7).split(1, 2) != SeededRng(7).split(2, 1)

    def test_rejects_negative_seed(self):
        with pytest.raises(ValueError):
            SeededRng(-1)
        with pytest.raises(ValueError):
            SeededRng(0).split(-3)


class TestPhaseAlignToReal:
    def test_real_vector_unchanged(self):
        v = np.array([1.0, -2.0, 3.0])
        assert np.array_equal(phase_align_to_real(v.astype(complex)), v)

    def test_recovers_rotated_real_vector(self):
        g = np.random.Generator(np.random.PCG64(12))
        x = g.standard_normal(16)
        rotated = np.exp(1j * 0.7) * x
        aligned = phase_align_to_real(rotated)
        err = min(np.linalg.norm(aligned - x), np.linalg.norm(aligned + x))
        assert err < 1e-12 * np.linalg.norm(x)

    @given(st.integers(0, 10**9))
    @settings(max_examples=25, deadline=None)
    def test_maximizes_real_energy(self, seed):
        g = np.random.Generator(np.random.PCG64(seed))
        v = _random_complex(g, 8)
        aligned = phase_align_to_real(v)
        best = np.linalg.norm(aligned)
        for theta in np.linspace(0.0, np.pi, 181):
            candidate = np.linalg.norm(np.real(np.exp(-1j * theta) * v))
            assert best >= candidate - 1e-9 * max(1.0, candidate)
