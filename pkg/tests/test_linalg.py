import numpy as np
import pytest

from orbitdensity import linalg
from orbitdensity.errors import (
    DegenerateProbeError,
    DimensionError,
    NotPSDError,
    UsageError,
)


def random_hermitian(rng, n):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (A + A.conj().T)


class TestHermitianEigen:
    def test_identity(self):
        spec = linalg.hermitian_eigen(np.eye(3))
        assert np.allclose(spec.eigenvalues, [1.0, 1.0, 1.0])

    def test_two_by_two_hand_characteristic_polynomial(self):
        # det([[2-t,1],[1,2-t]]) = t^2 - 4t + 3 = (t-1)(t-3)
        spec = linalg.hermitian_eigen([[2.0, 1.0], [1.0, 2.0]])
        assert np.allclose(spec.eigenvalues, [1.0, 3.0], atol=1e-12)

    def test_diagonal_sorted(self):
        spec = linalg.hermitian_eigen(np.diag([5.0, -1.0, 0.0]))
        assert np.allclose(spec.eigenvalues, [-1.0, 0.0, 5.0], atol=1e-14)

    def test_residuals_and_orthonormality(self):
        rng = np.random.default_rng(1)
        M = random_hermitian(rng, 12)
        spec = linalg.hermitian_eigen(M)
        scale = np.linalg.norm(M)
        for lam, v in zip(spec.eigenvalues, spec.eigenvectors.T):
            assert np.linalg.norm(M @ v - lam * v) <= 1e-10 * scale
        G = spec.eigenvectors.conj().T @ spec.eigenvectors
        assert np.max(np.abs(G - np.eye(12))) <= 1e-10

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            linalg.hermitian_eigen(np.ones((2, 3)))

    def test_non_hermitian_rejected(self):
        with pytest.raises(UsageError):
            linalg.hermitian_eigen([[0.0, 1.0], [0.0, 0.0]])

    def test_trace_and_frobenius_identities(self):
        rng = np.random.default_rng(2)
        for n in (2, 5, 9):
            M = random_hermitian(rng, n)
            w = linalg.hermitian_eigen(M).eigenvalues
            scale = np.linalg.norm(M)
            assert abs(w.sum() - np.trace(M).real) <= 1e-10 * scale
            assert abs((w**2).sum() - scale**2) <= 1e-10 * scale**2

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        M = random_hermitian(rng, 8)
        s1 = linalg.hermitian_eigen(M)
        s2 = linalg.hermitian_eigen(M.copy())
        assert np.array_equal(s1.eigenvalues, s2.eigenvalues)
        assert np.array_equal(s1.eigenvectors, s2.eigenvectors)


class TestInverseSqrtPsd:
    def test_identity(self):
        R = linalg.inverse_sqrt_psd(np.eye(4))
        assert np.allclose(R, np.eye(4), atol=1e-12)

    def test_diagonal(self):
        R = linalg.inverse_sqrt_psd(np.diag([4.0, 9.0]))
        assert np.allclose(R, np.diag([0.5, 1.0 / 3.0]), atol=1e-12)

    def test_rank_deficient_projects(self):
        # Gram of {e1, e1}: eigenvalues 0 and 2, eigenvector (1,1)/sqrt(2)
        M = np.ones((2, 2))
        R = linalg.inverse_sqrt_psd(M)
        P = R @ M @ R
        proj = 0.5 * np.ones((2, 2))
        assert np.allclose(P, proj, atol=1e-12)

    def test_negative_rejected(self):
        with pytest.raises(NotPSDError):
            linalg.inverse_sqrt_psd(np.diag([1.0, -1.0]))

    def test_pseudo_inverse_action(self):
        rng = np.random.default_rng(4)
        X = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        M = X @ X.conj().T  # PSD of rank 4
        R = linalg.inverse_sqrt_psd(M)
        P = R @ R @ M  # pseudo-inverse times M = projector onto the range
        assert np.linalg.norm(P @ M - M) <= 1e-8 * np.linalg.norm(M)
        assert np.linalg.norm(P @ P - P) <= 1e-8

    def test_bad_rel_tol(self):
        with pytest.raises(UsageError):
            linalg.inverse_sqrt_psd(np.eye(2), rel_tol=2.0)


class TestNumericalRank:
    def test_identity(self):
        assert linalg.numerical_rank(np.eye(5)) == 5

    def test_all_ones(self):
        assert linalg.numerical_rank(np.ones((2, 2))) == 1

    def test_zero_matrix(self):
        assert linalg.numerical_rank(np.zeros((3, 3))) == 0

    def test_gram_of_dependent_triple(self):
        # Gram of {e1, e2, e1+e2}: hand eigencheck gives eigenvalues 0, 1, 3
        e1 = np.array([1.0, 0.0, 0.0])
        e2 = np.array([0.0, 1.0, 0.0])
        vecs = [e1, e2, e1 + e2]
        G = np.array([[np.vdot(w, v) for w in vecs] for v in vecs])
        w = linalg.hermitian_eigen(G).eigenvalues
        assert np.allclose(sorted(w), [0.0, 1.0, 3.0], atol=1e-12)
        assert linalg.numerical_rank(G) == 2

    def test_unitary_conjugation_invariance(self):
        rng = np.random.default_rng(5)
        M = random_hermitian(rng, 7)
        M = M @ M.conj().T  # PSD
        U = linalg.hermitian_eigen(random_hermitian(rng, 7)).eigenvectors
        assert linalg.numerical_rank(U @ M @ U.conj().T) == linalg.numerical_rank(M)


class TestGeneralizedRayleigh:
    def test_identity_pair(self):
        lo, hi = linalg.generalized_rayleigh_extremes(np.eye(3), np.eye(3))
        assert np.allclose([lo, hi], [1.0, 1.0], atol=1e-12)

    def test_diagonal_numerator(self):
        lo, hi = linalg.generalized_rayleigh_extremes(np.diag([2.0, 8.0]), np.eye(2))
        assert np.allclose([lo, hi], [2.0, 8.0], atol=1e-12)

    def test_axis_ratios(self):
        lo, hi = linalg.generalized_rayleigh_extremes(np.diag([1.0, 4.0]), np.diag([1.0, 2.0]))
        assert np.allclose([lo, hi], [1.0, 2.0], atol=1e-12)

    def test_degenerate_probe(self):
        with pytest.raises(DegenerateProbeError):
            linalg.generalized_rayleigh_extremes(np.eye(2), np.zeros((2, 2)))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            linalg.generalized_rayleigh_extremes(np.eye(2), np.eye(3))
