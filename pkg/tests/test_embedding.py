import numpy as np
import pytest

from drforest.distances import euclidean_distances
from drforest.embedding import (
    InsufficientPositiveEigenvalues,
    double_center,
    fit_mds,
    oos_embed,
    oos_kernel_row,
)

from .oracles import exact_kernel, kernel_row_literal

# max |z_hat - z| over all 500 training points re-embedded through the
# augmented-sample kernel estimator (data: see _points_500)
OOS_AUGMENTED_MAX_DEV = 0.01873267049192151


def _points_500():
    rng = np.random.default_rng(2024)
    return rng.normal(size=(500, 3)) * np.array([3.0, 2.0, 1.0])


class TestDoubleCenter:
    def test_two_points(self):
        np.testing.assert_allclose(double_center([[0, 2], [2, 0]]), [[1, -1], [-1, 1]], atol=1e-15)

    def test_zero(self):
        np.testing.assert_array_equal(double_center(np.zeros((4, 4))), 0.0)

    def test_rows_sum_to_zero_and_match_matrix_form(self):
        rng = np.random.default_rng(0)
        A = rng.uniform(0, 5, size=(30, 30))
        D = np.triu(A, 1) + np.triu(A, 1).T
        K = double_center(D)
        np.testing.assert_allclose(K.sum(axis=1), 0.0, atol=1e-8)
        np.testing.assert_allclose(K, exact_kernel(D), atol=1e-10)
        np.testing.assert_array_equal(K, K.T)


class TestFitMds:
    def test_two_points(self):
        mds = fit_mds([[0, 2], [2, 0]], 1)
        assert mds.eigenvalues[0] == pytest.approx(2.0, abs=1e-14)
        np.testing.assert_allclose(mds.Z[:, 0], [1.0, -1.0], atol=1e-14)

    def test_reconstructs_euclidean_3d(self):
        Y = np.random.default_rng(1).normal(size=(40, 3))
        D = euclidean_distances(Y)
        mds = fit_mds(D, 3)
        np.testing.assert_allclose(euclidean_distances(mds.Z), D, rtol=1e-8, atol=1e-10)

    def test_invariants(self):
        Y = np.random.default_rng(2).normal(size=(25, 4))
        mds = fit_mds(euclidean_distances(Y), 4)
        lam = mds.eigenvalues
        assert np.all(np.diff(lam) <= 0) and np.all(lam > 0)
        np.testing.assert_allclose(mds.eigenvectors.T @ mds.eigenvectors, np.eye(4), atol=1e-8)
        np.testing.assert_allclose(mds.Z, mds.eigenvectors * np.sqrt(lam), atol=1e-10)
        pivots = np.argmax(np.abs(mds.eigenvectors), axis=0)
        assert np.all(mds.eigenvectors[pivots, np.arange(4)] > 0)
        # Gram identity at full rank
        np.testing.assert_allclose(mds.Z @ mds.Z.T, double_center(euclidean_distances(Y)), atol=1e-8)

    def test_stress_at_intrinsic_dimension(self):
        rng = np.random.default_rng(3)
        Y = rng.normal(size=(50, 2)) @ rng.normal(size=(2, 6))
        D = euclidean_distances(Y)
        mds = fit_mds(D, 2)
        D2z = euclidean_distances(mds.Z) ** 2
        assert np.sum((D**2 - D2z) ** 2) <= 1e-12 * np.sum(D**4)

    def test_m_equals_n(self):
        D = euclidean_distances(np.random.default_rng(4).normal(size=(5, 6)))
        with pytest.raises(InsufficientPositiveEigenvalues) as exc:
            fit_mds(D, 5)
        assert exc.value.n_positive == 4

    def test_all_zero(self):
        with pytest.raises(InsufficientPositiveEigenvalues):
            fit_mds(np.zeros((3, 3)), 1)


class TestOutOfSample:
    def test_exact_kernel_row_recovers_coordinates(self):
        Y = np.random.default_rng(5).normal(size=(60, 3))
        D = euclidean_distances(Y)
        mds = fit_mds(D, 3)
        K = double_center(D)
        for i in range(60):
            np.testing.assert_allclose(oos_embed(K[i], mds), mds.Z[i], atol=1e-8)

    def test_zero_kernel(self):
        mds = fit_mds([[0, 2], [2, 0]], 1)
        np.testing.assert_array_equal(oos_embed(np.zeros(2), mds), [0.0])
        mds0 = fit_mds(euclidean_distances([[0.0], [1.0], [3.0]]), 1)
        row = oos_kernel_row(np.zeros(3), mds0)
        assert row.shape == (3,)

    def test_zero_training_distances_give_zero_row(self):
        class Stub:
            n = 4
            d2_row_sums = np.zeros(4)
            d2_total = 0.0
        np.testing.assert_array_equal(oos_kernel_row(np.zeros(4), Stub), 0.0)

    def test_linear(self):
        mds = fit_mds(euclidean_distances(np.random.default_rng(6).normal(size=(20, 2))), 2)
        k = np.random.default_rng(7).normal(size=20)
        np.testing.assert_allclose(oos_embed(3.7 * k, mds), 3.7 * oos_embed(k, mds), rtol=1e-12, atol=1e-14)

    def test_matches_literal_formula(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            n = int(rng.integers(3, 25))
            D = euclidean_distances(rng.normal(size=(n, 3)))
            mds = fit_mds(D, 2)
            d2 = rng.uniform(0, 4, size=n)
            np.testing.assert_allclose(oos_kernel_row(d2, mds), kernel_row_literal(d2, D), rtol=0, atol=1e-12)

    def test_augmented_estimator_regression_value(self):
        Y = _points_500()
        D = euclidean_distances(Y)
        mds = fit_mds(D, 3)
        Zh = np.array([oos_embed(oos_kernel_row(D[i] ** 2, mds), mds) for i in range(500)])
        assert np.abs(Zh - mds.Z).max() <= OOS_AUGMENTED_MAX_DEV * (1 + 1e-9)

    def test_augmented_kernel_error_shrinks_with_n(self):
        rng = np.random.default_rng(9)
        Y = rng.normal(size=(800, 2))
        devs = []
        for n in (100, 800):
            D = euclidean_distances(Y[:n])
            mds = fit_mds(D, 2)
            K = double_center(D)
            devs.append(max(np.abs(oos_kernel_row(D[i] ** 2, mds) - K[i]).max() for i in range(0, n, 7)))
        assert devs[1] < devs[0] / 4
