"""
Tests for Sparse PCA and component normalization
"""
import numpy as np
import pytest
from scipy.linalg import subspace_angles

from shapca.decomposition import sparse_pca
from shapca.decomposition.models import ComponentScaler, ComponentValues, InitMode, SparsePcaConfig, SparsePcaError


@pytest.fixture
def matrix(rng):
    """Low-rank data plus noise"""
    scores = rng.normal(size=(60, 3)) * [3.0, 2.0, 1.0]
    loadings = rng.normal(size=(3, 30))
    return scores @ loadings + 0.05 * rng.normal(size=(60, 30))


class TestFit:
    """Test the alternating minimization"""

    def test_objective_monotone(self, matrix):
        """Objective never increases across iterations"""
        model = sparse_pca.fit(matrix, SparsePcaConfig(n_components=3, alpha=2.0, max_iter=200))
        hist = np.array(model.objective_history)
        assert np.all(np.diff(hist) <= 1e-9 * np.abs(hist[:-1]))

    def test_random_init_monotone(self, matrix):
        """Random initialization also descends"""
        model = sparse_pca.fit(matrix, SparsePcaConfig(n_components=2, alpha=1.0, init=InitMode.RANDOM, seed=7))
        hist = np.array(model.objective_history)
        assert np.all(np.diff(hist) <= 1e-9 * np.abs(hist[:-1]))

    def test_sparsity_grows_with_alpha(self, matrix):
        """Sparsity fraction is non-decreasing over an increasing alpha grid"""
        fractions = [
            sparse_pca.fit(matrix, SparsePcaConfig(n_components=3, alpha=a)).sparsity_fraction
            for a in [0.0, 1.0, 5.0, 20.0, 80.0]
        ]
        assert all(b >= a for a, b in zip(fractions, fractions[1:]))
        assert fractions[0] == 0.0

    def test_alpha_zero_recovers_pca_subspace(self, matrix):
        """alpha = 0, K = 2 spans the leading principal subspace"""
        model = sparse_pca.fit(matrix, SparsePcaConfig(n_components=2, alpha=0.0, max_iter=2000, tol=1e-12))
        xc = matrix - matrix.mean(axis=0)
        _, vecs = np.linalg.eigh(xc.T @ xc)
        dense = vecs[:, -2:]
        angles = subspace_angles(model.loadings.T, dense)
        assert np.max(angles) < 1e-2

    def test_components_sorted_by_variance(self, matrix):
        """Explained variance is non-increasing"""
        model = sparse_pca.fit(matrix, SparsePcaConfig(n_components=3, alpha=1.0))
        assert np.all(np.diff(model.explained_variance) <= 0)

    def test_sign_convention(self, matrix):
        """Largest-magnitude loading of each component is positive"""
        model = sparse_pca.fit(matrix, SparsePcaConfig(n_components=3, alpha=1.0))
        for row in model.loadings:
            if row.any():
                assert row[np.argmax(np.abs(row))] > 0

    def test_deterministic(self, matrix):
        """Same config gives identical loadings"""
        cfg = SparsePcaConfig(n_components=3, alpha=1.0, init=InitMode.RANDOM, seed=3)
        assert np.array_equal(sparse_pca.fit(matrix, cfg).loadings, sparse_pca.fit(matrix, cfg).loadings)

    def test_huge_alpha_degenerate(self, matrix):
        """Overwhelming penalty zeroes every loading and flags it"""
        model = sparse_pca.fit(matrix, SparsePcaConfig(n_components=2, alpha=1e9))
        assert model.sparsity_fraction == 1.0
        assert model.degenerate_components == [0, 1]

    def test_too_many_components(self, matrix):
        """K must not exceed min(N, P)"""
        with pytest.raises(SparsePcaError):
            sparse_pca.fit(matrix, SparsePcaConfig(n_components=31))

    def test_non_convergence_flag(self, matrix):
        """Hitting max_iter is a flag, not an exception"""
        model = sparse_pca.fit(matrix, SparsePcaConfig(n_components=3, alpha=1.0, max_iter=1, tol=1e-300))
        assert model.converged is False
        assert model.n_iter == 1


class TestTransform:
    """Test projection and scaling"""

    def test_transform_shape(self, matrix):
        """N x K component values"""
        model = sparse_pca.fit(matrix, SparsePcaConfig(n_components=3, alpha=1.0))
        cv = sparse_pca.transform(model, matrix)
        assert cv.values.shape == (60, 3)

    def test_transform_wrong_width(self, matrix):
        """Column count must match the loadings"""
        model = sparse_pca.fit(matrix, SparsePcaConfig(n_components=3, alpha=1.0))
        with pytest.raises(SparsePcaError):
            sparse_pca.transform(model, matrix[:, :10])

    def test_normalize_range(self, rng):
        """Fit-and-apply maps each component onto [-1, 1] exactly"""
        cv = ComponentValues(values=rng.normal(size=(20, 4)))
        out = sparse_pca.normalize_components(cv).values
        assert np.allclose(out.min(axis=0), -1.0)
        assert np.allclose(out.max(axis=0), 1.0)

    def test_constant_component(self):
        """Constant components map to 0"""
        cv = ComponentValues(values=[[1.0, 2.0], [1.0, 3.0], [1.0, 4.0]])
        out = sparse_pca.normalize_components(cv).values
        assert np.all(out[:, 0] == 0.0)

    def test_clip_for_unseen_rows(self):
        """Test rows far outside the training range are clipped to +-1.5"""
        scaler = ComponentScaler(minimum=[0.0], maximum=[1.0], clip=1.5)
        out = sparse_pca.apply_scaler(scaler, ComponentValues(values=[[10.0], [-10.0], [0.5]])).values
        assert list(out[:, 0]) == [1.5, -1.5, 0.0]

    def test_scaler_needs_two_rows(self):
        """A single row has no range"""
        with pytest.raises(SparsePcaError):
            sparse_pca.fit_scaler(ComponentValues(values=[[1.0, 2.0]]))
