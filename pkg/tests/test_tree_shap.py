"""
Tests for exact TreeSHAP against the brute-force oracle
"""
import time

import numpy as np
import pytest

from shapca.classifiers.models import DecisionTree, ForestConfig, ForestModel
from shapca.classifiers.predict import predict_proba
from shapca.explain.brute_force import brute_force_shap
from shapca.explain.engine import check_additivity
from shapca.explain.models import ExplainerError
from shapca.explain.tree_shap import expected_value, tree_shap


def _stump() -> ForestModel:
    tree = DecisionTree(
        children_left=[1, -1, -1],
        children_right=[2, -1, -1],
        feature=[1, -1, -1],
        threshold=[0.0, 0.0, 0.0],
        value=[[0.5, 0.5], [1.0, 0.0], [0.0, 1.0]],
        n_train=[4, 1, 3],
    )
    return ForestModel(trees=[tree], n_features=2, n_classes=2, config=ForestConfig(n_trees=1),
                       bootstrap_indices=[[0, 1, 2, 3]])


class TestTreeShap:
    """Test path-dependent TreeSHAP"""

    def test_matches_brute_force_on_random_forests(self, random_forest):
        """Exact agreement with coalition enumeration on 100 random forests"""
        start = time.time()
        worst = 0.0
        for seed in range(100):
            gen = np.random.default_rng(seed)
            k = int(gen.integers(2, 9))
            model, x = random_forest(
                seed,
                n_features=k,
                n_trees=int(gen.integers(1, 6)),
                max_depth=int(gen.integers(1, 5)),
                n_classes=int(gen.integers(2, 4)),
            )
            row = gen.uniform(size=k)
            fast = tree_shap(model, row[None, :])
            slow = brute_force_shap(model, row)
            worst = max(worst, float(np.max(np.abs(fast.phi - slow.phi))))
            assert np.allclose(fast.phi0, slow.phi0, rtol=0, atol=1e-12)
        assert worst <= 1e-9
        assert time.time() - start < 60

    def test_additivity(self, random_forest):
        """phi0 + sum(phi) reproduces the forest probabilities"""
        model, x = random_forest(7, n_features=5, n_trees=4, max_depth=4)
        tensor = tree_shap(model, x[:20])
        assert check_additivity(tensor, predict_proba(model, x[:20]), 1e-8) <= 1e-8

    def test_hand_computed_stump(self):
        """Single split on feature 1: all credit to that feature"""
        tensor = tree_shap(_stump(), np.array([[5.0, -1.0]]))
        # path expectation 0.25 * [1, 0] + 0.75 * [0, 1]; x goes left to [1, 0]
        assert np.allclose(tensor.phi0, [0.25, 0.75])
        assert np.allclose(tensor.phi[0, 1], [0.75, -0.75])
        assert np.allclose(tensor.phi[0, 0], [0.0, 0.0])

    def test_binary_classes_are_antisymmetric(self, random_forest):
        """With two classes the attributions toward each class cancel"""
        model, x = random_forest(11, n_features=5, n_trees=5, max_depth=4)
        tensor = tree_shap(model, x[:15])
        assert np.max(np.abs(tensor.phi[:, :, 0] + tensor.phi[:, :, 1])) <= 1e-12
        assert tensor.phi0.sum() == pytest.approx(1.0, abs=1e-12)

    def test_unused_feature_gets_zero(self, random_forest):
        """Features never split on receive no attribution"""
        model, x = random_forest(3, n_features=6, n_trees=2, max_depth=2)
        used = set()
        for t in model.trees:
            used |= set(int(f) for f in t.feature if f >= 0)
        tensor = tree_shap(model, x[:5])
        for j in set(range(6)) - used:
            assert np.all(tensor.phi[:, j, :] == 0.0)

    def test_expected_value(self):
        """Cover-weighted leaf mean"""
        assert np.allclose(expected_value(_stump().trees[0]), [0.25, 0.75])

    def test_workers_do_not_change_values(self, random_forest):
        """Parallel rows match serial rows"""
        model, x = random_forest(5, n_features=4)
        a = tree_shap(model, x[:6], workers=1)
        b = tree_shap(model, x[:6], workers=2)
        assert np.array_equal(a.phi, b.phi)

    def test_width_mismatch(self, random_forest):
        """Rows must match the forest's feature count"""
        model, x = random_forest(5, n_features=4)
        with pytest.raises(ExplainerError):
            tree_shap(model, x[:, :3])

    def test_explainer_tag(self, random_forest):
        """Tensor records which explainer produced it"""
        model, x = random_forest(1)
        assert tree_shap(model, x[:2]).explainer == "tree"

    def test_zero_cover_rejected(self):
        """A node no training sample reached cannot be weighted"""
        tree = DecisionTree(
            children_left=[1, -1, -1],
            children_right=[2, -1, -1],
            feature=[0, -1, -1],
            threshold=[0.5, 0.0, 0.0],
            value=[[1.0, 0.0], [1.0, 0.0], [0.5, 0.5]],
            n_train=[2, 2, 0],
        )
        model = ForestModel(trees=[tree], n_features=1, n_classes=2, config=ForestConfig(n_trees=1),
                            bootstrap_indices=[[0, 1]])
        with pytest.raises(ExplainerError):
            tree_shap(model, np.array([[0.1]]))


class TestBruteForce:
    """Test the coalition-enumeration oracle"""

    def test_feature_limit(self, random_forest):
        """Enumeration beyond the configured width is refused"""
        model, x = random_forest(0, n_features=21, n_trees=1, max_depth=2)
        with pytest.raises(ExplainerError):
            brute_force_shap(model, x[0])

    def test_forest_needs_no_background(self, random_forest):
        """phi0 is the empty-coalition value"""
        model, x = random_forest(6, n_features=3)
        oracle = brute_force_shap(model, x[0])
        assert oracle.explainer == "brute_force"
        assert oracle.phi.shape == (1, 3, 2)
        assert np.allclose(oracle.phi0, np.mean([expected_value(t) for t in model.trees], axis=0))

    def test_callable_needs_background(self):
        """Plain functions have no path expectation"""
        with pytest.raises(ExplainerError):
            brute_force_shap(lambda z: z, np.array([1.0, 2.0]))
