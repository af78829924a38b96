"""
Tests for KernelSHAP, the brute-force oracle with a background, and background selection
"""
import numpy as np
import pytest

from shapca.classifiers.forest import fit_forest
from shapca.classifiers.linear import fit_linear
from shapca.classifiers.models import ForestConfig, LinearConfig
from shapca.classifiers.predict import predict_proba
from shapca.explain.background import select_background
from shapca.explain.brute_force import brute_force_shap
from shapca.explain.engine import (
    check_additivity,
    explain,
    read_attributions,
    resolve_coalitions,
    write_attributions,
)
from shapca.explain.kernel_shap import all_coalitions, kernel_shap, kernel_weight, sample_coalitions
from shapca.explain.models import BackgroundSelection, BackgroundSet, ExplainerError


def _uniform_background(rows: np.ndarray) -> BackgroundSet:
    return BackgroundSet(rows=rows, weights=np.full(rows.shape[0], 1.0 / rows.shape[0]),
                         selection=BackgroundSelection.TRAINING_SET)


class TestKernelShap:
    """Test the weighted least-squares estimator"""

    def test_linear_closed_form(self, rng):
        """Exhaustive KernelSHAP equals beta_k (x_k - E[z_k]) for linear functions"""
        for _ in range(20):
            k = int(rng.integers(2, 11))
            beta = rng.normal(size=(k, 2))
            intercept = rng.normal(size=2)
            background = _uniform_background(rng.normal(size=(15, k)))
            x = rng.normal(size=(3, k))

            def f(z, beta=beta, intercept=intercept):
                return z @ beta + intercept

            tensor = kernel_shap(f, x, background)
            mean = background.weights @ background.rows
            expected = (x - mean)[:, :, None] * beta[None, :, :]
            assert np.max(np.abs(tensor.phi - expected)) <= 1e-6
            assert tensor.explainer == "kernel"

    def test_matches_brute_force(self, rng):
        """Exhaustive KernelSHAP equals the interventional brute-force values"""
        x = rng.normal(size=(50, 4))
        y = (x[:, 0] - x[:, 2] > 0).astype(np.int64)
        model = fit_linear(x, y, LinearConfig())
        background = _uniform_background(x[:10])
        kernel = kernel_shap(model, x[:3], background)
        for i in range(3):
            oracle = brute_force_shap(model, x[i], background)
            assert np.allclose(kernel.phi[i], oracle.phi[0], rtol=0, atol=1e-9)
        assert np.allclose(kernel.phi0, oracle.phi0, rtol=0, atol=1e-12)

    def test_additivity_forest_model(self, rng):
        """Efficiency holds exactly for a non-linear model"""
        x = rng.uniform(size=(60, 5))
        y = (x[:, 0] > 0.5).astype(np.int64)
        forest = fit_forest(x, y, ForestConfig(n_trees=5, seed=2))
        background = _uniform_background(x[:12])
        tensor = kernel_shap(forest, x[:4], background)
        assert check_additivity(tensor, predict_proba(forest, x[:4]), 1e-6) <= 1e-6

    def test_binary_classes_are_antisymmetric(self, rng):
        """Attributions toward the two classes cancel for linear and forest models"""
        x = rng.uniform(size=(60, 5))
        y = (x[:, 0] + x[:, 3] > 1.0).astype(np.int64)
        background = _uniform_background(x[:10])
        for model in (fit_linear(x, y, LinearConfig()), fit_forest(x, y, ForestConfig(n_trees=5, seed=4))):
            tensor = kernel_shap(model, x[:5], background)
            assert np.max(np.abs(tensor.phi[:, :, 0] + tensor.phi[:, :, 1])) <= 1e-9

    def test_sampled_additivity_and_determinism(self, rng):
        """Sampled coalitions still satisfy efficiency and are seed-deterministic"""
        x = rng.normal(size=(40, 12))
        y = (x[:, 0] > 0).astype(np.int64)
        model = fit_linear(x, y, LinearConfig())
        background = _uniform_background(x[:8])
        a = kernel_shap(model, x[:2], background, n_coalitions=200, seed=3)
        b = kernel_shap(model, x[:2], background, n_coalitions=200, seed=3)
        assert a.explainer == "kernel_sampled"
        assert np.array_equal(a.phi, b.phi)
        assert check_additivity(a, predict_proba(model, x[:2]), 1e-6) <= 1e-6

    def test_single_feature(self, rng):
        """K = 1 assigns the whole difference to the only feature"""
        background = _uniform_background(rng.normal(size=(5, 1)))
        tensor = kernel_shap(lambda z: np.hstack([z, -z]), np.array([[2.0]]), background)
        mean = background.rows.mean()
        assert np.allclose(tensor.phi[0, 0], [2.0 - mean, mean - 2.0])

    def test_exhaustive_guard(self, rng):
        """Exhaustive enumeration beyond the limit is refused"""
        background = _uniform_background(rng.normal(size=(2, 30)))
        with pytest.raises(ExplainerError):
            kernel_shap(lambda z: z[:, :2], rng.normal(size=(1, 30)), background)

    def test_background_width(self, rng):
        """Background must have the model's width"""
        background = _uniform_background(rng.normal(size=(3, 4)))
        with pytest.raises(ExplainerError):
            kernel_shap(lambda z: z, rng.normal(size=(1, 5)), background)


class TestCoalitions:
    """Test coalition enumeration and sampling"""

    def test_all_coalitions(self):
        """2^K - 2 proper coalitions with symmetric kernel weights"""
        masks, weights = all_coalitions(4)
        assert masks.shape == (14, 4)
        assert kernel_weight(4, 1) == pytest.approx(3 / (4 * 1 * 3))
        assert kernel_weight(4, 1) == kernel_weight(4, 3)
        assert np.all(weights > 0)

    def test_sampled_pairs_complements(self, rng):
        """Every sampled coalition appears with its complement"""
        masks, counts = sample_coalitions(10, 50, rng)
        rows = {tuple(m) for m in masks}
        for m in masks:
            assert tuple(~m) in rows
        assert counts.sum() >= 50

    def test_resolve(self):
        """auto enumerates small K and samples large K"""
        assert resolve_coalitions(5, "auto") is None
        assert resolve_coalitions(40, "auto") == 2 * 40 + 2048
        assert resolve_coalitions(40, "exhaustive") is None
        assert resolve_coalitions(40, 300) == 300


class TestBackground:
    """Test background selection"""

    def test_training_set(self, rng):
        """Full matrix with uniform weights"""
        rows = rng.normal(size=(10, 3))
        bg = select_background(rows, BackgroundSelection.TRAINING_SET)
        assert np.array_equal(bg.rows, rows)
        assert np.allclose(bg.weights, 0.1)

    def test_kmeans(self, rng):
        """Centroids weighted by cluster size"""
        rows = np.vstack([rng.normal(0, 0.01, size=(30, 2)), rng.normal(5, 0.01, size=(10, 2))])
        bg = select_background(rows, BackgroundSelection.KMEANS, n_centroids=2, seed=0)
        assert bg.rows.shape == (2, 2)
        assert sorted(np.round(bg.weights, 6)) == [0.25, 0.75]

    def test_auto_keeps_small_sets(self, rng):
        """AUTO keeps the full set below the size threshold"""
        bg = select_background(rng.normal(size=(20, 2)))
        assert bg.selection == BackgroundSelection.TRAINING_SET

    def test_invalid_weights(self):
        """Weights must sum to one"""
        with pytest.raises(ValueError):
            BackgroundSet(rows=[[0.0], [1.0]], weights=[0.5, 0.6], selection=BackgroundSelection.TRAINING_SET)


class TestEngine:
    """Test dispatch and attribution files"""

    def test_dispatch(self, rng, random_forest):
        """Forests use TreeSHAP, linear models KernelSHAP"""
        forest, x = random_forest(2)
        assert explain(forest, x[:2]).explainer == "tree"
        y = (x[:, 0] > 0.5).astype(np.int64)
        linear = fit_linear(x, y, LinearConfig())
        tensor = explain(linear, x[:2], _uniform_background(x[:5]), class_names=["a", "b"])
        assert tensor.explainer == "kernel"
        assert tensor.class_names == ["a", "b"]

    def test_kernel_needs_background(self, random_forest):
        """Model-agnostic path requires a background"""
        _, x = random_forest(2)
        linear = fit_linear(x, (x[:, 0] > 0.5).astype(np.int64), LinearConfig())
        with pytest.raises(ExplainerError):
            explain(linear, x[:2])

    def test_additivity_violation(self, random_forest):
        """Deviations above tolerance raise"""
        forest, x = random_forest(2)
        tensor = explain(forest, x[:2])
        with pytest.raises(ExplainerError):
            check_additivity(tensor, predict_proba(forest, x[:2]) + 0.1, 1e-8)

    def test_attribution_files(self, random_forest, tmp_path):
        """JSON header plus long-format CSV reload to the same tensor"""
        forest, x = random_forest(4, n_classes=3)
        tensor = explain(forest, x[:3], class_names=["a", "b", "c"])
        json_path, csv_path = write_attributions(tensor, tmp_path / "attr.json", tmp_path / "attr.csv")
        assert csv_path.read_text().splitlines()[0] == "sample,component,class,value"
        back = read_attributions(json_path)
        assert np.array_equal(back.phi, tensor.phi)
        assert back.class_names == ["a", "b", "c"]
