"""
Tests for back-projection onto the spectral axis
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from shapca.explain.backproject import (
    combine_sanity,
    combined_local_vector,
    global_explain,
    local_explain,
    local_explain_all,
)
from shapca.explain.models import AttributionTensor, ExplainerError

finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


def _tensor(phi: np.ndarray) -> AttributionTensor:
    return AttributionTensor(phi=phi, phi0=np.zeros(phi.shape[2]), explainer="tree")


class TestGlobal:
    """Test class-wise importance and value tracks"""

    def test_identity_loadings_reproduce_mean_attributions(self, rng):
        """With W = I the importance track is the mean class attribution"""
        phi = rng.normal(size=(10, 4, 2))
        yhat = np.array([0, 1] * 5)
        cvn = rng.uniform(-1, 1, size=(10, 4))
        out = global_explain(_tensor(phi), yhat, cvn, np.eye(4))
        assert np.allclose(out[1].psi, phi[yhat == 1, :, 1].mean(axis=0), rtol=0, atol=1e-12)
        assert np.allclose(out[0].pc_track, cvn[yhat == 0].mean(axis=0), rtol=0, atol=1e-12)
        assert out[0].n_samples_used == 5

    def test_worked_example(self):
        """Mean attributions [1, 2] through W = [[1, 0, -2], [0, 3, 0]] give [1, 6, 2]"""
        w = np.array([[1.0, 0.0, -2.0], [0.0, 3.0, 0.0]])
        phi = np.zeros((2, 2, 2))
        phi[:, :, 0] = [[0.5, 1.0], [1.5, 3.0]]
        out = global_explain(_tensor(phi), np.array([0, 0]), np.zeros((2, 2)), w)
        assert np.allclose(out[0].psi, [1.0, 6.0, 2.0], rtol=0, atol=1e-12)

    def test_scaling_is_linear(self, rng):
        """Scaling every attribution scales the importance track"""
        phi = rng.normal(size=(8, 3, 2))
        yhat = np.array([0, 1] * 4)
        cvn = rng.normal(size=(8, 3))
        w = rng.normal(size=(3, 7))
        base = global_explain(_tensor(phi), yhat, cvn, w)
        scaled = global_explain(_tensor(-2.5 * phi), yhat, cvn, w)
        for cls in (0, 1):
            assert np.allclose(scaled[cls].psi, -2.5 * base[cls].psi, rtol=1e-12, atol=1e-12)

    def test_zero_loading_columns_get_zero(self, rng):
        """Wavenumbers no component loads on carry no importance"""
        loadings = rng.normal(size=(3, 8))
        loadings[:, [2, 5]] = 0.0
        out = global_explain(_tensor(rng.normal(size=(6, 3, 2))), np.array([0, 1, 0, 1, 0, 1]),
                             rng.normal(size=(6, 3)), loadings)
        for g in out.values():
            assert g.psi[2] == 0.0 and g.psi[5] == 0.0
            assert g.pc_track[2] == 0.0

    def test_empty_class(self, rng):
        """A class nobody is predicted as has no tracks"""
        phi = _tensor(rng.normal(size=(4, 2, 3)))
        out = global_explain(phi, np.array([0, 0, 1, 1]), rng.normal(size=(4, 2)), np.eye(2),
                             class_names=["a", "b", "c"])
        assert out[2].empty
        assert out[2].psi is None
        assert out[2].class_name == "c"
        assert not out[0].empty

    def test_shape_mismatch(self, rng):
        """Loadings must have one row per component"""
        with pytest.raises(ExplainerError):
            global_explain(_tensor(rng.normal(size=(4, 2, 2))), np.zeros(4, dtype=int),
                           rng.normal(size=(4, 2)), np.eye(3))


class TestLocal:
    """Test sign-split local explanations"""

    def test_sign_split(self):
        """Positive and negative attributions project separately"""
        phi = _tensor(np.array([[[0.3, -0.3], [-0.2, 0.2]]]))
        w = np.array([[1.0, 0.0, -1.0], [0.5, 0.5, 0.0]])
        le = local_explain(phi, 0, 0, np.array([0.1, 0.2]), w)
        assert np.allclose(le.psi_pos, [0.3, 0.0, 0.3])
        assert np.allclose(le.psi_neg, [-0.1, -0.1, 0.0])
        assert np.allclose(le.pc_track, [0.2, 0.1, -0.1])

    @settings(max_examples=50, deadline=None)
    @given(
        arrays(np.float64, (1, 3, 2), elements=finite),
        arrays(np.float64, (3, 6), elements=finite),
    )
    def test_combination_matches_direct_projection(self, phi, loadings):
        """psi_pos + psi_neg equals phi^T |W|"""
        le = local_explain(_tensor(phi), 0, 1, np.zeros(3), loadings)
        assert np.all(le.psi_pos >= 0) and np.all(le.psi_neg <= 0)
        report = combine_sanity(le, loadings, phi[0, :, 1], tol=1e-12 * max(1.0, np.abs(phi).max() * np.abs(loadings).sum()))
        assert report.passed

    def test_combined_vector(self, rng):
        """Combined vector is the sum of both parts"""
        phi = _tensor(rng.normal(size=(2, 3, 2)))
        le = local_explain(phi, 1, 0, np.zeros(3), rng.normal(size=(3, 5)))
        assert np.array_equal(combined_local_vector(le), le.psi_pos + le.psi_neg)

    def test_index_bounds(self, rng):
        """Sample and class indices are range-checked"""
        phi = _tensor(rng.normal(size=(2, 3, 2)))
        with pytest.raises(ExplainerError):
            local_explain(phi, 2, 0, np.zeros(3), np.eye(3))
        with pytest.raises(ExplainerError):
            local_explain(phi, 0, 2, np.zeros(3), np.eye(3))

    def test_explain_all_uses_predicted_class(self, rng):
        """Each sample is explained toward its own prediction"""
        phi = _tensor(rng.normal(size=(3, 2, 2)))
        out = local_explain_all(phi, np.array([1, 0, 1]), rng.normal(size=(3, 2)), np.eye(2), ["x", "y", "z"])
        assert [le.predicted_class for le in out] == [1, 0, 1]
        assert [le.sample_id for le in out] == ["x", "y", "z"]
