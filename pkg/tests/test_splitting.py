"""
Tests for train/test splits and cross-validation folds
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shapca.spectra.errors import SplitError
from shapca.spectra.io import subset
from shapca.spectra.models import FoldMode, SpectraDataset, SpectralAxis, SplitMode, SplitSpec
from shapca.spectra.splitting import default_fold_mode, kfold_indices, split, split_indices


def _toy(n: int, n_groups: int = None) -> SpectraDataset:
    labels = np.arange(n) % 2
    groups = None if n_groups is None else [f"g{i % n_groups}" for i in range(n)]
    return SpectraDataset(
        axis=SpectralAxis(values=[1.0, 2.0, 3.0]),
        intensities=np.arange(3 * n, dtype=float).reshape(n, 3),
        labels=labels,
        class_names=["a", "b"],
        sample_ids=[f"s{i}" for i in range(n)],
        groups=groups,
    )


class TestSplit:
    """Test holdout splitting"""

    def test_group_level_disjoint(self, dataset):
        """No group appears on both sides"""
        train, test = split(dataset, SplitSpec(mode=SplitMode.GROUP_LEVEL, test_fraction=0.25, seed=5))
        assert not set(train.groups) & set(test.groups)
        assert train.n_samples + test.n_samples == dataset.n_samples

    def test_group_level_deterministic(self, dataset):
        """Same seed, same split"""
        spec = SplitSpec(seed=11)
        a = split_indices(dataset, spec)
        b = split_indices(dataset, spec)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_group_level_without_groups(self):
        """Group split needs group ids"""
        with pytest.raises(SplitError):
            split(_toy(10), SplitSpec(mode=SplitMode.GROUP_LEVEL))

    def test_stratified_keeps_both_classes(self):
        """Stratified split keeps every class on both sides"""
        train, test = split(_toy(20), SplitSpec(mode=SplitMode.SAMPLE_LEVEL_STRATIFIED, test_fraction=0.3, seed=1))
        assert set(train.labels) == {0, 1}
        assert set(test.labels) == {0, 1}

    def test_stratified_infeasible(self):
        """A class with one member cannot be stratified"""
        ds = _toy(3)
        with pytest.raises(SplitError):
            split(ds, SplitSpec(mode=SplitMode.SAMPLE_LEVEL_STRATIFIED))


class TestKFold:
    """Test fold generation"""

    def test_group_kfold_partition(self, dataset):
        """Test folds partition the samples and respect groups"""
        folds = kfold_indices(dataset, 5, FoldMode.GROUP_KFOLD, seed=2)
        covered = np.concatenate([test for _, test in folds])
        assert np.array_equal(np.sort(covered), np.arange(dataset.n_samples))
        for train, test in folds:
            tr = subset(dataset, train)
            te = subset(dataset, test)
            assert not set(tr.groups) & set(te.groups)

    def test_too_many_folds_for_groups(self):
        """k larger than the number of groups is infeasible"""
        with pytest.raises(SplitError):
            kfold_indices(_toy(12, n_groups=3), 4, FoldMode.GROUP_KFOLD)

    def test_too_many_folds_for_class(self):
        """k larger than the smallest class is infeasible"""
        with pytest.raises(SplitError):
            kfold_indices(_toy(6), 4, FoldMode.STRATIFIED_KFOLD)

    def test_default_mode(self, dataset):
        """Groups select GroupKFold, otherwise stratified"""
        assert default_fold_mode(dataset) == FoldMode.GROUP_KFOLD
        assert default_fold_mode(_toy(10)) == FoldMode.STRATIFIED_KFOLD

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(min_value=8, max_value=40), k=st.integers(min_value=2, max_value=4), seed=st.integers(0, 1000))
    def test_stratified_partition_property(self, n, k, seed):
        """Stratified test folds are disjoint and cover every sample"""
        folds = kfold_indices(_toy(n), k, FoldMode.STRATIFIED_KFOLD, seed=seed)
        assert len(folds) == k
        covered = np.concatenate([test for _, test in folds])
        assert np.array_equal(np.sort(covered), np.arange(n))
        for train, test in folds:
            assert not set(train) & set(test)
