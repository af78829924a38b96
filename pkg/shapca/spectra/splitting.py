"""
Train/test splitting and cross-validation folds
Group-level splits keep every patient (group) on one side of the partition.
"""
import logging
from typing import List, Tuple

import numpy as np
from sklearn.model_selection import GroupKFold, StratifiedKFold, StratifiedShuffleSplit

from shapca.spectra.errors import SplitError
from shapca.spectra.io import subset
from shapca.spectra.models import FoldMode, SpectraDataset, SplitMode, SplitSpec

logger = logging.getLogger(__name__)

Fold = Tuple[np.ndarray, np.ndarray]


def _group_codes(groups: List[str], seed: int) -> np.ndarray:
    """Integer group codes in a seeded random order"""
    unique = sorted(set(groups))
    order = np.random.default_rng(seed).permutation(len(unique))
    code_of = {g: int(order[i]) for i, g in enumerate(unique)}
    return np.array([code_of[g] for g in groups], dtype=np.int64)


def _check_class_counts(labels: np.ndarray, minimum: int, what: str):
    counts = np.bincount(labels)
    present = counts[counts > 0]
    if present.size and present.min() < minimum:
        raise SplitError(f"{what}: a class has only {int(present.min())} samples (need >= {minimum})")


def split_indices(ds: SpectraDataset, spec: SplitSpec) -> Fold:
    """Sorted (train, test) row indices"""
    n = ds.n_samples
    if spec.mode == SplitMode.GROUP_LEVEL:
        if ds.groups is None:
            raise SplitError("group_level split requested but the dataset has no groups")
        unique = sorted(set(ds.groups))
        if len(unique) < 2:
            raise SplitError("group_level split needs at least 2 groups")
        rng = np.random.default_rng(spec.seed)
        shuffled = [unique[i] for i in rng.permutation(len(unique))]
        sizes = {g: 0 for g in unique}
        for g in ds.groups:
            sizes[g] += 1
        target = spec.test_fraction * n
        test_groups = set()
        count = 0
        # the last group always stays in train
        for g in shuffled[:-1]:
            if count >= target:
                break
            test_groups.add(g)
            count += sizes[g]
        is_test = np.array([g in test_groups for g in ds.groups])
    else:
        _check_class_counts(ds.labels, 2, "stratified split")
        splitter = StratifiedShuffleSplit(n_splits=1, test_size=spec.test_fraction, random_state=spec.seed)
        try:
            _, test_idx = next(splitter.split(np.zeros((n, 1)), ds.labels))
        except ValueError as e:
            raise SplitError(f"stratified split infeasible: {e}") from e
        is_test = np.zeros(n, dtype=bool)
        is_test[test_idx] = True

    train_idx = np.flatnonzero(~is_test)
    test_idx = np.flatnonzero(is_test)
    logger.info(f"Split ({spec.mode.value}): {train_idx.size} train / {test_idx.size} test")
    return train_idx, test_idx


def split(ds: SpectraDataset, spec: SplitSpec) -> Tuple[SpectraDataset, SpectraDataset]:
    """Partition a dataset into (train, test)"""
    train_idx, test_idx = split_indices(ds, spec)
    return subset(ds, train_idx), subset(ds, test_idx)


def kfold_indices(ds: SpectraDataset, k: int, mode: FoldMode, seed: int = 0) -> List[Fold]:
    """k (train, test) index pairs whose test folds partition the dataset"""
    if k < 2:
        raise SplitError("k must be >= 2")
    n = ds.n_samples
    placeholder = np.zeros((n, 1))
    mode = FoldMode(mode)
    if mode == FoldMode.GROUP_KFOLD:
        if ds.groups is None:
            raise SplitError("group_kfold requested but the dataset has no groups")
        n_groups = len(set(ds.groups))
        if k > n_groups:
            raise SplitError(f"k={k} exceeds the number of groups ({n_groups})")
        splitter = GroupKFold(n_splits=k)
        folds = splitter.split(placeholder, ds.labels, groups=_group_codes(ds.groups, seed))
    else:
        counts = np.bincount(ds.labels)
        min_count = int(counts[counts > 0].min())
        if k > min_count:
            raise SplitError(f"k={k} exceeds the smallest class count ({min_count})")
        splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
        folds = splitter.split(placeholder, ds.labels)
    return [(np.sort(train), np.sort(test)) for train, test in folds]


def default_fold_mode(ds: SpectraDataset) -> FoldMode:
    """GroupKFold when patient groups exist, stratified folds otherwise"""
    return FoldMode.GROUP_KFOLD if ds.groups is not None else FoldMode.STRATIFIED_KFOLD
