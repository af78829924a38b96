"""
Random forest on component values

Each tree is grown on a bootstrap draw with greedy Gini splits at midpoints between
consecutive distinct values of a random feature subset. The subset at every node is
drawn from a stream keyed by (tree seed, heap position of the node), so the tree grown
with max_depth=d is exactly the top d levels of the tree grown with a larger depth.
"""
import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from shapca.classifiers.models import DecisionTree, ForestConfig, ForestModel, ModelError

logger = logging.getLogger(__name__)

# splits must improve Gini impurity by more than this
MIN_GAIN = 1e-12


def _gini(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    shares = counts / totals[:, None]
    return 1.0 - np.sum(shares ** 2, axis=1)


def _best_split(
    xs: np.ndarray,
    ys: np.ndarray,
    n_classes: int,
    candidates: np.ndarray,
    min_leaf: int,
) -> Optional[Tuple[int, float]]:
    """
    Best (feature, threshold) among the candidate features, or None.

    Features are scanned in ascending order and replaced only on a strictly larger gain;
    within a feature the lowest threshold wins, so ties go to (lower feature, lower threshold).
    """
    n = ys.size
    if n < 2 * min_leaf:
        return None
    onehot = np.eye(n_classes)[ys]
    total = onehot.sum(axis=0)
    parent = float(_gini(total[None, :], np.array([float(n)]))[0])
    if parent == 0.0:
        return None

    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    size_ok = (n_left >= min_leaf) & (n_right >= min_leaf)

    best_gain = MIN_GAIN
    best = None
    for f in candidates:
        order = np.argsort(xs[:, f], kind="stable")
        v = xs[order, f]
        valid = size_ok & (v[:-1] < v[1:])
        if not valid.any():
            continue
        left_counts = np.cumsum(onehot[order], axis=0)[:-1]
        right_counts = total - left_counts
        child = (n_left * _gini(left_counts, n_left) + n_right * _gini(right_counts, n_right)) / n
        gain = np.where(valid, parent - child, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best_gain:
            threshold = (v[i] + v[i + 1]) / 2.0
            if not v[i] <= threshold < v[i + 1]:
                threshold = v[i]
            best_gain = float(gain[i])
            best = (int(f), float(threshold))
    return best


def _grow_tree(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    cfg: ForestConfig,
    max_features: int,
    tree_seed: int,
) -> Tuple[DecisionTree, np.ndarray]:
    n, k = x.shape
    boot_rng = np.random.default_rng(np.random.SeedSequence([tree_seed, 0]))
    boot = np.sort(boot_rng.integers(0, n, size=n))

    left: List[int] = []
    right: List[int] = []
    feature: List[int] = []
    threshold: List[float] = []
    value: List[np.ndarray] = []
    cover: List[int] = []

    def new_node(idx: np.ndarray) -> int:
        left.append(-1)
        right.append(-1)
        feature.append(-1)
        threshold.append(0.0)
        value.append(np.bincount(y[idx], minlength=n_classes) / idx.size)
        cover.append(int(idx.size))
        return len(left) - 1

    stack = [(new_node(boot), boot, 0, 1)]
    while stack:
        node, idx, depth, position = stack.pop()
        if cfg.max_depth is not None and depth >= cfg.max_depth:
            continue
        node_rng = np.random.default_rng(np.random.SeedSequence([tree_seed, 1, position]))
        candidates = np.sort(node_rng.choice(k, size=max_features, replace=False))
        split = _best_split(x[idx], y[idx], n_classes, candidates, cfg.min_leaf)
        if split is None:
            continue
        f, thr = split
        goes_left = x[idx, f] <= thr
        left_idx, right_idx = idx[goes_left], idx[~goes_left]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(left_idx)
        right[node] = new_node(right_idx)
        stack.append((right[node], right_idx, depth + 1, 2 * position + 1))
        stack.append((left[node], left_idx, depth + 1, 2 * position))

    tree = DecisionTree(
        children_left=np.array(left, dtype=np.int64),
        children_right=np.array(right, dtype=np.int64),
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        value=np.vstack(value),
        n_train=np.array(cover, dtype=np.int64),
    )
    return tree, boot


def resolve_max_features(cfg: ForestConfig, n_features: int) -> int:
    if cfg.max_features is None:
        return max(1, math.ceil(math.sqrt(n_features)))
    return min(cfg.max_features, n_features)


def fit_forest(
    x: np.ndarray,
    labels: np.ndarray,
    cfg: ForestConfig,
    n_classes: Optional[int] = None,
    workers: int = 1,
) -> ForestModel:
    """Train cfg.n_trees bootstrap trees; deterministic for a fixed cfg.seed"""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ModelError("expected an N x K matrix and N labels")
    if x.shape[0] < 2:
        raise ModelError("a forest needs at least 2 training samples")
    if np.unique(y).size < 2:
        raise ModelError("training data contains a single class")
    n_classes = int(n_classes if n_classes is not None else y.max() + 1)
    max_features = resolve_max_features(cfg, x.shape[1])

    tree_seeds = np.random.SeedSequence(cfg.seed).generate_state(cfg.n_trees)
    grown = Parallel(n_jobs=workers)(
        delayed(_grow_tree)(x, y, n_classes, cfg, max_features, int(s)) for s in tree_seeds
    )
    logger.debug(f"Grew {cfg.n_trees} trees on {x.shape[0]} samples, max_features={max_features}")
    return ForestModel(
        trees=[t for t, _ in grown],
        n_features=x.shape[1],
        n_classes=n_classes,
        config=cfg,
        bootstrap_indices=[b for _, b in grown],
    )


def apply_tree(tree: DecisionTree, x: np.ndarray) -> np.ndarray:
    """Leaf index reached by every row of x"""
    node = np.zeros(x.shape[0], dtype=np.int64)
    rows = np.arange(x.shape[0])
    active = tree.children_left[node] >= 0
    while active.any():
        r, nd = rows[active], node[active]
        go_left = x[r, tree.feature[nd]] <= tree.threshold[nd]
        node[active] = np.where(go_left, tree.children_left[nd], tree.children_right[nd])
        active = tree.children_left[node] >= 0
    return node


def forest_proba(model: ForestModel, x: np.ndarray) -> np.ndarray:
    """Unweighted mean of leaf class distributions over trees"""
    out = np.zeros((x.shape[0], model.n_classes))
    for tree in model.trees:
        out += tree.value[apply_tree(tree, x)]
    return out / len(model.trees)


def bootstrap_accuracy(model: ForestModel, x: np.ndarray, labels: np.ndarray) -> float:
    """Mean over trees of each tree's accuracy on its own bootstrap draw"""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    scores = []
    for tree, boot in zip(model.trees, model.bootstrap_indices):
        leaf_pred = np.argmax(tree.value[apply_tree(tree, x[boot])], axis=1)
        scores.append(float(np.mean(leaf_pred == y[boot])))
    return float(np.mean(scores))
