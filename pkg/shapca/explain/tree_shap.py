"""
Exact TreeSHAP for the forest classifier

Path-dependent Shapley values: a feature outside the coalition is integrated out by
following both children weighted by their training cover. The recursion keeps the
unique-feature path with its zero/one fractions and permutation weights, extending it
at every split and unwinding it when a feature repeats. Values are class-probability
vectors, so each pass attributes all C outputs at once.
"""
import logging
from typing import List, Tuple

import numpy as np
from joblib import Parallel, delayed

from shapca.classifiers.models import DecisionTree, ForestModel
from shapca.decomposition.models import ComponentValues
from shapca.explain.models import AttributionTensor, ExplainerError

logger = logging.getLogger(__name__)

_Path = Tuple[List[int], List[float], List[float], List[float]]


def _extend(path: _Path, zero_fraction: float, one_fraction: float, feature: int) -> _Path:
    feats, zeros, ones, weights = path
    depth = len(feats)
    feats = feats + [feature]
    zeros = zeros + [zero_fraction]
    ones = ones + [one_fraction]
    weights = weights + [1.0 if depth == 0 else 0.0]
    for i in range(depth - 1, -1, -1):
        weights[i + 1] += one_fraction * weights[i] * (i + 1) / (depth + 1)
        weights[i] = zero_fraction * weights[i] * (depth - i) / (depth + 1)
    return feats, zeros, ones, weights


def _unwind(path: _Path, index: int) -> _Path:
    feats, zeros, ones, weights = path
    depth = len(feats) - 1
    one, zero = ones[index], zeros[index]
    weights = list(weights)
    next_one = weights[depth]
    for i in range(depth - 1, -1, -1):
        if one != 0:
            tmp = weights[i]
            weights[i] = next_one * (depth + 1) / ((i + 1) * one)
            next_one = tmp - weights[i] * zero * (depth - i) / (depth + 1)
        else:
            weights[i] = weights[i] * (depth + 1) / (zero * (depth - i))
    keep = [j for j in range(depth + 1) if j != index]
    return [feats[j] for j in keep], [zeros[j] for j in keep], [ones[j] for j in keep], weights[:depth]


def _unwound_sum(path: _Path, index: int) -> float:
    _, zeros, ones, weights = path
    depth = len(weights) - 1
    one, zero = ones[index], zeros[index]
    next_one = weights[depth]
    total = 0.0
    for i in range(depth - 1, -1, -1):
        if one != 0:
            tmp = next_one * (depth + 1) / ((i + 1) * one)
            total += tmp
            next_one = weights[i] - tmp * zero * (depth - i) / (depth + 1)
        else:
            total += (weights[i] / zero) / ((depth - i) / (depth + 1))
    return total


def _recurse(
    tree: DecisionTree,
    x: np.ndarray,
    phi: np.ndarray,
    node: int,
    path: _Path,
    zero_fraction: float,
    one_fraction: float,
    feature: int,
):
    path = _extend(path, zero_fraction, one_fraction, feature)
    feats, zeros, ones, _ = path

    if tree.children_left[node] < 0:
        leaf_value = tree.value[node]
        for i in range(1, len(feats)):
            w = _unwound_sum(path, i)
            phi[feats[i]] += w * (ones[i] - zeros[i]) * leaf_value
        return

    split = int(tree.feature[node])
    left, right = int(tree.children_left[node]), int(tree.children_right[node])
    hot, cold = (left, right) if x[split] <= tree.threshold[node] else (right, left)
    cover = tree.n_train[node]
    incoming_zero, incoming_one = 1.0, 1.0
    if split in feats[1:]:
        index = feats.index(split, 1)
        incoming_zero, incoming_one = zeros[index], ones[index]
        path = _unwind(path, index)

    _recurse(tree, x, phi, hot, path, tree.n_train[hot] / cover * incoming_zero, incoming_one, split)
    _recurse(tree, x, phi, cold, path, tree.n_train[cold] / cover * incoming_zero, 0.0, split)


def expected_value(tree: DecisionTree) -> np.ndarray:
    """Cover-weighted mean of the leaf distributions"""
    leaves = tree.children_left < 0
    weights = tree.n_train[leaves] / tree.n_train[0]
    return weights @ tree.value[leaves]


def _check_covers(model: ForestModel):
    for t, tree in enumerate(model.trees):
        if np.any(tree.n_train <= 0):
            raise ExplainerError(f"tree {t} has a node with zero training cover")


def tree_shap_row(model: ForestModel, x: np.ndarray) -> np.ndarray:
    """K x C attributions for one row"""
    phi = np.zeros((model.n_features, model.n_classes))
    empty: _Path = ([], [], [], [])
    for tree in model.trees:
        _recurse(tree, x, phi, 0, empty, 1.0, 1.0, -1)
    return phi / len(model.trees)


def tree_shap(model: ForestModel, cv, workers: int = 1) -> AttributionTensor:
    """Exact path-dependent Shapley values of every row toward every class probability"""
    x = cv.values if isinstance(cv, ComponentValues) else np.atleast_2d(np.asarray(cv, dtype=np.float64))
    if x.shape[1] != model.n_features:
        raise ExplainerError(f"model expects {model.n_features} features, got {x.shape[1]}")
    _check_covers(model)
    rows = Parallel(n_jobs=workers)(delayed(tree_shap_row)(model, x[i]) for i in range(x.shape[0]))
    phi = np.stack(rows) if rows else np.zeros((0, model.n_features, model.n_classes))
    phi0 = np.mean([expected_value(t) for t in model.trees], axis=0)
    logger.debug(f"TreeSHAP: {x.shape[0]} rows, {len(model.trees)} trees")
    return AttributionTensor(phi=phi, phi0=phi0, explainer="tree")
