"""
Exact Shapley values by enumerating every coalition (verification oracle)
"""
import math
from typing import Callable, Optional, Union

import numpy as np

from shapca.classifiers.models import DecisionTree, ForestModel
from shapca.classifiers.predict import predict_proba
from shapca.config import settings
from shapca.explain.models import AttributionTensor, BackgroundSet, ExplainerError

ProbaFn = Callable[[np.ndarray], np.ndarray]


def as_proba_fn(model) -> ProbaFn:
    """Fitted classifier or plain callable -> function from an M x K matrix to M x C outputs"""
    if callable(model):
        return model
    return lambda z: predict_proba(model, z)


def _path_expectation(tree: DecisionTree, x: np.ndarray, in_coalition: np.ndarray, node: int = 0) -> np.ndarray:
    if tree.children_left[node] < 0:
        return tree.value[node]
    f = tree.feature[node]
    left, right = tree.children_left[node], tree.children_right[node]
    if in_coalition[f]:
        child = left if x[f] <= tree.threshold[node] else right
        return _path_expectation(tree, x, in_coalition, child)
    return (
        tree.n_train[left] * _path_expectation(tree, x, in_coalition, left)
        + tree.n_train[right] * _path_expectation(tree, x, in_coalition, right)
    ) / tree.n_train[node]


def _coalition_mask(index: int, k: int) -> np.ndarray:
    return np.array([(index >> j) & 1 for j in range(k)], dtype=bool)


def coalition_values(
    model: Union[ForestModel, ProbaFn],
    x: np.ndarray,
    background: Optional[BackgroundSet] = None,
) -> np.ndarray:
    """v(S) for every bitmask S in [0, 2^K), as a 2^K x C matrix"""
    k = x.size
    if background is None:
        if not isinstance(model, ForestModel):
            raise ExplainerError("a background set is required unless the model is a forest")
        values = []
        for s in range(2 ** k):
            mask = _coalition_mask(s, k)
            values.append(np.mean([_path_expectation(t, x, mask) for t in model.trees], axis=0))
        return np.vstack(values)

    if background.rows.shape[1] != k:
        raise ExplainerError(f"background has {background.rows.shape[1]} features, row has {k}")
    proba = as_proba_fn(model)
    values = []
    for s in range(2 ** k):
        mask = _coalition_mask(s, k)
        z = np.where(mask[None, :], x[None, :], background.rows)
        values.append(background.weights @ proba(z))
    return np.vstack(values)


def brute_force_shap(
    model: Union[ForestModel, ProbaFn],
    x: np.ndarray,
    background: Optional[BackgroundSet] = None,
) -> AttributionTensor:
    """
    phi_k = sum over S not containing k of |S|! (K - |S| - 1)! / K! * [v(S + k) - v(S)].

    With a background, v(S) averages the model over background rows with the features
    in S fixed to x. Without one (forests only), v(S) is the cover-weighted expectation
    that TreeSHAP uses.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    k = x.size
    if k > settings.BRUTE_FORCE_MAX:
        raise ExplainerError(f"brute force over {k} features exceeds the limit of {settings.BRUTE_FORCE_MAX}")
    v = coalition_values(model, x, background)
    weights = [math.factorial(s) * math.factorial(k - s - 1) / math.factorial(k) for s in range(k)]
    phi = np.zeros((k, v.shape[1]))
    for s in range(2 ** k):
        size = bin(s).count("1")
        for j in range(k):
            if not (s >> j) & 1:
                phi[j] += weights[size] * (v[s | (1 << j)] - v[s])
    return AttributionTensor(phi=phi[None], phi0=v[0], explainer="brute_force")
