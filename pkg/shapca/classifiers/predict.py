"""
Model-agnostic prediction entry points
"""
from typing import Union

import numpy as np

from shapca.classifiers.forest import forest_proba
from shapca.classifiers.linear import linear_proba
from shapca.classifiers.models import ForestModel, LinearProbModel, ModelError
from shapca.decomposition.models import ComponentValues


def _as_matrix(cv: Union[ComponentValues, np.ndarray]) -> np.ndarray:
    if isinstance(cv, ComponentValues):
        return cv.values
    x = np.asarray(cv, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    return x


def predict_proba(model: Union[ForestModel, LinearProbModel], cv: Union[ComponentValues, np.ndarray]) -> np.ndarray:
    """N x C class probabilities"""
    x = _as_matrix(cv)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise ModelError(f"model expects {model.n_features} features, got shape {x.shape}")
    if isinstance(model, ForestModel):
        return forest_proba(model, x)
    if isinstance(model, LinearProbModel):
        return linear_proba(model, x)
    raise ModelError(f"unsupported model type {type(model).__name__}")


def predict(model: Union[ForestModel, LinearProbModel], cv: Union[ComponentValues, np.ndarray]) -> np.ndarray:
    """Argmax class per row; np.argmax keeps the first maximum, so ties go to the lower class"""
    return np.argmax(predict_proba(model, cv), axis=1).astype(np.int64)
