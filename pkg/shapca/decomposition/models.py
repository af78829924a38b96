"""
Sparse PCA data models
"""
from enum import Enum
from typing import List

import numpy as np
from pydantic import Field, model_validator

from shapca.utils.arrays import FloatArray, FrozenModel


class SparsePcaError(ValueError):
    pass


class InitMode(str, Enum):
    SVD = "svd"
    RANDOM = "random"


class SparsePcaConfig(FrozenModel):
    n_components: int = Field(10, ge=1)
    alpha: float = Field(1.0, ge=0.0)
    max_iter: int = Field(500, ge=1)
    tol: float = Field(1e-8, gt=0.0)
    seed: int = 0
    init: InitMode = InitMode.SVD


class SparsePcaModel(FrozenModel):
    """Fitted loadings W (K x P); row k defines component k"""
    loadings: FloatArray
    feature_means: FloatArray
    explained_variance: FloatArray
    sparsity_fraction: float
    config: SparsePcaConfig
    objective_history: List[float] = []
    n_iter: int = 0
    converged: bool = True
    degenerate_components: List[int] = []

    @model_validator(mode="after")
    def _check_shapes(self):
        w = self.loadings
        if w.ndim != 2:
            raise ValueError("loadings must be K x P")
        if self.feature_means.shape != (w.shape[1],):
            raise ValueError("feature_means must have length P")
        if self.explained_variance.shape != (w.shape[0],):
            raise ValueError("explained_variance must have length K")
        return self

    @property
    def n_components(self) -> int:
        return int(self.loadings.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.loadings.shape[1])


class ComponentValues(FrozenModel):
    """N x K component scores (PC_k per sample)"""
    values: FloatArray

    @model_validator(mode="after")
    def _check_values(self):
        if self.values.ndim != 2:
            raise ValueError("component values must be an N x K matrix")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("component values must be finite")
        return self

    @property
    def n_samples(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_components(self) -> int:
        return int(self.values.shape[1])


class ComponentScaler(FrozenModel):
    """Per-component min-max statistics mapping training values onto [-1, 1]"""
    minimum: FloatArray
    maximum: FloatArray
    clip: float = 1.5
