"""
Classifier, pipeline and search data models
"""
from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from shapca.decomposition.models import ComponentScaler, SparsePcaConfig, SparsePcaModel
from shapca.spectra.models import FoldMode
from shapca.utils.arrays import FloatArray, FrozenModel, IntArray


class ModelError(ValueError):
    pass


class ForestConfig(FrozenModel):
    kind: Literal["forest"] = "forest"
    n_trees: int = Field(100, ge=1)
    max_depth: Optional[int] = Field(None, ge=0)
    min_leaf: int = Field(1, ge=1)
    max_features: Optional[int] = Field(None, ge=1)  # None -> ceil(sqrt(K))
    seed: int = 0


class LinearConfig(FrozenModel):
    kind: Literal["linear"] = "linear"
    l2_strength: float = Field(1e-2, gt=0.0)
    max_epochs: int = Field(500, ge=1)
    tol: float = Field(1e-10, ge=0.0)


ClassifierConfig = Annotated[Union[ForestConfig, LinearConfig], Field(discriminator="kind")]


class DecisionTree(FrozenModel):
    """
    Array-encoded binary tree; node 0 is the root.

    A sample goes left when x[feature] <= threshold. Leaves have children == -1 and
    feature == -1. value holds the empirical class distribution of the bootstrap
    samples reaching each node; n_train is that sample count (the node cover).
    """
    children_left: IntArray
    children_right: IntArray
    feature: IntArray
    threshold: FloatArray
    value: FloatArray
    n_train: IntArray

    @model_validator(mode="after")
    def _check_tree(self):
        n = self.children_left.shape[0]
        for name in ("children_right", "feature", "threshold", "n_train"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have one entry per node")
        if self.value.ndim != 2 or self.value.shape[0] != n:
            raise ValueError("value must be n_nodes x C")
        leaves = self.children_left < 0
        if not np.allclose(self.value[leaves].sum(axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError("leaf class probabilities must sum to 1")
        internal = np.flatnonzero(~leaves)
        if internal.size:
            covers = self.n_train[self.children_left[internal]] + self.n_train[self.children_right[internal]]
            if np.any(covers != self.n_train[internal]):
                raise ValueError("internal node cover must equal the sum of its children")
        return self

    @property
    def n_nodes(self) -> int:
        return int(self.children_left.shape[0])

    def is_leaf(self, node: int) -> bool:
        return self.children_left[node] < 0

    def max_depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if not self.is_leaf(node):
                depth[self.children_left[node]] = depth[node] + 1
                depth[self.children_right[node]] = depth[node] + 1
        return int(depth.max())


class ForestModel(FrozenModel):
    kind: Literal["forest"] = "forest"
    trees: List[DecisionTree]
    n_features: int
    n_classes: int
    config: ForestConfig
    bootstrap_indices: List[IntArray]

    @model_validator(mode="after")
    def _check_features(self):
        for tree in self.trees:
            used = tree.feature[tree.feature >= 0]
            if used.size and used.max() >= self.n_features:
                raise ValueError("tree uses a feature index >= n_features")
            if tree.value.shape[1] != self.n_classes:
                raise ValueError("tree class count does not match the forest")
        return self


class LinearProbModel(FrozenModel):
    """Multinomial logistic model with L2 penalty on the weights"""
    kind: Literal["linear"] = "linear"
    weights: FloatArray           # C x K
    bias: FloatArray              # C
    l2_strength: float
    loss_history: List[float] = []

    @property
    def n_features(self) -> int:
        return int(self.weights.shape[1])

    @property
    def n_classes(self) -> int:
        return int(self.weights.shape[0])


Classifier = Annotated[Union[ForestModel, LinearProbModel], Field(discriminator="kind")]


class PipelineConfig(FrozenModel):
    """sparse_pca = None trains the classifier on the raw spectral features"""
    sparse_pca: Optional[SparsePcaConfig] = SparsePcaConfig()
    classifier: ClassifierConfig = ForestConfig()
    clip: float = Field(1.5, ge=1.0)


class FittedPipeline(FrozenModel):
    """Optional Sparse PCA + component scaler + classifier; no Sparse PCA means raw features"""
    sparse_pca: Optional[SparsePcaModel] = None
    scaler: Optional[ComponentScaler] = None
    classifier: Classifier
    class_names: List[str]

    @property
    def uses_components(self) -> bool:
        return self.sparse_pca is not None


class Scoring(str, Enum):
    ACCURACY = "accuracy"
    MACRO_F1 = "macro_f1"


class SearchSpec(BaseModel):
    """Two-stage search: randomized sampling, then a grid around the stage-1 winner"""
    n_samples: int = Field(10, ge=1)
    distributions: Dict[str, Any] = {}
    grids: Dict[str, List[Any]] = {}
    cv_mode: Optional[FoldMode] = None
    k: int = Field(5, ge=2)
    scoring: Scoring = Scoring.ACCURACY
    comparable_within: float = Field(0.0, ge=0.0)
    seed: int = 0

    @field_validator("grids")
    @classmethod
    def _check_grids(cls, v: Dict[str, List[Any]]) -> Dict[str, List[Any]]:
        for key, values in v.items():
            if not values:
                raise ValueError(f"grid for {key!r} is empty")
        return v

    @field_validator("distributions", "grids")
    @classmethod
    def _check_keys(cls, v: Dict[str, Any]) -> Dict[str, Any]:
        for key in v:
            if not (key.startswith("spca__") or key.startswith("clf__")):
                raise ValueError(f"search key {key!r} must start with 'spca__' or 'clf__'")
        return v


class CandidateScore(BaseModel):
    stage: str
    candidate: int
    params: Dict[str, Any]
    mean_accuracy: float
    std_accuracy: float
    mean_macro_f1: float
    mean_sparsity: float
    score: float


class SearchResult(BaseModel):
    best_params: Dict[str, Any]
    best_sparse_pca: Optional[SparsePcaConfig]
    best_classifier: ClassifierConfig
    table: List[CandidateScore]


class Metrics(BaseModel):
    accuracy: float
    macro_f1: float
    n_samples: int


class RepeatedMetrics(BaseModel):
    runs: List[Metrics]
    accuracy_mean: float
    accuracy_ci95: float
    macro_f1_mean: float
    macro_f1_ci95: float
