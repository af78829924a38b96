"""
Consistency protocol data models
"""
from enum import Enum
from typing import List, Optional, Union

from pydantic import BaseModel, Field

from shapca.explain.models import BackgroundSelection
from shapca.spectra.models import FoldMode

ScoreMatrix = List[List[Optional[float]]]


class Method(str, Enum):
    SHAPCA = "shapca"
    RAW_SHAP = "raw_shap"


class Resampling(str, Enum):
    KFOLD = "kfold"
    IDENTICAL = "identical"


class ConsistencyConfig(BaseModel):
    k: int = Field(5, ge=2)
    methods: List[Method] = [Method.SHAPCA, Method.RAW_SHAP]
    resampling: Resampling = Resampling.KFOLD
    fold_mode: Optional[FoldMode] = None
    background: BackgroundSelection = BackgroundSelection.AUTO
    n_coalitions: Union[int, str] = "auto"


class ClassScores(BaseModel):
    class_name: str
    cosine_mean: Optional[float]
    pearson_mean: Optional[float]
    n_defined_cosine: int
    n_defined_pearson: int
    cosine_matrix: ScoreMatrix
    pearson_matrix: ScoreMatrix


class LocalScores(BaseModel):
    cosine_mean: Optional[float]
    pearson_mean: Optional[float]
    n_sample_pairs: int
    n_class_mismatch: int
    exclusion_rate: float
    n_undefined_cosine: int
    n_undefined_pearson: int
    cosine_matrix: ScoreMatrix
    pearson_matrix: ScoreMatrix


class ConsistencyReport(BaseModel):
    method: Method
    classifier: str
    resampling: Resampling
    n_models: int
    n_pairs: int
    global_scores: List[ClassScores]
    local: LocalScores

    @property
    def label(self) -> str:
        return f"{self.method.value}_{self.classifier}"

    def mean_global_cosine(self) -> Optional[float]:
        defined = [s.cosine_mean for s in self.global_scores if s.cosine_mean is not None]
        return sum(defined) / len(defined) if defined else None
