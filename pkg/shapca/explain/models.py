"""
Attribution and explanation data models
"""
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, model_validator

from shapca.utils.arrays import FloatArray, FrozenModel


class ExplainerError(ValueError):
    pass


class BackgroundSelection(str, Enum):
    AUTO = "auto"
    TRAINING_SET = "training_set"
    KMEANS = "kmeans"


class BackgroundSet(FrozenModel):
    """Reference rows for imputing missing features; weights sum to 1"""
    rows: FloatArray
    weights: FloatArray
    selection: BackgroundSelection

    @model_validator(mode="after")
    def _check_rows(self):
        if self.rows.ndim != 2 or self.rows.shape[0] == 0:
            raise ValueError("background must be a non-empty M x K matrix")
        if self.weights.shape != (self.rows.shape[0],):
            raise ValueError("background needs one weight per row")
        if np.any(self.weights < 0) or not np.isclose(self.weights.sum(), 1.0, rtol=0, atol=1e-9):
            raise ValueError("background weights must be non-negative and sum to 1")
        return self


class AttributionTensor(FrozenModel):
    """phi[i, k, c]: contribution of feature k to class-c probability of sample i"""
    phi: FloatArray
    phi0: FloatArray
    explainer: str
    class_names: Optional[List[str]] = None

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.phi.ndim != 3:
            raise ValueError("phi must be N x K x C")
        if self.phi0.shape != (self.phi.shape[2],):
            raise ValueError("phi0 must have one entry per class")
        if self.class_names is not None and len(self.class_names) != self.phi.shape[2]:
            raise ValueError("class_names must have one entry per class")
        return self

    @property
    def n_samples(self) -> int:
        return int(self.phi.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.phi.shape[1])

    @property
    def n_classes(self) -> int:
        return int(self.phi.shape[2])

    def reconstructed(self) -> np.ndarray:
        """phi0 + sum_k phi, N x C"""
        return self.phi0[None, :] + self.phi.sum(axis=1)


class GlobalExplanation(FrozenModel):
    """Back-projected class-wise importance (psi) and value (pc_track) tracks; empty when no sample was predicted as the class"""
    class_index: int
    class_name: str
    n_samples_used: int
    psi: Optional[FloatArray] = None
    pc_track: Optional[FloatArray] = None

    @model_validator(mode="after")
    def _check_tracks(self):
        if self.n_samples_used == 0:
            if self.psi is not None or self.pc_track is not None:
                raise ValueError("an empty class carries no tracks")
            return self
        if self.psi is None or self.pc_track is None:
            raise ValueError("psi and pc_track are required when samples were used")
        if self.psi.shape != self.pc_track.shape or self.psi.ndim != 1:
            raise ValueError("psi and pc_track must be length-P vectors")
        if not (np.all(np.isfinite(self.psi)) and np.all(np.isfinite(self.pc_track))):
            raise ValueError("tracks must be finite")
        return self

    @property
    def empty(self) -> bool:
        return self.n_samples_used == 0


class LocalExplanation(FrozenModel):
    """Sign-split back-projection of one sample's attributions toward one class"""
    sample_index: int
    predicted_class: int
    psi_pos: FloatArray
    psi_neg: FloatArray
    pc_track: FloatArray
    sample_id: Optional[str] = None

    @model_validator(mode="after")
    def _check_signs(self):
        if not (self.psi_pos.shape == self.psi_neg.shape == self.pc_track.shape) or self.psi_pos.ndim != 1:
            raise ValueError("psi_pos, psi_neg and pc_track must be length-P vectors")
        if np.any(self.psi_pos < 0):
            raise ValueError("psi_pos must be non-negative")
        if np.any(self.psi_neg > 0):
            raise ValueError("psi_neg must be non-positive")
        return self


class SanityReport(BaseModel):
    passed: bool
    max_deviation: float
    tolerance: float
