"""
Spectra data models
"""
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import Field, field_validator, model_validator

from shapca.utils.arrays import FloatArray, FrozenModel, IntArray


class SpectralAxis(FrozenModel):
    """Ordered wavenumber (cm-1) or wavelength (nm) positions"""
    values: FloatArray
    unit_label: str = "cm-1"

    @field_validator("values")
    @classmethod
    def _check_values(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 1 or v.size < 2:
            raise ValueError("axis needs at least 2 positions")
        if not np.all(np.isfinite(v)):
            raise ValueError("axis values must be finite")
        if not np.all(np.diff(v) > 0):
            raise ValueError("axis values must be strictly increasing")
        return v

    @property
    def size(self) -> int:
        return int(self.values.size)


class SpectraDataset(FrozenModel):
    """N spectra over a shared axis, with labels and optional patient groups"""
    axis: SpectralAxis
    intensities: FloatArray
    labels: IntArray
    class_names: List[str]
    sample_ids: List[str]
    groups: Optional[List[str]] = None

    @model_validator(mode="after")
    def _check_shapes(self):
        x = self.intensities
        if x.ndim != 2:
            raise ValueError("intensities must be an N x P matrix")
        n, p = x.shape
        if p != self.axis.size:
            raise ValueError(f"intensities have {p} columns, axis has {self.axis.size}")
        if not np.all(np.isfinite(x)):
            raise ValueError("intensities must be finite")
        if len(self.class_names) < 2:
            raise ValueError("at least 2 classes are required")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class names must be unique")
        if self.labels.shape != (n,):
            raise ValueError("labels must have one entry per spectrum")
        if n and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise ValueError("label index outside class_names")
        if len(self.sample_ids) != n:
            raise ValueError("sample_ids must have one entry per spectrum")
        if self.groups is not None and len(self.groups) != n:
            raise ValueError("groups must have one entry per spectrum")
        return self

    @property
    def n_samples(self) -> int:
        return int(self.intensities.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.intensities.shape[1])

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def with_intensities(self, intensities: np.ndarray, axis: Optional[SpectralAxis] = None) -> "SpectraDataset":
        """Same samples and labels, new signal matrix (and optionally a new axis)"""
        return SpectraDataset(
            axis=axis if axis is not None else self.axis,
            intensities=intensities,
            labels=self.labels,
            class_names=self.class_names,
            sample_ids=self.sample_ids,
            groups=self.groups,
        )


class SplitMode(str, Enum):
    GROUP_LEVEL = "group_level"
    SAMPLE_LEVEL_STRATIFIED = "sample_level_stratified"


class FoldMode(str, Enum):
    GROUP_KFOLD = "group_kfold"
    STRATIFIED_KFOLD = "stratified_kfold"


class SplitSpec(FrozenModel):
    mode: SplitMode = SplitMode.GROUP_LEVEL
    test_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    seed: int = 0


class NormalizeMode(str, Enum):
    MAX_INTENSITY = "max_intensity"
    NONE = "none"


class PreprocessConfig(FrozenModel):
    """Crop -> Savitzky-Golay -> baseline -> normalize; None disables a step"""
    crop_min: Optional[float] = None
    crop_max: Optional[float] = None
    savgol_window: Optional[int] = 5
    savgol_polyorder: int = Field(2, ge=0)
    baseline_lambda: Optional[float] = Field(5e5, gt=0.0)
    baseline_p: float = Field(0.003, gt=0.0, lt=1.0)
    baseline_max_iter: int = Field(50, ge=1)
    normalize: NormalizeMode = NormalizeMode.MAX_INTENSITY

    @model_validator(mode="after")
    def _check_params(self):
        if self.savgol_window is not None:
            if self.savgol_window < 3 or self.savgol_window % 2 == 0:
                raise ValueError("savgol_window must be an odd integer >= 3")
            if self.savgol_polyorder >= self.savgol_window:
                raise ValueError("savgol_polyorder must be < savgol_window")
        if self.crop_min is not None and self.crop_max is not None and self.crop_min >= self.crop_max:
            raise ValueError("crop_min must be < crop_max")
        return self
