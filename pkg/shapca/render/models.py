"""
Rendering options
"""
from enum import Enum

from pydantic import BaseModel, Field


class RenderError(ValueError):
    pass


class PanelLayout(str, Enum):
    SINGLE = "single"
    GRID = "grid"


class RenderSpec(BaseModel):
    width: int = Field(900, ge=100)
    height: int = Field(320, ge=80)
    margin: int = Field(56, ge=0)
    alpha_min: float = Field(0.05, ge=0.0, lt=1.0)
    layout: PanelLayout = PanelLayout.SINGLE
    x_label: str = "Wavenumber (cm-1)"
    y_label: str = "Intensity (a.u.)"
    stroke_width: float = Field(2.5, gt=0.0)
    mean_color: str = "#9e9e9e"
