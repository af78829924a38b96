"""
Numpy-aware pydantic field types
Arrays are copied on validation and made read-only, so frozen models stay immutable.
"""
from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _as_float_array(value: Any) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    return _readonly(arr)


def _as_int_array(value: Any) -> np.ndarray:
    arr = np.asarray(value)
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        as_float = arr.astype(np.float64)
        if not np.all(np.equal(np.mod(as_float, 1), 0)):
            raise ValueError("expected integer values")
    return _readonly(arr.astype(np.int64))


def _to_list(arr: np.ndarray) -> list:
    return arr.tolist()


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_float_array),
    PlainSerializer(_to_list, return_type=list, when_used="json"),
]

IntArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_int_array),
    PlainSerializer(_to_list, return_type=list, when_used="json"),
]


class FrozenModel(BaseModel):
    """Immutable pydantic base for fitted models and datasets"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, extra="forbid")

    def to_json_dict(self) -> dict:
        return self.model_dump(mode="json")

    @classmethod
    def from_json_dict(cls, data: dict):
        return cls.model_validate(data)
