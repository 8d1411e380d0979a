from enum import Enum
from typing import Any, Callable, Iterator

import numpy as np
from pydantic import BaseModel


class SweepShape(Enum):
    BIPOLAR = "bipolar"
    TENT = "tent"


class ElementKind(Enum):
    RESISTOR = "resistor"
    CAPACITOR = "capacitor"
    INDUCTOR = "inductor"


class SweepPhase(Enum):
    POSITIVE = "positive-sweep"
    NEGATIVE = "negative-sweep"


def _frozen(value: Any, dtype: type) -> np.ndarray:
    array = np.array(value, dtype=dtype)
    array.setflags(write=False)
    return array


class FloatArray(np.ndarray):
    """Read-only float array field; accepts any array-like, serializes as a list."""

    @classmethod
    def __get_validators__(cls) -> Iterator[Callable[[Any], np.ndarray]]:
        yield lambda value: _frozen(value, float)

    @classmethod
    def __modify_schema__(cls, field_schema: dict[str, Any]) -> None:
        field_schema.update(type="array", items={"type": "number"})


class IndexArray(np.ndarray):
    @classmethod
    def __get_validators__(cls) -> Iterator[Callable[[Any], np.ndarray]]:
        yield lambda value: _frozen(value, np.int64)

    @classmethod
    def __modify_schema__(cls, field_schema: dict[str, Any]) -> None:
        field_schema.update(type="array", items={"type": "integer"})


class FrozenModel(BaseModel):
    class Config:
        allow_mutation = False
        json_encoders = {
            np.ndarray: lambda array: array.tolist(),
            np.integer: int,
            np.floating: float,
        }
