"""
============================================================================
IMAGE SCHEMAS
============================================================================
Immutable image types yang dipakai semua module lain.

Schemas:
    - GrayImage: grid intensities di [0,1], row-major (height x width)
    - ColorImage: grid RGB triples di [0,1]^3 (height x width x 3)

Array di dalam image selalu read-only float64. Constructor menolak NaN dan
values di luar [0,1]; gunakan `from_array(..., clip=True)` untuk clamp.
============================================================================
"""

from typing import Any, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

RGB = Tuple[float, float, float]


def _frozen_array(value: Any, ndim: int) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-D array, got shape {arr.shape}")
    if ndim == 3 and arr.shape[2] != 3:
        raise ValueError(f"expected RGB planes in the last axis, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"intensities outside [0,1]: min={arr.min()!r} max={arr.max()!r}")
    arr.setflags(write=False)
    return arr


class _ImageBase(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    data: np.ndarray

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    @property
    def area(self) -> int:
        return self.height * self.width

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))


class GrayImage(_ImageBase):
    """
    Grayscale image. `data[r, c]` adalah intensity di row r, column c.

    Example:
        >>> img = GrayImage.zeros(8, 8)
        >>> img.width, img.height
        (8, 8)
    """

    @field_validator("data", mode="before")
    @classmethod
    def check_data(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, 2)

    @classmethod
    def from_array(cls, arr: Any, *, clip: bool = False) -> "GrayImage":
        arr = np.asarray(arr, dtype=np.float64)
        if clip:
            arr = np.clip(np.nan_to_num(arr, nan=0.0), 0.0, 1.0)
        return cls(data=arr)

    @classmethod
    def zeros(cls, height: int, width: int) -> "GrayImage":
        return cls(data=np.zeros((height, width)))

    @classmethod
    def full(cls, height: int, width: int, value: float) -> "GrayImage":
        return cls(data=np.full((height, width), value, dtype=np.float64))


class ColorImage(_ImageBase):
    """RGB image, `data[r, c]` adalah triple (R, G, B)."""

    @field_validator("data", mode="before")
    @classmethod
    def check_data(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, 3)

    @classmethod
    def from_array(cls, arr: Any, *, clip: bool = False) -> "ColorImage":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 2:
            arr = np.repeat(arr[:, :, None], 3, axis=2)
        if clip:
            arr = np.clip(np.nan_to_num(arr, nan=0.0), 0.0, 1.0)
        return cls(data=arr)

    @classmethod
    def filled(cls, height: int, width: int, color: RGB) -> "ColorImage":
        arr = np.empty((height, width, 3), dtype=np.float64)
        arr[:, :] = np.asarray(color, dtype=np.float64)
        return cls(data=arr)


def check_rgb(value: Any) -> RGB:
    rgb = tuple(float(c) for c in value)
    if len(rgb) != 3:
        raise ValueError(f"expected an RGB triple, got {value!r}")
    if any(not (0.0 <= c <= 1.0) for c in rgb):
        raise ValueError(f"RGB channels must lie in [0,1], got {rgb!r}")
    return rgb  # type: ignore[return-value]
