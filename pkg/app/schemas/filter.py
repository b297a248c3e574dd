"""
============================================================================
FILTER SCHEMAS
============================================================================
Parameter dan hasil untuk prototype filtering (reference mask, filtered
prototype, filtering error, flag).

Schemas:
    - FilterFlag: ok / warn (orange) / fail (red)
    - FilterParams: thresholds, dilation, blur, flag limits
    - FilterReport: mask M, filtered F, error e, flag untuk satu character
============================================================================
"""

from enum import Enum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.image import GrayImage


class FilterFlag(str, Enum):
    OK = "ok"
    WARN = "warn"
    FAIL = "fail"


class FilterParams(BaseModel):
    """
    Parameter filtering.

    Attributes:
        t (float): Binarization threshold untuk reference prototype
        dilate_radius (int): Dilation radius (pixels)
        sigma (float): Gaussian std (pixels)
        t_prime (float): Threshold untuk ink finetuned prototype
        warn_at (float): e > warn_at -> warn
        fail_at (float): e > fail_at -> fail
        element (str): Structuring element dilation, square atau disk

    Example:
        >>> FilterParams(t=0.8, dilate_radius=2, sigma=2.0)
    """

    model_config = ConfigDict(frozen=True)

    t: float = Field(0.8, gt=0.0, lt=1.0, description="Binarization threshold")
    dilate_radius: int = Field(2, ge=0, description="Dilation radius in pixels")
    sigma: float = Field(2.0, gt=0.0, description="Gaussian standard deviation in pixels")
    t_prime: float = Field(0.65, gt=0.0, lt=1.0, description="Ink threshold for the filtering error")
    warn_at: float = Field(15.0, ge=0.0, description="Orange flag above this error")
    fail_at: float = Field(30.0, ge=0.0, description="Red flag above this error")
    element: Literal["square", "disk"] = Field("square", description="Dilation structuring element")

    @model_validator(mode="after")
    def check_limits(self) -> "FilterParams":
        if self.warn_at > self.fail_at:
            raise ValueError("warn_at must not exceed fail_at")
        return self


class FilterReport(BaseModel):
    """Hasil filtering satu character."""

    model_config = ConfigDict(frozen=True)

    char_id: str
    mask: GrayImage = Field(..., description="Reference mask M")
    filtered: GrayImage = Field(..., description="Filtered prototype F = M * P")
    error: float = Field(..., ge=0.0, description="Filtering error e")
    flag: FilterFlag

    def summary(self) -> dict:
        """Numeric part saja (untuk JSON report)."""
        return {"char_id": self.char_id, "error": self.error, "flag": self.flag.value}
