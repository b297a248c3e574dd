"""
============================================================================
ANALYSIS SCHEMAS
============================================================================
Types untuk perbandingan prototypes: difference maps, comparison graphs
(character / document), dan variability reports.
============================================================================
"""

from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.schemas.filter import FilterFlag
from app.schemas.image import ColorImage


class AnalysisOptions(BaseModel):
    """
    Options untuk distances dan variability.

    Attributes:
        norm: l2 (Euclidean, default) atau l1
        source: filtered (F, default) atau raw (P)
        aggregate: sum (default) atau mean atas pixels untuk sigma
    """

    model_config = ConfigDict(frozen=True)

    norm: Literal["l2", "l1"] = Field("l2", description="Pixel-space norm")
    source: Literal["filtered", "raw"] = Field("filtered", description="Compare filtered or raw prototypes")
    aggregate: Literal["sum", "mean"] = Field("sum", description="Per-pixel std aggregation")


class DifferenceMap(BaseModel):
    """
    Signed difference A - B plus render (white = 0, blue = positif,
    red = negatif).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    signed: np.ndarray
    render: ColorImage

    @field_validator("signed", mode="before")
    @classmethod
    def freeze_signed(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError("signed difference must be 2-D")
        if arr.size and (arr.min() < -1.0 or arr.max() > 1.0):
            raise ValueError("signed difference must lie in [-1, 1]")
        arr.setflags(write=False)
        return arr


class GraphPoint(BaseModel):
    """
    Satu titik di comparison graph.

    Attributes:
        label: doc id (character graph) atau char id (document graph)
        d_a, d_b: Distance ke prototype axis A / axis B
        marker: reference-dot (dipakai training reference) atau holdout-cross
        side: A-side jika d_a < d_b, else B-side
        klass: Declared subtype dokumen (jika ada)
        frequency: Jumlah occurrences (document graphs)
        shade: 0 (paling sering) .. 1 (paling jarang); makin besar makin gelap
        flag: Filter flag prototype
    """

    model_config = ConfigDict(frozen=True)

    label: str
    d_a: float = Field(..., ge=0.0)
    d_b: float = Field(..., ge=0.0)
    marker: Literal["reference-dot", "holdout-cross"] = "holdout-cross"
    side: Literal["A-side", "B-side"]
    klass: Optional[str] = None
    frequency: Optional[int] = Field(None, ge=0)
    shade: float = Field(0.0, ge=0.0, le=1.0)
    flag: FilterFlag = FilterFlag.OK


class ComparisonGraph(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["character", "document"]
    subject: str
    points: Tuple[GraphPoint, ...]
    x_label: str = "distance to A"
    y_label: str = "distance to B"
    notes: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


class VariabilityReport(BaseModel):
    """
    Variability sigma per character dalam satu subtype.

    Example:
        >>> report.sigma["a"]
        12.5
    """

    model_config = ConfigDict(frozen=True)

    subtype: str
    sigma: Dict[str, float]
    documents: Tuple[str, ...]
    aggregate: Literal["sum", "mean"] = "sum"

    @field_validator("sigma")
    @classmethod
    def check_sigma(cls, v: Dict[str, float]) -> Dict[str, float]:
        if any(s < 0 for s in v.values()):
            raise ValueError("sigma must be >= 0")
        return v

    def ranked(self) -> List[Tuple[str, float]]:
        return sorted(self.sigma.items(), key=lambda item: (-item[1], item[0]))
