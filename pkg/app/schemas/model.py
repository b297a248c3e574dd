"""
============================================================================
MODEL SCHEMAS (Pydantic Models)
============================================================================
Types untuk generative reconstruction model: prototypes, placements,
text lines, dan ModelState (alphabet + prototypes + geometry + provenance).

Schemas:
    - Prototype: grayscale template K x K untuk satu character (ink = 1)
    - Placement: satu glyph instance (char, x centre, scale, fg color)
    - LineSample: line image + transcription + doc id
    - Provenance: reference atau finetuned(parent_id)
    - ModelState: semua prototypes satu model
    - LineAlignment: output align_line
    - RenderedLine: line image dari composite_line + placements + background
    - TrainConfig: parameter training dan finetuning
    - Violation: satu pelanggaran invariant dari validate_model
============================================================================
"""

import hashlib
import json
from typing import Any, Dict, Literal, Mapping, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.image import RGB, ColorImage, GrayImage, check_rgb

DEFAULT_SCALES: Tuple[float, ...] = (0.8, 0.9, 1.0, 1.1, 1.25)


# ============================================================================
# PROTOTYPES & PLACEMENTS
# ============================================================================

class Prototype(BaseModel):
    """
    Template satu character. Intensity 1 = ink, 0 = tidak ada ink.

    Attributes:
        char_id (str): Label character
        image (GrayImage): Template K x K
    """

    model_config = ConfigDict(frozen=True)

    char_id: str = Field(..., min_length=1, description="Character label")
    image: GrayImage = Field(..., description="Grayscale template, ink = 1")

    @property
    def side(self) -> int:
        return self.image.width

    @property
    def pixels(self) -> np.ndarray:
        return self.image.data


class Placement(BaseModel):
    """
    Satu glyph di line. `x` adalah horizontal centre footprint (pixels,
    real-valued); glyph selalu vertical-centred di line.
    """

    model_config = ConfigDict(frozen=True)

    char_id: str = Field(..., min_length=1)
    x: float = Field(..., ge=0.0, description="Horizontal centre in pixels")
    scale: float = Field(1.0, gt=0.0, description="Isotropic scale")
    fg_color: RGB = Field((0.0, 0.0, 0.0), description="Ink color")

    @field_validator("fg_color", mode="before")
    @classmethod
    def check_fg(cls, v: Any) -> RGB:
        return check_rgb(v)


class LineSample(BaseModel):
    """Satu text line: image yang sudah di-normalize + transcription."""

    model_config = ConfigDict(frozen=True)

    image: ColorImage
    transcription: Tuple[str, ...] = Field(default_factory=tuple)
    doc_id: str = ""

    @field_validator("transcription", mode="before")
    @classmethod
    def split_text(cls, v: Any) -> Tuple[str, ...]:
        if isinstance(v, str):
            return tuple(v)
        return tuple(v)


# ============================================================================
# MODEL STATE
# ============================================================================

class Provenance(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["reference", "finetuned"] = "reference"
    parent_id: Optional[str] = None

    @model_validator(mode="after")
    def check_parent(self) -> "Provenance":
        if self.kind == "finetuned" and not self.parent_id:
            raise ValueError("a finetuned provenance needs a parent_id")
        if self.kind == "reference" and self.parent_id is not None:
            raise ValueError("a reference provenance has no parent_id")
        return self

    @classmethod
    def finetuned(cls, parent_id: str) -> "Provenance":
        return cls(kind="finetuned", parent_id=parent_id)


class ModelState(BaseModel):
    """
    Semua prototypes dari satu model plus geometry dan provenance.

    Constructor tidak memaksa invariants antar-field (satu prototype per
    label, dsb.) supaya `validate_model` bisa melaporkan semua pelanggaran.

    Attributes:
        alphabet (tuple): Ordered character labels
        prototypes (tuple): Satu Prototype per label, urutan sama dengan alphabet
        proto_side (int): K
        line_height (int): H
        bg_color (RGB): Background color model
        provenance (Provenance): reference / finetuned(parent)
        training_seed (int): Seed training
        label (str): Nama bebas (doc id, subtype, "reference")
        history (tuple): Mean reconstruction error per accepted round
    """

    model_config = ConfigDict(frozen=True)

    alphabet: Tuple[str, ...]
    prototypes: Tuple[Prototype, ...]
    proto_side: int = Field(64, ge=1)
    line_height: int = Field(64, ge=1)
    bg_color: RGB = (0.0, 0.0, 0.0)
    provenance: Provenance = Field(default_factory=Provenance)
    training_seed: int = 0
    label: str = ""
    history: Tuple[float, ...] = ()

    @field_validator("bg_color", mode="before")
    @classmethod
    def check_bg(cls, v: Any) -> RGB:
        return check_rgb(v)

    def prototype(self, char_id: str) -> Prototype:
        for proto in self.prototypes:
            if proto.char_id == char_id:
                return proto
        raise KeyError(char_id)

    def prototype_map(self) -> Dict[str, Prototype]:
        return {p.char_id: p for p in self.prototypes}

    def planes(self) -> np.ndarray:
        """Stack prototypes (N, K, K) dalam urutan alphabet."""
        by_char = self.prototype_map()
        return np.stack([by_char[c].pixels for c in self.alphabet]) if self.alphabet else np.zeros((0, self.proto_side, self.proto_side))

    def header(self) -> Dict[str, Any]:
        """Canonical header (JSON-able), dipakai untuk hashing dan persistence."""
        return {
            "alphabet": list(self.alphabet),
            "proto_side": self.proto_side,
            "line_height": self.line_height,
            "bg_color": list(self.bg_color),
            "provenance": {"kind": self.provenance.kind, "parent_id": self.provenance.parent_id},
            "training_seed": self.training_seed,
            "label": self.label,
            "history": list(self.history),
        }

    @property
    def model_id(self) -> str:
        digest = hashlib.sha256()
        digest.update(json.dumps(self.header(), sort_keys=True).encode("utf-8"))
        for proto in self.prototypes:
            digest.update(proto.char_id.encode("utf-8"))
            digest.update(np.ascontiguousarray(proto.pixels, dtype="<f8").tobytes())
        return digest.hexdigest()[:16]

    def with_prototypes(self, images: Mapping[str, Union[Prototype, np.ndarray]], **updates: Any) -> "ModelState":
        """Copy dengan prototype pixels baru (geometry dan alphabet tetap)."""
        protos = []
        for char in self.alphabet:
            new = images.get(char)
            if new is None:
                protos.append(self.prototype(char))
            elif isinstance(new, Prototype):
                protos.append(new)
            else:
                protos.append(Prototype(char_id=char, image=GrayImage.from_array(new, clip=True)))
        return self.model_copy(update={"prototypes": tuple(protos), **updates})


class Violation(BaseModel):
    """Satu pelanggaran invariant: field, rule, detail."""

    model_config = ConfigDict(frozen=True)

    field: str
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.rule}({self.detail})" if self.detail else self.rule


# ============================================================================
# TYPESETTER OUTPUTS
# ============================================================================

class LineAlignment(BaseModel):
    """
    Hasil align_line untuk satu line.

    Attributes:
        placements: Satu Placement per transcription character, monotone di x
        bg_color: Background yang dipakai (estimate_background)
        error: Mean squared reconstruction error line ini
        low_confidence: True jika line degenerate (semua background) atau
            transcription tidak muat; placements lalu uniform spacing
    """

    model_config = ConfigDict(frozen=True)

    placements: Tuple[Placement, ...]
    bg_color: RGB
    error: float = 0.0
    low_confidence: bool = False


class RenderedLine(BaseModel):
    """Line hasil composite_line beserta placements dan background-nya."""

    model_config = ConfigDict(frozen=True)

    image: ColorImage
    placements: Tuple[Placement, ...]
    bg_color: RGB

    @field_validator("bg_color", mode="before")
    @classmethod
    def check_bg(cls, v: Any) -> RGB:
        return check_rgb(v)

    @model_validator(mode="after")
    def check_order(self) -> "RenderedLine":
        xs = [p.x for p in self.placements]
        if any(b < a for a, b in zip(xs, xs[1:])):
            raise ValueError("placements must be ordered left to right")
        return self


# ============================================================================
# TRAINING CONFIG
# ============================================================================

class TrainConfig(BaseModel):
    """
    Parameter untuk train_reference dan finetune_prototypes.

    Example:
        >>> TrainConfig(max_rounds=10, seed=3)
    """

    model_config = ConfigDict(frozen=True)

    max_rounds: int = Field(30, ge=1, description="Maximum alternating rounds")
    proto_step: float = Field(1.0, gt=0.0, le=1.0, description="Blend factor for prototype updates")
    convergence_tol: float = Field(1e-5, gt=0.0, description="Relative improvement to stop")
    error_floor: float = Field(1e-6, ge=0.0, description="Mean squared error treated as converged")
    seed: int = Field(0, description="Seed for prototype initialization")
    freeze_placements: bool = Field(False, description="Align once, then only update prototypes")

    proto_side: int = Field(64, ge=2, description="Prototype side K (pixels)")
    line_height: int = Field(64, ge=2, description="Line height H (pixels)")
    scales: Tuple[float, ...] = Field(DEFAULT_SCALES, min_length=1, description="Scale grid for alignment")
    min_gap: float = Field(0.5, gt=0.0, description="Min distance between glyph centres, fraction of K")
    warmup_rounds: int = Field(2, ge=0, description="Rounds aligned at scale 1 with integer x")
    recenter: bool = Field(True, description="Re-centre prototypes on their ink centroid")
    n_jobs: int = Field(1, description="joblib workers for alignment")

    @field_validator("scales")
    @classmethod
    def check_scales(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(s <= 0 for s in v):
            raise ValueError("scales must be positive")
        return tuple(sorted(set(float(s) for s in v)))
