"""
============================================================================
SYNTH SCHEMAS
============================================================================
Parameter synthetic corpus generator dan ground truth yang dihasilkan.

Dua subtype, "A" (glyph dasar) dan "B" (glyph dengan delta). Dokumen
dengan index yang sama di A dan B memakai layout yang sama persis
(transcription, posisi, scale), jadi perbedaan hanya di bentuk glyph.
============================================================================
"""

from typing import Dict, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.corpus import CorpusDocument, CorpusManifest, LoadedCorpus
from app.schemas.image import RGB, GrayImage, check_rgb
from app.schemas.model import Placement

DeltaKind = Literal["angular", "spur", "open_bow"]

BUILTIN_GLYPHS: Tuple[str, ...] = ("a", "b", "c", "d", "e", "h", "i", "n", "o", "p")

DEFAULT_DELTAS: Dict[str, DeltaKind] = {
    "a": "open_bow",
    "b": "spur",
    "d": "spur",
    "e": "angular",
    "o": "angular",
    "p": "angular",
}

SUBTYPES: Tuple[str, str] = ("A", "B")


class SynthSpec(BaseModel):
    """
    Synthetic corpus specification.

    Attributes:
        alphabet: Subset dari built-in glyphs
        deltas: char -> delta kind, diterapkan ke subtype B
        proto_side, line_height: K dan H
        glyphs_per_line, lines_per_document, documents_per_subtype
        reference_docs_per_subtype: Dokumen pertama per subtype yang
            masuk training reference
        gap: Jarak horizontal antar glyph boxes (pixels)
        position_jitter: Std posisi x (pixels)
        scale_jitter: Std scale (scale = 1 + N(0, std), clip [0.8, 1.25])
        intensity_noise: Std additive noise per pixel
        shape_jitter_a, shape_jitter_b: Magnitude affine distortion per
            dokumen untuk subtype A / B
        ink, paper: Warna ink dan background
        seed: Seed utama

    Example:
        >>> SynthSpec(alphabet=("a", "o"), deltas={"a": "open_bow"}, seed=7)
    """

    model_config = ConfigDict(frozen=True)

    alphabet: Tuple[str, ...] = Field(BUILTIN_GLYPHS, min_length=1)
    deltas: Dict[str, DeltaKind] = Field(default_factory=lambda: dict(DEFAULT_DELTAS))
    proto_side: int = Field(32, ge=8)
    line_height: int = Field(32, ge=8)
    glyphs_per_line: int = Field(6, ge=1)
    lines_per_document: int = Field(4, ge=1)
    documents_per_subtype: int = Field(4, ge=1)
    reference_docs_per_subtype: int = Field(2, ge=0)
    gap: int = Field(2, ge=0, description="Horizontal gap between glyph boxes")
    position_jitter: float = Field(0.0, ge=0.0)
    scale_jitter: float = Field(0.0, ge=0.0)
    intensity_noise: float = Field(0.0, ge=0.0)
    shape_jitter_a: float = Field(0.0, ge=0.0)
    shape_jitter_b: float = Field(0.0, ge=0.0)
    ink: RGB = (0.15, 0.1, 0.08)
    paper: RGB = (0.93, 0.9, 0.82)
    seed: int = 0

    @field_validator("ink", "paper", mode="before")
    @classmethod
    def check_colors(cls, v):
        return check_rgb(v)

    @field_validator("alphabet")
    @classmethod
    def check_alphabet(cls, v: Tuple[str, ...]) -> Tuple[str, ...]:
        unknown = [c for c in v if c not in BUILTIN_GLYPHS]
        if unknown:
            raise ValueError(f"no built-in glyph for {unknown}")
        if len(set(v)) != len(v):
            raise ValueError("alphabet has duplicate characters")
        return v

    @model_validator(mode="after")
    def check_deltas(self) -> "SynthSpec":
        if not self.deltas:
            raise ValueError("at least one character must carry a subtype delta")
        stray = sorted(set(self.deltas) - set(self.alphabet))
        if stray:
            raise ValueError(f"deltas name characters outside the alphabet: {stray}")
        if self.reference_docs_per_subtype > self.documents_per_subtype:
            raise ValueError("reference_docs_per_subtype exceeds documents_per_subtype")
        return self


class GroundTruthBundle(BaseModel):
    """
    Ground truth untuk oracle checks.

    Attributes:
        subtype_prototypes: subtype -> char -> prototype (tanpa shape jitter)
        document_prototypes: doc_id -> char -> prototype yang dipakai render
        placements: doc_id -> per line placements
        backgrounds: doc_id -> per line background color
    """

    model_config = ConfigDict(frozen=True)

    subtype_prototypes: Dict[str, Dict[str, GrayImage]]
    document_prototypes: Dict[str, Dict[str, GrayImage]]
    placements: Dict[str, Tuple[Tuple[Placement, ...], ...]]
    backgrounds: Dict[str, Tuple[RGB, ...]]


class SyntheticCorpus(BaseModel):
    """Hasil generate_corpus: manifest + lines in-memory + ground truth."""

    model_config = ConfigDict(frozen=True)

    spec: SynthSpec
    manifest: CorpusManifest
    documents: Tuple[CorpusDocument, ...]
    ground_truth: GroundTruthBundle

    def as_loaded(self) -> LoadedCorpus:
        return LoadedCorpus(corpus_id=self.manifest.corpus_id, documents=self.documents)
