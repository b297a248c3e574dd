"""
============================================================================
CORPUS SCHEMAS
============================================================================
Manifest corpus (JSON), charset policy, dan corpus yang sudah di-load.

Manifest format:
    {
      "corpus_id": "demo",
      "documents": [
        {"doc_id": "A1", "subtype": "A", "reference_member": true,
         "lines": [{"image": "A1/line_000.png", "transcription": "dona"}]}
      ]
    }
Image paths relatif terhadap file manifest.
============================================================================
"""

from collections import Counter
from typing import Dict, FrozenSet, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.schemas.model import LineSample


# ============================================================================
# MANIFEST
# ============================================================================

class LineEntry(BaseModel):
    image: str = Field(..., min_length=1, description="PNG path relative to the manifest")
    transcription: str = Field(..., description="Raw transcription text")


class DocumentEntry(BaseModel):
    doc_id: str = Field(..., min_length=1)
    subtype: Optional[str] = Field(None, description="Declared subtype label")
    reference_member: bool = Field(False, description="Used to train the reference model")
    lines: List[LineEntry] = Field(default_factory=list)


class CorpusManifest(BaseModel):
    """
    Satu corpus: list dokumen dengan lines.

    Validation:
        - doc_id harus unik
    """

    corpus_id: str = Field(..., min_length=1)
    documents: List[DocumentEntry] = Field(default_factory=list)

    @field_validator("documents")
    @classmethod
    def unique_doc_ids(cls, v: List[DocumentEntry]) -> List[DocumentEntry]:
        seen = Counter(d.doc_id for d in v)
        dupes = sorted(doc for doc, n in seen.items() if n > 1)
        if dupes:
            raise ValueError(f"duplicate doc_id: {', '.join(dupes)}")
        return v


# ============================================================================
# CHARSET POLICY
# ============================================================================

class CharsetPolicy(BaseModel):
    """
    Aturan normalisasi transcription.

    Attributes:
        charset: Set karakter yang diizinkan (None = semua)
        exclude: Karakter yang selalu ditolak
        on_unknown: drop / error / passthrough untuk karakter di luar charset
        lowercase_alpha_only: Hanya huruf kecil alfabetik
        drop_whitespace: Spasi tidak menjadi label

    Example:
        >>> CharsetPolicy(exclude="jkvxyz", on_unknown="drop").exclude
        ('j', 'k', 'v', 'x', 'y', 'z')
    """

    model_config = ConfigDict(frozen=True)

    charset: Optional[Tuple[str, ...]] = None
    exclude: Tuple[str, ...] = ()
    on_unknown: Literal["drop", "error", "passthrough"] = "drop"
    lowercase_alpha_only: bool = False
    drop_whitespace: bool = True

    @field_validator("charset", "exclude", mode="before")
    @classmethod
    def sorted_chars(cls, v):
        # sorted tuple: serialisasi JSON stabil
        if v is None:
            return v
        return tuple(sorted(set(v)))


# ============================================================================
# LOADED CORPUS
# ============================================================================

class CorpusDocument(BaseModel):
    model_config = ConfigDict(frozen=True)

    doc_id: str
    subtype: Optional[str] = None
    reference_member: bool = False
    lines: Tuple[LineSample, ...] = ()

    def frequencies(self) -> Dict[str, int]:
        counts: Counter = Counter()
        for line in self.lines:
            counts.update(line.transcription)
        return dict(sorted(counts.items()))


class LoadedCorpus(BaseModel):
    """Corpus hasil load_corpus; urutan dokumen dan lines = urutan manifest."""

    model_config = ConfigDict(frozen=True)

    corpus_id: str
    documents: Tuple[CorpusDocument, ...]

    def lines(self) -> Tuple[LineSample, ...]:
        return tuple(line for doc in self.documents for line in doc.lines)

    def reference_lines(self) -> Tuple[LineSample, ...]:
        return tuple(line for doc in self.documents if doc.reference_member for line in doc.lines)

    def membership(self) -> FrozenSet[str]:
        return frozenset(doc.doc_id for doc in self.documents if doc.reference_member)

    def subtypes(self) -> Dict[str, Optional[str]]:
        return {doc.doc_id: doc.subtype for doc in self.documents}

    def frequencies(self) -> Dict[str, Dict[str, int]]:
        return {doc.doc_id: doc.frequencies() for doc in self.documents}
