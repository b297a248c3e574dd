"""
============================================================================
CORPUS CRUD OPERATIONS
============================================================================
Ingestion corpus dari manifest JSON + PNG line images, normalisasi
transcription, dan penulisan synthetic corpus ke disk.

Custom operations:
    - load_manifest: parse + validate manifest
    - normalize_transcription: NFC + charset policy
    - read_line_image: decode PNG ke ColorImage
    - load_corpus: manifest -> LoadedCorpus (height dinormalisasi)
    - write_corpus: SyntheticCorpus -> manifest + PNG + ground truth
============================================================================
"""

import json
import unicodedata
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from PIL import Image, UnidentifiedImageError
from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import ImageLoadError, ManifestError, TranscriptionError, UsageError
from app.core.logging import get_logger
from app.crud.base import FileStore, PathLike
from app.crud.crud_model import save_model
from app.schemas.corpus import CharsetPolicy, CorpusDocument, CorpusManifest, LoadedCorpus
from app.schemas.image import ColorImage
from app.schemas.model import LineSample, ModelState, Prototype
from app.schemas.synth import SyntheticCorpus
from app.services.geometry import normalize_line
from app.services.typesetter import estimate_background

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"


# ============================================================================
# MANIFEST STORE
# ============================================================================

class CRUDManifest(FileStore[CorpusManifest]):
    suffix = ".json"
    error_cls = ManifestError

    def encode(self, manifest: CorpusManifest) -> bytes:
        return (json.dumps(manifest.model_dump(mode="json"), sort_keys=True, indent=2) + "\n").encode("utf-8")

    def decode(self, payload: bytes, path: Path) -> CorpusManifest:
        try:
            data = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ManifestError(f"{path}: invalid JSON ({exc})")
        try:
            return CorpusManifest.model_validate(data)
        except ValidationError as exc:
            problems = "; ".join(f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors())
            raise ManifestError(f"{path}: {problems}")


manifest_store = CRUDManifest()


def load_manifest(path: PathLike) -> CorpusManifest:
    return manifest_store.get(path)


# ============================================================================
# TRANSCRIPTIONS
# ============================================================================

def normalize_transcription(text: str, policy: Optional[CharsetPolicy] = None) -> Tuple[str, ...]:
    """
    Normalisasi transcription ke sequence of labels.

    Steps:
    1. Unicode canonical composition (NFC); case dipertahankan
    2. Whitespace dibuang (drop_whitespace)
    3. lowercase_alpha_only: non-lowercase-alphabetic dibuang
    4. Karakter di `exclude` atau di luar `charset` diproses sesuai
       on_unknown: drop / error / passthrough

    Args:
        text (str): Raw transcription
        policy (CharsetPolicy): Default CharsetPolicy()

    Returns:
        Tuple[str, ...]: Labels

    Raises:
        TranscriptionError: on_unknown="error" dan ada karakter unknown

    Example:
        >>> normalize_transcription("domine")
        ('d', 'o', 'm', 'i', 'n', 'e')
    """
    policy = policy or CharsetPolicy()
    allowed = set(policy.charset) if policy.charset is not None else None
    excluded = set(policy.exclude)
    labels: List[str] = []
    for char in unicodedata.normalize("NFC", text):
        if policy.drop_whitespace and char.isspace():
            continue
        if policy.lowercase_alpha_only and not (char.isalpha() and char.islower()):
            continue
        unknown = char in excluded or (allowed is not None and char not in allowed)
        if unknown:
            if policy.on_unknown == "error":
                raise TranscriptionError(f"character {char!r} (U+{ord(char):04X}) is outside the charset")
            if policy.on_unknown == "drop":
                continue
        labels.append(char)
    return tuple(labels)


# ============================================================================
# IMAGES
# ============================================================================

def read_line_image(path: PathLike, *, doc_id: str = "", line_index: int = -1) -> ColorImage:
    """
    Decode PNG (8/16-bit gray, RGB, RGBA) ke ColorImage di [0,1].

    Raises:
        ImageLoadError: File hilang atau tidak bisa di-decode
    """
    path = Path(path)
    if not path.is_file():
        raise ImageLoadError(str(path), doc_id=doc_id, line_index=line_index)
    try:
        with Image.open(path) as img:
            if img.mode in ("I;16", "I;16B", "I"):
                data = np.asarray(img, dtype=np.float64) / 65535.0
            elif img.mode == "L":
                data = np.asarray(img, dtype=np.float64) / 255.0
            else:
                data = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageLoadError(str(path), doc_id=doc_id, line_index=line_index, reason=str(exc))
    return ColorImage.from_array(data, clip=True)


def ink_bright(image: ColorImage) -> ColorImage:
    """Invert halaman terang (ink gelap) supaya ink selalu terang."""
    bg = estimate_background(image)
    luminance = 0.299 * bg[0] + 0.587 * bg[1] + 0.114 * bg[2]
    if luminance > 0.5:
        return ColorImage(data=1.0 - image.data)
    return image


def _load_line(path: Path, doc_id: str, index: int, height: int) -> ColorImage:
    image = read_line_image(path, doc_id=doc_id, line_index=index)
    if image.area == 0:
        raise ImageLoadError(str(path), doc_id=doc_id, line_index=index, reason="zero-area image")
    return normalize_line(ink_bright(image), height)


def load_corpus(
    manifest_path: PathLike,
    line_height: int,
    policy: Optional[CharsetPolicy] = None,
    *,
    n_jobs: int = 1,
) -> LoadedCorpus:
    """
    Load corpus dari manifest.

    Args:
        manifest_path: Path manifest JSON
        line_height (int): H model; semua lines dinormalisasi ke height ini
        policy (CharsetPolicy): Normalisasi transcription
        n_jobs (int): joblib workers untuk decode images

    Returns:
        LoadedCorpus: Dokumen dan lines dalam urutan manifest

    Raises:
        ManifestError: Manifest tidak valid
        ImageLoadError: Image hilang / rusak (dengan doc dan line index)
        TranscriptionError: Transcription kosong setelah normalisasi

    Example:
        >>> corpus = load_corpus("data/manifest.json", 64)
        >>> len(corpus.lines())
        6
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    root = manifest_path.parent

    jobs = []
    texts = []
    for doc in manifest.documents:
        for index, entry in enumerate(doc.lines):
            labels = normalize_transcription(entry.transcription, policy)
            if not labels:
                raise TranscriptionError(f"empty transcription (doc {doc.doc_id!r}, line {index})")
            texts.append(labels)
            jobs.append((root / entry.image, doc.doc_id, index))

    if n_jobs == 1 or len(jobs) < 2:
        images = [_load_line(path, doc_id, index, line_height) for path, doc_id, index in jobs]
    else:
        images = Parallel(n_jobs=n_jobs)(delayed(_load_line)(p, d, i, line_height) for p, d, i in jobs)

    documents = []
    cursor = 0
    for doc in manifest.documents:
        samples = []
        for _ in doc.lines:
            samples.append(LineSample(image=images[cursor], transcription=texts[cursor], doc_id=doc.doc_id))
            cursor += 1
        documents.append(
            CorpusDocument(
                doc_id=doc.doc_id,
                subtype=doc.subtype,
                reference_member=doc.reference_member,
                lines=tuple(samples),
            )
        )
    logger.info("loaded corpus %r: %d documents, %d lines", manifest.corpus_id, len(documents), cursor)
    return LoadedCorpus(corpus_id=manifest.corpus_id, documents=tuple(documents))


# ============================================================================
# WRITING
# ============================================================================

def write_png(data: np.ndarray, path: PathLike) -> Path:
    """Tulis array [0,1] (H x W atau H x W x 3) sebagai PNG 8-bit."""
    path = Path(path)
    pixels = np.round(np.clip(data, 0.0, 1.0) * 255.0).astype(np.uint8)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(pixels).save(path, format="PNG")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}")
    return path


def _truth_model(prototypes, side: int, height: int, label: str, seed: int) -> ModelState:
    alphabet = tuple(sorted(prototypes))
    return ModelState(
        alphabet=alphabet,
        prototypes=tuple(Prototype(char_id=c, image=prototypes[c]) for c in alphabet),
        proto_side=side,
        line_height=height,
        training_seed=seed,
        label=label,
    )


def write_corpus(corpus: SyntheticCorpus, out_dir: PathLike) -> Path:
    """
    Tulis synthetic corpus: manifest.json, PNG per line, dan ground truth
    (prototypes sebagai model files, placements sebagai JSON).

    Returns:
        Path: Path manifest
    """
    out_dir = Path(out_dir)
    spec = corpus.spec
    for entry, doc in zip(corpus.manifest.documents, corpus.documents):
        for line_entry, sample in zip(entry.lines, doc.lines):
            write_png(sample.image.data, out_dir / line_entry.image)

    truth = corpus.ground_truth
    truth_dir = out_dir / "ground_truth"
    for subtype, protos in sorted(truth.subtype_prototypes.items()):
        save_model(_truth_model(protos, spec.proto_side, spec.line_height, f"truth-{subtype}", spec.seed), truth_dir / f"subtype_{subtype}{settings.MODEL_SUFFIX}")
    for doc_id, protos in sorted(truth.document_prototypes.items()):
        save_model(_truth_model(protos, spec.proto_side, spec.line_height, f"truth-{doc_id}", spec.seed), truth_dir / f"doc_{doc_id}{settings.MODEL_SUFFIX}")
    placements = {
        doc_id: [[p.model_dump(mode="json") for p in line] for line in lines]
        for doc_id, lines in truth.placements.items()
    }
    payload = {
        "spec": spec.model_dump(mode="json"),
        "placements": placements,
        "backgrounds": {doc: [list(bg) for bg in bgs] for doc, bgs in truth.backgrounds.items()},
    }
    (truth_dir / "placements.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")

    manifest_path = manifest_store.create(corpus.manifest, path=out_dir / MANIFEST_NAME)
    logger.info("wrote synthetic corpus to %s", manifest_path)
    return manifest_path
