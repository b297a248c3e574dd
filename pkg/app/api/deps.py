"""
============================================================================
COMMAND DEPENDENCIES
============================================================================
Module ini berisi dependency functions untuk subcommands CLI:
- RunContext (args + RunConfig + output directory)
- Loading corpus dan models dari paths di RunConfig
- Menyimpan fleet models dengan nama file yang konsisten

Usage di command handler:
    def finetune(ctx: RunContext) -> None:
        corpus = deps.get_corpus(ctx.config)
        reference = deps.get_reference(ctx.config)
============================================================================
"""

import argparse
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from app.core.config import RunConfig, settings
from app.core.errors import DataError, UsageError
from app.core.logging import get_logger
from app.crud.crud_corpus import load_corpus
from app.crud.crud_model import load_model, model_store, save_model
from app.crud.crud_outputs import file_stem
from app.schemas.corpus import LoadedCorpus
from app.schemas.model import ModelState
from app.services.workflow import SUBTYPE_PREFIX, Fleet

logger = get_logger(__name__)

MODELS_DIR = "models"
REFERENCE_NAME = "reference"


class RunContext:
    """
    Semua yang dibutuhkan satu command.

    Attributes:
        args (argparse.Namespace): Parsed flags
        config (RunConfig): Config hasil merge semua layers
        out_dir (Path): Output directory (sudah dibuat)
    """

    def __init__(self, args: argparse.Namespace, config: RunConfig, out_dir: Path):
        self.args = args
        self.config = config
        self.out_dir = out_dir

    @property
    def models_dir(self) -> Path:
        return self.out_dir / MODELS_DIR


# ============================================================================
# OUTPUT DIRECTORY
# ============================================================================

def get_out_dir(config: RunConfig) -> Path:
    """
    Buat output directory.

    Raises:
        UsageError: Directory tidak bisa dibuat
    """
    out_dir = Path(config.paths.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out_dir}: {exc.strerror or exc}")
    return out_dir


# ============================================================================
# INPUTS
# ============================================================================

def get_corpus(config: RunConfig, line_height: Optional[int] = None) -> LoadedCorpus:
    """
    Load corpus dari paths.corpus (--corpus). Lines dinormalisasi ke
    `line_height` (default train.line_height).

    Raises:
        UsageError: --corpus tidak diberikan
    """
    if not config.paths.corpus:
        raise UsageError("a corpus manifest is required (--corpus)")
    height = line_height or config.train.line_height
    return load_corpus(config.paths.corpus, height, config.charset, n_jobs=config.train.n_jobs)


def get_reference(config: RunConfig) -> ModelState:
    if not config.paths.reference:
        raise UsageError("a reference model is required (--reference)")
    return load_model(config.paths.reference)


def get_models(paths: Optional[Sequence[str]] = None, directory: Optional[str] = None) -> Dict[str, ModelState]:
    """
    Load models dari list paths dan/atau semua model files di directory.

    Returns:
        Dict[str, ModelState]: label (atau nama file) -> model

    Raises:
        UsageError: Tidak ada model sama sekali
    """
    files: List[Path] = [Path(p) for p in paths or ()]
    if directory:
        files.extend(model_store.list_paths(directory))
    models: Dict[str, ModelState] = {}
    for path in files:
        model = load_model(path)
        name = model.label or path.stem
        if name in models and models[name].model_id != model.model_id:
            raise DataError(f"two different models are labelled {name!r}")
        models[name] = model
    if not models:
        raise UsageError("no models given (--models or --models-dir)")
    return models


def get_fleet(reference: ModelState, corpus: LoadedCorpus, models: Dict[str, ModelState]) -> Fleet:
    """
    Susun Fleet dari models yang di-load: label = doc_id untuk document
    models, "subtype-<S>" untuk subtype models.

    Raises:
        DataError: Ada dokumen corpus tanpa model
    """
    documents = {doc.doc_id: models[doc.doc_id] for doc in corpus.documents if doc.doc_id in models}
    missing = [doc.doc_id for doc in corpus.documents if doc.doc_id not in models]
    if missing:
        raise DataError("no finetuned model for documents: " + ", ".join(missing))
    subtypes = {
        name[len(SUBTYPE_PREFIX):]: model for name, model in models.items() if name.startswith(SUBTYPE_PREFIX)
    }
    return Fleet(reference=reference, documents=documents, subtypes=subtypes)


def get_axes(fleet: Fleet, models: Dict[str, ModelState], axis_a: Optional[str], axis_b: Optional[str]):
    """
    Models untuk axis A dan B: label eksplisit, atau dua subtype pertama.

    Raises:
        UsageError: Axis tidak bisa ditentukan
    """
    if axis_a and axis_b:
        try:
            return models[axis_a], models[axis_b]
        except KeyError as exc:
            raise UsageError(f"no model labelled {exc.args[0]!r}")
    if len(fleet.subtypes) < 2:
        raise UsageError("need two subtype models or explicit --axis-a/--axis-b")
    first, second = sorted(fleet.subtypes)[:2]
    return fleet.subtypes[first], fleet.subtypes[second]


# ============================================================================
# FLEET STORAGE
# ============================================================================

def model_path(models_dir: Path, name: str) -> Path:
    return models_dir / f"{file_stem(name)}{settings.MODEL_SUFFIX}"


def save_fleet(fleet: Fleet, models_dir: Path) -> List[Path]:
    """
    Simpan reference + semua finetuned models dalam satu directory, jadi
    parent setiap model bisa ditemukan saat load.
    """
    written = [save_model(fleet.reference, model_path(models_dir, REFERENCE_NAME))]
    for subtype, model in sorted(fleet.subtypes.items()):
        written.append(save_model(model, model_path(models_dir, f"subtype_{subtype}")))
    for doc_id, model in sorted(fleet.documents.items()):
        written.append(save_model(model, model_path(models_dir, f"doc_{doc_id}")))
    logger.info("saved %d models to %s", len(written), models_dir)
    return written
