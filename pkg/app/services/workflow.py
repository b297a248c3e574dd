"""
============================================================================
WORKFLOW SERVICE
============================================================================
Langkah-langkah pipeline yang dipakai bersama oleh subcommands CLI:

    train -> finetune (dokumen + subtype) -> filter -> compare -> graph
          -> variability

Setiap langkah pure (tidak menulis file); commands di app/api yang
menulis artifacts.

Tiga level granularity model:
    - reference: semua dokumen reference (script type)
    - subtype: finetuned pada dokumen reference satu subtype (axis graphs)
    - document: finetuned per dokumen
============================================================================
"""

from typing import Any, Dict, List, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from app.core.errors import DataError, GeometryMismatchError, UnknownLabelsError, UsageError
from app.core.logging import get_logger
from app.schemas.analysis import AnalysisOptions, ComparisonGraph, DifferenceMap, VariabilityReport
from app.schemas.corpus import LoadedCorpus
from app.schemas.filter import FilterFlag, FilterParams, FilterReport
from app.schemas.model import LineAlignment, LineSample, ModelState, Prototype, TrainConfig
from app.services import analysis, prototype_filter
from app.services.typesetter import align_corpus, finetune_prototypes, prepare_corpus, train_reference

logger = get_logger(__name__)

SUBTYPE_PREFIX = "subtype-"


class Fleet(BaseModel):
    """Finetuned models: per dokumen dan per subtype."""

    model_config = ConfigDict(frozen=True)

    reference: ModelState
    documents: Dict[str, ModelState]
    subtypes: Dict[str, ModelState]

    def all_models(self) -> Dict[str, ModelState]:
        return {**{SUBTYPE_PREFIX + s: m for s, m in self.subtypes.items()}, **self.documents}


# ============================================================================
# TRAIN & FINETUNE
# ============================================================================

def reference_lines(corpus: LoadedCorpus) -> Tuple[LineSample, ...]:
    """Lines dari dokumen reference_member; semua lines jika tidak ada yang ditandai."""
    lines = corpus.reference_lines()
    if not lines:
        logger.info("no document is marked reference_member; training on the whole corpus")
        lines = corpus.lines()
    return lines


def train_step(corpus: LoadedCorpus, config: TrainConfig) -> ModelState:
    lines = reference_lines(corpus)
    if not lines:
        raise DataError(f"corpus {corpus.corpus_id!r} has no lines")
    return train_reference(lines, config, label="reference")


def finetune_fleet(reference: ModelState, corpus: LoadedCorpus, config: TrainConfig) -> Fleet:
    """
    Finetune satu model per dokumen dan satu per subtype.

    Placements untuk semua lines dihitung sekali dengan reference, lalu
    setiap model memakai placements frozen dari lines miliknya.

    Raises:
        UsageError: config.freeze_placements False
        UnknownLabelsError: Corpus memakai labels di luar alphabet reference
    """
    if not config.freeze_placements:
        raise UsageError("finetuning requires freeze_placements=true")
    known = set(reference.alphabet)
    unknown = {c for line in corpus.lines() for c in line.transcription if c not in known}
    if unknown:
        raise UnknownLabelsError(unknown)

    frozen: Dict[str, Tuple[LineAlignment, ...]] = {}
    for doc in corpus.documents:
        frozen[doc.doc_id] = align_corpus(prepare_corpus(doc.lines, reference.line_height), reference, config)

    documents = {}
    for doc in corpus.documents:
        documents[doc.doc_id] = finetune_prototypes(
            reference, doc.lines, config, placements=frozen[doc.doc_id], label=doc.doc_id
        )

    subtypes = {}
    for subtype in sorted({d.subtype for d in corpus.documents if d.subtype}):
        members = [d for d in corpus.documents if d.subtype == subtype and d.reference_member]
        if not members:
            members = [d for d in corpus.documents if d.subtype == subtype]
        lines = [line for d in members for line in d.lines]
        placements = [a for d in members for a in frozen[d.doc_id]]
        logger.info("subtype %s model from %s", subtype, ", ".join(d.doc_id for d in members))
        subtypes[subtype] = finetune_prototypes(
            reference, lines, config, placements=placements, label=SUBTYPE_PREFIX + subtype
        )
    return Fleet(reference=reference, documents=documents, subtypes=subtypes)


# ============================================================================
# FILTER & COMPARE
# ============================================================================

def filter_fleet(
    reference: ModelState, models: Mapping[str, ModelState], params: FilterParams
) -> Dict[str, List[FilterReport]]:
    return {name: prototype_filter.filter_model(reference, model, params) for name, model in sorted(models.items())}


def filtered_models(models: Mapping[str, ModelState], reports: Mapping[str, List[FilterReport]]) -> Dict[str, ModelState]:
    """
    Models dengan prototypes diganti F = M * P. Character di luar alphabet
    reference tidak punya mask dan tetap raw.
    """
    out = {}
    for name, rows in sorted(reports.items()):
        out[name] = models[name].with_prototypes(
            {r.char_id: Prototype(char_id=r.char_id, image=r.filtered) for r in rows}
        )
    return out


def flag_table(reports: Mapping[str, List[FilterReport]], models: Mapping[str, ModelState]) -> Dict[str, Dict[str, FilterFlag]]:
    """model label -> char -> flag (untuk outline di sheets)."""
    return {models[name].label: {r.char_id: r.flag for r in rows} for name, rows in reports.items()}


def compare_pair(
    model_a: ModelState,
    model_b: ModelState,
    reference: Optional[ModelState],
    params: FilterParams,
    options: AnalysisOptions,
) -> Dict[str, Tuple[DifferenceMap, float]]:
    """
    Difference map dan distance per character yang ada di kedua model.
    Dengan reference (dan source=filtered) keduanya difilter dulu.
    """
    if model_a.proto_side != model_b.proto_side:
        raise GeometryMismatchError(
            f"geometry mismatch: K={model_a.proto_side} vs K={model_b.proto_side}"
        )
    if reference is not None and options.source == "filtered":
        images_a = prototype_filter.filtered_prototypes(reference, model_a, params)
        images_b = prototype_filter.filtered_prototypes(reference, model_b, params)
    else:
        images_a = {p.char_id: p.image for p in model_a.prototypes}
        images_b = {p.char_id: p.image for p in model_b.prototypes}
    out = {}
    for char in model_a.alphabet:
        if char in images_a and char in images_b:
            out[char] = (
                analysis.difference_map(images_a[char], images_b[char]),
                analysis.prototype_distance(images_a[char], images_b[char], options.norm),
            )
    return out


# ============================================================================
# GRAPHS & VARIABILITY
# ============================================================================

def build_graphs(
    fleet: Fleet,
    corpus: LoadedCorpus,
    ref_a: ModelState,
    ref_b: ModelState,
    params: FilterParams,
    options: AnalysisOptions,
) -> List[ComparisonGraph]:
    """Character graph per character reference, document graph per dokumen."""
    frequencies = corpus.frequencies()
    membership = corpus.membership()
    subtypes = corpus.subtypes()
    graphs = []
    for char in fleet.reference.alphabet:
        graphs.append(
            analysis.character_graph(
                char,
                fleet.documents,
                ref_a,
                ref_b,
                membership,
                reference=fleet.reference,
                subtypes=subtypes,
                frequencies=frequencies,
                params=params,
                options=options,
            )
        )
    for doc_id, model in sorted(fleet.documents.items()):
        graphs.append(
            analysis.document_graph(
                model,
                ref_a,
                ref_b,
                frequencies.get(doc_id, {}),
                reference=fleet.reference,
                params=params,
                options=options,
            )
        )
    return graphs


def variability_by_subtype(
    fleet: Fleet, corpus: LoadedCorpus, params: FilterParams, options: AnalysisOptions
) -> Dict[str, VariabilityReport]:
    reports = {}
    for subtype in sorted({d.subtype for d in corpus.documents if d.subtype}):
        models = {d.doc_id: fleet.documents[d.doc_id] for d in corpus.documents if d.subtype == subtype}
        if len(models) < 2:
            logger.warning("subtype %s has fewer than 2 documents; no variability", subtype)
            continue
        reports[subtype] = analysis.variability_report(subtype, models, fleet.reference, params, options)
    return reports


# ============================================================================
# REPORTS
# ============================================================================

def model_summary(model: ModelState) -> Dict[str, Any]:
    return {
        "model_id": model.model_id,
        "label": model.label,
        "provenance": model.provenance.model_dump(mode="json"),
        "history": list(model.history),
        "proto_side": model.proto_side,
        "line_height": model.line_height,
    }


def filter_summary(reports: Mapping[str, List[FilterReport]]) -> Dict[str, Any]:
    return {name: {r.char_id: r.summary() for r in rows} for name, rows in reports.items()}
