"""
============================================================================
ANALYSIS SERVICE
============================================================================
Perbandingan kuantitatif dan visual antar prototypes.

Functions:
    - difference_map: signed A - B + render blue/red
    - prototype_distance: L2 (default) atau L1 di pixel space
    - character_graph: satu character, semua dokumen, distance ke A dan B
    - document_graph: satu dokumen, semua characters
    - subtype_variability / variability_report: sigma per character

Distances memakai FILTERED prototypes (mask dari common reference) kecuali
AnalysisOptions.source = "raw". Semua model yang dibandingkan harus
punya geometry yang sama dengan reference.
============================================================================
"""

import math
from typing import Collection, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import GeometryMismatchError
from app.core.logging import get_logger
from app.schemas.analysis import AnalysisOptions, ComparisonGraph, DifferenceMap, GraphPoint, VariabilityReport
from app.schemas.filter import FilterFlag, FilterParams
from app.schemas.image import ColorImage, GrayImage
from app.schemas.model import ModelState
from app.services import prototype_filter

logger = get_logger(__name__)

# |signed| di bawah satu level 8-bit dirender putih
WHITE_BELOW = 1.0 / 255.0


# ============================================================================
# PAIRWISE
# ============================================================================

def difference_map(a: GrayImage, b: GrayImage) -> DifferenceMap:
    """
    Signed difference A - B.

    Render: 0 -> white, +1 -> saturated blue, -1 -> saturated red, linear
    di antaranya.

    Example:
        >>> dm = difference_map(GrayImage.full(1, 1, 1.0), GrayImage.zeros(1, 1))
        >>> dm.render.data[0, 0].tolist()
        [0.0, 0.0, 1.0]
    """
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    signed = a.data - b.data
    magnitude = np.abs(signed)
    render = np.ones(signed.shape + (3,))
    positive = signed >= 0
    fade = 1.0 - magnitude
    render[:, :, 0] = np.where(positive, fade, 1.0)
    render[:, :, 1] = fade
    render[:, :, 2] = np.where(positive, 1.0, fade)
    render[magnitude < WHITE_BELOW] = 1.0
    return DifferenceMap(signed=signed, render=ColorImage.from_array(render, clip=True))


def prototype_distance(a: GrayImage, b: GrayImage, norm: str = "l2") -> float:
    """
    Distance di pixel space. Simetris, nol jika dan hanya jika identik.

    Example:
        >>> prototype_distance(GrayImage.zeros(2, 2), GrayImage.full(2, 2, 0.5))
        1.0
    """
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = (a.data - b.data).ravel()
    if norm == "l1":
        return float(np.sum(np.abs(diff)))
    if norm == "l2":
        return float(np.sqrt(np.dot(diff, diff)))
    raise ValueError(f"unknown norm {norm!r}")


# ============================================================================
# GRAPHS
# ============================================================================

def _check_geometry(reference: ModelState, models: Mapping[str, ModelState]) -> None:
    for name, model in models.items():
        if model.proto_side != reference.proto_side or model.line_height != reference.line_height:
            raise GeometryMismatchError(
                f"geometry mismatch: {name} has K={model.proto_side} H={model.line_height}, "
                f"reference has K={reference.proto_side} H={reference.line_height}"
            )
        if model.provenance.kind == "finetuned" and model.provenance.parent_id != reference.model_id:
            logger.warning("model %s was not finetuned from reference %s", name, reference.model_id)


def _comparable(
    char: str,
    model: ModelState,
    reference: ModelState,
    params: FilterParams,
    options: AnalysisOptions,
) -> Tuple[GrayImage, FilterFlag]:
    proto = model.prototype(char)
    mask = prototype_filter.reference_mask(reference.prototype(char), params)
    status = prototype_filter.flag(prototype_filter.filtering_error(mask, proto, params), params)
    if options.source == "raw":
        return proto.image, status
    return prototype_filter.filter_prototype(mask, proto), status


def _side(d_a: float, d_b: float) -> str:
    return "A-side" if d_a < d_b else "B-side"


def frequency_shade(count: int, max_count: int) -> float:
    """shade = 1 - min(1, log(1+n) / log(1+n_max)); rare -> dark."""
    if max_count <= 0:
        return 0.0
    return 1.0 - min(1.0, math.log1p(count) / math.log1p(max_count))


def character_graph(
    char: str,
    fleet: Mapping[str, ModelState],
    ref_a: ModelState,
    ref_b: ModelState,
    reference_membership: Collection[str],
    *,
    reference: ModelState,
    subtypes: Optional[Mapping[str, Optional[str]]] = None,
    frequencies: Optional[Mapping[str, Mapping[str, int]]] = None,
    params: Optional[FilterParams] = None,
    options: Optional[AnalysisOptions] = None,
) -> ComparisonGraph:
    """
    Satu titik per dokumen yang punya character `char`.

    Args:
        char (str): Character label
        fleet: doc_id -> finetuned document model
        ref_a, ref_b: Models untuk axis A dan axis B
        reference_membership: doc ids yang dipakai training reference (dot)
        reference (ModelState): Common reference (sumber mask)
        subtypes: doc_id -> declared subtype
        frequencies: doc_id -> {char: count}; dokumen dengan count 0 dilewati
        params (FilterParams): Filter parameters
        options (AnalysisOptions): Norm dan source

    Returns:
        ComparisonGraph: kind "character"

    Raises:
        GeometryMismatchError: Jika ada model dengan K/H berbeda
    """
    params = params or FilterParams()
    options = options or AnalysisOptions()
    _check_geometry(reference, {"axis A": ref_a, "axis B": ref_b, **fleet})
    axis_a, _ = _comparable(char, ref_a, reference, params, options)
    axis_b, _ = _comparable(char, ref_b, reference, params, options)
    members = set(reference_membership)
    subtypes = subtypes or {}

    points, notes = [], []
    for doc_id in sorted(fleet):
        model = fleet[doc_id]
        count = frequencies.get(doc_id, {}).get(char, 0) if frequencies is not None else None
        if char not in model.alphabet or count == 0:
            notes.append(f"{doc_id}: no occurrence of {char!r}")
            continue
        image, status = _comparable(char, model, reference, params, options)
        d_a = prototype_distance(image, axis_a, options.norm)
        d_b = prototype_distance(image, axis_b, options.norm)
        points.append(
            GraphPoint(
                label=doc_id,
                d_a=d_a,
                d_b=d_b,
                marker="reference-dot" if doc_id in members else "holdout-cross",
                side=_side(d_a, d_b),
                klass=subtypes.get(doc_id),
                frequency=count,
                flag=status,
            )
        )
    return ComparisonGraph(
        kind="character",
        subject=char,
        points=tuple(points),
        x_label=f"distance to {ref_a.label or 'A'}",
        y_label=f"distance to {ref_b.label or 'B'}",
        notes=tuple(notes),
    )


def document_graph(
    doc: ModelState,
    ref_a: ModelState,
    ref_b: ModelState,
    frequencies: Mapping[str, int],
    *,
    reference: ModelState,
    params: Optional[FilterParams] = None,
    options: Optional[AnalysisOptions] = None,
) -> ComparisonGraph:
    """
    Satu titik per character yang muncul di dokumen. Shade dari frequency
    (log scale, makin jarang makin gelap); flag filter dibawa supaya
    warn/fail bisa diberi outline orange/red.
    """
    params = params or FilterParams()
    options = options or AnalysisOptions()
    _check_geometry(reference, {"axis A": ref_a, "axis B": ref_b, doc.label or "document": doc})
    present = [c for c in doc.alphabet if frequencies.get(c, 0) > 0]
    max_count = max((frequencies[c] for c in present), default=0)

    points, notes = [], []
    for char in doc.alphabet:
        count = frequencies.get(char, 0)
        if count <= 0:
            notes.append(f"{char!r}: absent from the document corpus")
            continue
        image, status = _comparable(char, doc, reference, params, options)
        axis_a, _ = _comparable(char, ref_a, reference, params, options)
        axis_b, _ = _comparable(char, ref_b, reference, params, options)
        d_a = prototype_distance(image, axis_a, options.norm)
        d_b = prototype_distance(image, axis_b, options.norm)
        points.append(
            GraphPoint(
                label=char,
                d_a=d_a,
                d_b=d_b,
                side=_side(d_a, d_b),
                frequency=count,
                shade=frequency_shade(count, max_count),
                flag=status,
            )
        )
    return ComparisonGraph(
        kind="document",
        subject=doc.label or doc.model_id,
        points=tuple(points),
        x_label=f"distance to {ref_a.label or 'A'}",
        y_label=f"distance to {ref_b.label or 'B'}",
        notes=tuple(notes),
    )


# ============================================================================
# VARIABILITY
# ============================================================================

def subtype_variability(
    prototypes: Mapping[str, GrayImage],
    char: Optional[str] = None,
    aggregate: str = "sum",
) -> float:
    """
    Sigma: population std per pixel antar dokumen, lalu sum (atau mean)
    atas pixels.

    Args:
        prototypes: doc_id -> (filtered) prototype untuk satu character
        char (str, optional): Hanya untuk pesan error/log
        aggregate (str): "sum" atau "mean"

    Raises:
        ValueError: Kurang dari 2 dokumen, atau ukuran berbeda

    Example:
        >>> subtype_variability({"d1": GrayImage.zeros(1, 1), "d2": GrayImage.full(1, 1, 1.0)})
        0.5
    """
    if len(prototypes) < 2:
        raise ValueError(f"variability of {char or 'a character'} needs at least 2 documents, got {len(prototypes)}")
    stack = np.stack([prototypes[doc].data for doc in sorted(prototypes)])
    # selisih ke dokumen pertama: prototypes identik memberi std tepat 0
    spread = np.std(stack - stack[0], axis=0)
    if aggregate == "sum":
        return float(spread.sum())
    if aggregate == "mean":
        return float(spread.mean())
    raise ValueError(f"unknown aggregate {aggregate!r}")


def variability_report(
    subtype: str,
    models: Mapping[str, ModelState],
    reference: ModelState,
    params: Optional[FilterParams] = None,
    options: Optional[AnalysisOptions] = None,
    chars: Optional[Sequence[str]] = None,
) -> VariabilityReport:
    """Sigma untuk setiap character dari reference, atas dokumen satu subtype."""
    params = params or FilterParams()
    options = options or AnalysisOptions()
    _check_geometry(reference, models)
    sigma: Dict[str, float] = {}
    for char in chars if chars is not None else reference.alphabet:
        per_doc = {doc: _comparable(char, model, reference, params, options)[0] for doc, model in models.items() if char in model.alphabet}
        if len(per_doc) < 2:
            logger.warning("subtype %s: fewer than 2 documents carry %r; skipped", subtype, char)
            continue
        sigma[char] = subtype_variability(per_doc, char, options.aggregate)
    return VariabilityReport(subtype=subtype, sigma=sigma, documents=tuple(sorted(models)), aggregate=options.aggregate)
