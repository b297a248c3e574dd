"""
============================================================================
SYNTH SERVICE
============================================================================
Generate synthetic corpus dengan ground truth yang diketahui.

Process per dokumen (subtype S, index k):
1. Prototypes = glyph set subtype S, lalu affine shape jitter per dokumen
   (magnitude shape_jitter_S, arah random; sama untuk semua characters)
2. Layout (transcriptions, x, scale) dari RNG seeded [seed, k], sama untuk
   A_k dan B_k
3. Render setiap line (render_placements), tambah intensity noise, clip

Dengan semua jitter nol, composite_line(bundle) mereproduksi setiap line
secara exact.
============================================================================
"""

from typing import Dict, List, Tuple

import numpy as np
from scipy import ndimage

from app.core.logging import get_logger
from app.schemas.corpus import CorpusDocument, CorpusManifest, DocumentEntry, LineEntry
from app.schemas.image import ColorImage, GrayImage
from app.schemas.model import LineSample, Placement
from app.schemas.synth import SUBTYPES, GroundTruthBundle, SynthSpec, SyntheticCorpus
from app.services.glyphs import glyph_set
from app.services.typesetter import render_placements
from app.services.warp import footprint

logger = get_logger(__name__)

MIN_SCALE = 0.8
MAX_SCALE = 1.25


def _rng(spec: SynthSpec, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([spec.seed, *key]))


def subtype_prototypes(spec: SynthSpec) -> Dict[str, Dict[str, GrayImage]]:
    """Glyph set per subtype: A tanpa delta, B dengan spec.deltas."""
    protos = {
        SUBTYPES[0]: glyph_set(spec.alphabet, spec.proto_side),
        SUBTYPES[1]: glyph_set(spec.alphabet, spec.proto_side, dict(spec.deltas)),
    }
    for char in spec.deltas:
        if protos["A"][char] == protos["B"][char]:
            logger.warning("delta %r on %r leaves the glyph unchanged", spec.deltas[char], char)
    return protos


def shape_jitter(prototypes: Dict[str, GrayImage], magnitude: float, rng: np.random.Generator) -> Dict[str, GrayImage]:
    """
    Affine distortion sekitar centre canvas: A = I + magnitude * D dengan D
    unit direction random (sama untuk semua characters satu dokumen).
    """
    direction = rng.standard_normal(4)
    direction /= np.linalg.norm(direction)
    if magnitude == 0.0:
        return dict(prototypes)
    matrix = np.eye(2) + magnitude * direction.reshape(2, 2)
    out = {}
    for char, image in prototypes.items():
        side = image.width
        centre = np.array([side / 2.0 - 0.5, side / 2.0 - 0.5])
        offset = centre - matrix @ centre
        warped = ndimage.affine_transform(image.data, matrix, offset=offset, order=1, mode="constant", cval=0.0)
        out[char] = GrayImage.from_array(warped, clip=True)
    return out


def document_layout(spec: SynthSpec, index: int) -> Tuple[Tuple[Tuple[str, ...], Tuple[Tuple[float, float], ...]], ...]:
    """
    Layout untuk dokumen ke-`index` (dipakai bersama oleh kedua subtype).

    Returns:
        Per line: (transcription, ((x, scale), ...))
    """
    rng = _rng(spec, 0, index)
    side, gap, n = spec.proto_side, spec.gap, spec.glyphs_per_line
    # setiap character muncul sebelum ada yang diulang
    stream: List[str] = []
    needed = n * spec.lines_per_document
    while len(stream) < needed:
        stream.extend(spec.alphabet[i] for i in rng.permutation(len(spec.alphabet)))

    lines = []
    for line_index in range(spec.lines_per_document):
        text = tuple(stream[line_index * n : (line_index + 1) * n])
        offsets = rng.standard_normal(n) * spec.position_jitter
        scales = np.clip(1.0 + rng.standard_normal(n) * spec.scale_jitter, MIN_SCALE, MAX_SCALE)
        geometry = []
        for i in range(n):
            x = gap + side / 2.0 + i * (side + gap) + float(offsets[i])
            geometry.append((max(0.0, x), float(scales[i])))
        lines.append((text, tuple(geometry)))
    return tuple(lines)


def line_width(spec: SynthSpec) -> int:
    return spec.glyphs_per_line * (spec.proto_side + spec.gap) + spec.gap


def generate_corpus(spec: SynthSpec, corpus_id: str = "synthetic") -> SyntheticCorpus:
    """
    Render synthetic corpus dua subtype.

    Args:
        spec (SynthSpec): Parameter generator
        corpus_id (str): Nama corpus di manifest

    Returns:
        SyntheticCorpus: Manifest, dokumen in-memory, ground truth

    Example:
        >>> corpus = generate_corpus(SynthSpec(seed=3))
        >>> [d.doc_id for d in corpus.documents][:2]
        ['A01', 'A02']
    """
    width = line_width(spec)
    base = subtype_prototypes(spec)
    jitter = {SUBTYPES[0]: spec.shape_jitter_a, SUBTYPES[1]: spec.shape_jitter_b}
    layouts = [document_layout(spec, k) for k in range(spec.documents_per_subtype)]

    entries, documents = [], []
    doc_protos: Dict[str, Dict[str, GrayImage]] = {}
    placements: Dict[str, Tuple[Tuple[Placement, ...], ...]] = {}
    backgrounds = {}
    for s_index, subtype in enumerate(SUBTYPES):
        for k in range(spec.documents_per_subtype):
            doc_id = f"{subtype}{k + 1:02d}"
            protos = shape_jitter(base[subtype], jitter[subtype], _rng(spec, 1, s_index, k))
            noise_rng = _rng(spec, 2, s_index, k)
            samples, line_entries, doc_placements, doc_backgrounds = [], [], [], []
            for line_index, (text, geometry) in enumerate(layouts[k]):
                glyphs = tuple(
                    Placement(char_id=c, x=x, scale=scale, fg_color=spec.ink) for c, (x, scale) in zip(text, geometry)
                )
                rendered = render_placements(spec.paper, width, spec.line_height, glyphs, protos)
                pixels = rendered.image.data
                if spec.intensity_noise > 0:
                    pixels = pixels + noise_rng.standard_normal(pixels.shape) * spec.intensity_noise
                image = ColorImage.from_array(pixels, clip=True)
                samples.append(LineSample(image=image, transcription=text, doc_id=doc_id))
                line_entries.append(LineEntry(image=f"{doc_id}/line_{line_index:03d}.png", transcription="".join(text)))
                doc_placements.append(rendered.placements)
                doc_backgrounds.append(rendered.bg_color)
            member = k < spec.reference_docs_per_subtype
            entries.append(DocumentEntry(doc_id=doc_id, subtype=subtype, reference_member=member, lines=line_entries))
            documents.append(CorpusDocument(doc_id=doc_id, subtype=subtype, reference_member=member, lines=tuple(samples)))
            doc_protos[doc_id] = protos
            placements[doc_id] = tuple(doc_placements)
            backgrounds[doc_id] = tuple(doc_backgrounds)

    logger.info(
        "generated %d documents x %d lines (%d glyphs per line, K=%d)",
        len(documents), spec.lines_per_document, spec.glyphs_per_line, spec.proto_side,
    )
    return SyntheticCorpus(
        spec=spec,
        manifest=CorpusManifest(corpus_id=corpus_id, documents=entries),
        documents=tuple(documents),
        ground_truth=GroundTruthBundle(
            subtype_prototypes=base,
            document_prototypes=doc_protos,
            placements=placements,
            backgrounds=backgrounds,
        ),
    )


def footprint_mask(placements: Tuple[Placement, ...], chars: Tuple[str, ...], side: int, height: int, width: int) -> np.ndarray:
    """Boolean (height, width): True di dalam footprint glyph dengan char di `chars`."""
    mask = np.zeros((height, width), dtype=bool)
    for p in placements:
        if p.char_id in chars:
            c0, c1 = footprint(p.x, p.scale, side, width)
            mask[:, c0:c1] = True
    return mask
