"""
============================================================================
SYNTHETIC CORPUS TESTS
============================================================================
Generator: exact reproduksi tanpa noise, determinism, dan lokasi delta
antar subtype.

Run tests:
    pytest app/tests/tests_synth.py -v
============================================================================
"""

import numpy as np
import pytest
from pydantic import ValidationError

from app.crud.crud_corpus import load_corpus, write_corpus
from app.schemas.synth import SynthSpec
from app.services.analysis import subtype_variability
from app.services.synth import footprint_mask, generate_corpus, line_width
from app.services.typesetter import composite_line


@pytest.fixture
def spec() -> SynthSpec:
    return SynthSpec(
        alphabet=("a", "o", "n"),
        deltas={"a": "open_bow"},
        proto_side=16,
        line_height=16,
        glyphs_per_line=3,
        lines_per_document=2,
        documents_per_subtype=2,
        reference_docs_per_subtype=1,
        seed=4,
    )


def test_documents_and_membership(spec):
    corpus = generate_corpus(spec)
    assert [d.doc_id for d in corpus.documents] == ["A01", "A02", "B01", "B02"]
    assert sorted(corpus.as_loaded().membership()) == ["A01", "B01"]
    assert {d.subtype for d in corpus.documents} == {"A", "B"}


def test_every_char_appears(spec):
    for doc in generate_corpus(spec).documents:
        assert set(doc.frequencies()) == set(spec.alphabet)


def test_noiseless_reconstruction_is_exact(spec):
    corpus = generate_corpus(spec)
    truth = corpus.ground_truth
    width = line_width(spec)
    for doc in corpus.documents:
        for sample, glyphs in zip(doc.lines, truth.placements[doc.doc_id]):
            rebuilt = composite_line(spec.paper, width, spec.line_height, glyphs, truth.document_prototypes[doc.doc_id])
            assert np.array_equal(rebuilt.data, sample.image.data)


def test_generation_is_deterministic(spec):
    first, second = generate_corpus(spec), generate_corpus(spec)
    for a, b in zip(first.documents, second.documents):
        for la, lb in zip(a.lines, b.lines):
            assert np.array_equal(la.image.data, lb.image.data)


def test_subtype_difference_inside_delta_footprints(spec):
    corpus = generate_corpus(spec)
    docs = {d.doc_id: d for d in corpus.documents}
    placements = corpus.ground_truth.placements
    changed = 0.0
    for a_line, b_line, glyphs in zip(docs["A01"].lines, docs["B01"].lines, placements["A01"]):
        assert a_line.transcription == b_line.transcription
        diff = np.abs(a_line.image.data - b_line.image.data).max(axis=2)
        mask = footprint_mask(glyphs, tuple(spec.deltas), spec.proto_side, spec.line_height, line_width(spec))
        assert np.all(diff[~mask] == 0.0)
        changed += diff[mask].sum()
    assert changed > 0.0


def test_noise_and_jitter_keep_range(spec):
    noisy = spec.model_copy(update={"intensity_noise": 0.2, "position_jitter": 1.5, "scale_jitter": 0.1})
    for doc in generate_corpus(noisy).documents:
        for line in doc.lines:
            assert line.image.data.min() >= 0.0
            assert line.image.data.max() <= 1.0


def test_spec_rejects_stray_delta():
    with pytest.raises(ValidationError):
        SynthSpec(alphabet=("o", "n"), deltas={"a": "open_bow"})


def test_spec_rejects_too_many_reference_docs():
    with pytest.raises(ValidationError):
        SynthSpec(documents_per_subtype=2, reference_docs_per_subtype=3)


def test_written_corpus_is_byte_identical(spec, tmp_path):
    first = write_corpus(generate_corpus(spec), tmp_path / "one").parent
    second = write_corpus(generate_corpus(spec), tmp_path / "two").parent
    files = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
    assert files == sorted(p.relative_to(second) for p in second.rglob("*") if p.is_file())
    assert all((first / f).read_bytes() == (second / f).read_bytes() for f in files)


def test_written_corpus_loads(spec, tmp_path):
    manifest = write_corpus(generate_corpus(spec), tmp_path)
    loaded = load_corpus(manifest, spec.line_height)
    assert [d.doc_id for d in loaded.documents] == ["A01", "A02", "B01", "B02"]
    assert loaded.lines()[0].image.shape == (spec.line_height, line_width(spec))


def test_shape_jitter_raises_variability(spec):
    """Subtype A dengan shape jitter 4x subtype B: sigma A lebih besar."""
    jittered = spec.model_copy(update={"shape_jitter_a": 0.2, "shape_jitter_b": 0.05, "documents_per_subtype": 4})
    truth = generate_corpus(jittered).ground_truth.document_prototypes
    total = {}
    for subtype in ("A", "B"):
        docs = {doc: protos for doc, protos in truth.items() if doc.startswith(subtype)}
        total[subtype] = sum(
            subtype_variability({doc: protos[char] for doc, protos in docs.items()}) for char in spec.alphabet
        )
    assert total["A"] > total["B"]
