"""
============================================================================
TYPESETTER TESTS
============================================================================
Compositing, background estimation, alignment, least-squares update,
training, dan finetuning.

Test categories:
    - Compositing examples
    - Alignment round trips
    - Prototype update (exact recovery, step 0, zero occurrences)
    - Training determinism dan history
    - Finetuning guards dan fixed points

Run tests:
    pytest app/tests/tests_typesetter.py -v
============================================================================
"""

import logging

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.errors import UnknownLabelsError, UsageError
from app.schemas.corpus import CorpusDocument, LoadedCorpus
from app.schemas.image import ColorImage, GrayImage
from app.schemas.model import LineSample, Placement, RenderedLine
from app.services.typesetter import (
    align_line,
    composite_line,
    estimate_background,
    finetune_prototypes,
    init_prototypes,
    reconstruction_error,
    render_placements,
    train_reference,
    update_prototypes,
)
from app.services.workflow import finetune_fleet
from app.tests.conftest import BLACK, SIDE, WHITE, make_model, placements_for, render_line, truth_alignments


# ============================================================================
# COMPOSITING
# ============================================================================

def test_composite_empty_placements(prototypes):
    out = composite_line(WHITE, 20, SIDE, (), prototypes)
    assert np.all(out.data == 1.0)


def test_composite_opaque_glyph():
    """Prototype all-ones: hitam tepat di footprint, putih di luar."""
    protos = {"x": GrayImage.full(SIDE, SIDE, 1.0)}
    out = composite_line(WHITE, 24, SIDE, [Placement(char_id="x", x=12.0, fg_color=BLACK)], protos)
    assert np.all(out.data[:, 8:16] == 0.0)
    assert np.all(out.data[:, :8] == 1.0)
    assert np.all(out.data[:, 16:] == 1.0)


def test_composite_quarter_alpha():
    protos = {"x": GrayImage.full(SIDE, SIDE, 0.25)}
    out = composite_line(WHITE, 24, SIDE, [Placement(char_id="x", x=12.0, fg_color=BLACK)], protos)
    assert np.allclose(out.data[:, 8:16], 0.75)


def test_composite_unknown_label(prototypes):
    with pytest.raises(UnknownLabelsError) as exc:
        composite_line(WHITE, 24, SIDE, [Placement(char_id="z", x=12.0)], prototypes)
    assert exc.value.labels == ["z"]


def test_render_placements_orders_glyphs(prototypes):
    shuffled = tuple(reversed(placements_for("abc")))
    rendered = render_placements(WHITE, 40, SIDE, shuffled, prototypes)
    assert [p.char_id for p in rendered.placements] == ["a", "b", "c"]
    assert rendered.bg_color == WHITE
    assert np.array_equal(rendered.image.data, render_line("abc", prototypes).image.data)


def test_rendered_line_rejects_unordered(white_line):
    with pytest.raises(ValidationError):
        RenderedLine(image=white_line, placements=tuple(reversed(placements_for("ab"))), bg_color=WHITE)


# ============================================================================
# BACKGROUND
# ============================================================================

def test_background_white():
    assert estimate_background(ColorImage.filled(4, 4, WHITE)) == (1.0, 1.0, 1.0)


def test_background_robust_to_ink():
    data = np.ones((10, 10, 3))
    data[0, :] = 0.0
    assert estimate_background(ColorImage(data=data)) == (1.0, 1.0, 1.0)


def test_background_checkerboard_lower_median():
    data = np.zeros((2, 2, 3))
    data[0, 1] = 1.0
    data[1, 0] = 1.0
    assert estimate_background(ColorImage(data=data)) == (0.0, 0.0, 0.0)


# ============================================================================
# ALIGNMENT
# ============================================================================

@pytest.mark.parametrize("text", ["abc", "cab", "oo"])
def test_align_round_trip(text, prototypes):
    """Line dari composite_line: x recovered dalam 0.5 px, fg hitam."""
    protos = dict(prototypes)
    if text == "oo":
        protos["o"] = prototypes["b"]
    line = render_line(text, protos)
    result = align_line(line, protos, WHITE)
    truth = placements_for(text)
    assert [p.char_id for p in result.placements] == list(text)
    for found, expected in zip(result.placements, truth):
        assert abs(found.x - expected.x) <= 0.5 + 1e-9
        assert found.scale == 1.0
        assert np.allclose(found.fg_color, BLACK, atol=1e-6)
    assert not result.low_confidence


def test_align_integer_only_exact(prototypes):
    line = render_line("bca", prototypes)
    result = align_line(line, prototypes, WHITE, integer_only=True)
    assert [p.x for p in result.placements] == [p.x for p in placements_for("bca")]
    assert result.error == pytest.approx(0.0, abs=1e-12)


def test_align_empty_transcription(white_line, prototypes):
    result = align_line(LineSample(image=white_line, transcription=""), prototypes)
    assert result.placements == ()


def test_align_degenerate_line(white_line, prototypes):
    result = align_line(LineSample(image=white_line, transcription="ab"), prototypes)
    assert result.low_confidence
    assert [p.x for p in result.placements] == [10.0, 30.0]


def test_align_unknown_label(white_line, prototypes):
    with pytest.raises(UnknownLabelsError):
        align_line(LineSample(image=white_line, transcription="aq"), prototypes)


def test_align_monotone(corpus, prototypes):
    for line in corpus:
        xs = [p.x for p in align_line(line, prototypes).placements]
        assert xs == sorted(xs)


# ============================================================================
# PROTOTYPE UPDATE
# ============================================================================

def test_update_recovers_truth(corpus, texts, prototypes):
    """Placements exact, step 1: prototypes recovered (MAE < 1e-6)."""
    start = make_model({c: p.image for c, p in init_prototypes(("a", "b", "c"), SIDE, seed=0).items()})
    updated = update_prototypes(corpus, truth_alignments(texts), start, step=1.0)
    for char, truth in prototypes.items():
        assert np.mean(np.abs(updated[char].pixels - truth.data)) < 1e-6


def test_update_step_zero_is_identity(corpus, texts):
    start = make_model({c: p.image for c, p in init_prototypes(("a", "b", "c"), SIDE, seed=1).items()})
    updated = update_prototypes(corpus, truth_alignments(texts), start, step=0.0)
    for char in start.alphabet:
        assert np.array_equal(updated[char].pixels, start.prototype(char).pixels)


def test_update_single_occurrence(prototypes):
    line = render_line("a", prototypes)
    start = make_model({"a": GrayImage.full(SIDE, SIDE, 0.5)})
    updated = update_prototypes([line], truth_alignments(["a"]), start)
    assert np.allclose(updated["a"].pixels, prototypes["a"].data, atol=1e-6)


def test_update_zero_occurrence_keeps_prototype(prototypes, caplog):
    protos = dict(prototypes, z=GrayImage.full(SIDE, SIDE, 0.3))
    state = make_model(protos)
    line = render_line("ab", prototypes)
    with caplog.at_level(logging.WARNING):
        updated = update_prototypes([line], truth_alignments(["ab"]), state)
    assert updated["z"] == state.prototype("z")
    assert "no occurrence" in caplog.text


def test_update_rejects_bad_step(corpus, texts, truth_model):
    with pytest.raises(ValueError):
        update_prototypes(corpus, truth_alignments(texts), truth_model, step=1.5)


# ============================================================================
# TRAINING
# ============================================================================

def test_train_is_deterministic(corpus, small_config):
    first = train_reference(corpus, small_config)
    second = train_reference(corpus, small_config)
    assert first.model_id == second.model_id
    assert first == second


def test_train_history_non_increasing(corpus, small_config):
    model = train_reference(corpus, small_config)
    assert model.history
    assert all(b <= a for a, b in zip(model.history, model.history[1:]))
    assert model.alphabet == ("a", "b", "c")
    assert model.provenance.kind == "reference"
    assert model.bg_color == WHITE


def test_train_init_depends_on_seed():
    a = init_prototypes(("a",), SIDE, seed=1)["a"].pixels
    b = init_prototypes(("a",), SIDE, seed=2)["a"].pixels
    assert not np.array_equal(a, b)


def test_train_stops_at_error_floor(corpus, small_config):
    """Error pertama sudah di bawah floor: satu round saja."""
    config = small_config.model_copy(update={"error_floor": 1.0})
    model = train_reference(corpus, config)
    assert len(model.history) == 1


# ============================================================================
# FINETUNING
# ============================================================================

def test_finetune_requires_frozen_placements(corpus, truth_model, small_config):
    with pytest.raises(UsageError):
        finetune_prototypes(truth_model, corpus, small_config)


def test_finetune_stops_once_error_hits_floor(corpus, texts, prototypes, small_config):
    """Update exact pertama membawa error ke ~0: berhenti walau max_rounds 30."""
    start = make_model(dict(prototypes, a=GrayImage.full(SIDE, SIDE, 0.5)))
    config = small_config.model_copy(update={"freeze_placements": True, "max_rounds": 30})
    tuned = finetune_prototypes(start, corpus, config, placements=truth_alignments(texts))
    assert len(tuned.history) == 2
    assert tuned.history[0] > config.error_floor
    assert tuned.history[-1] <= config.error_floor


def test_finetune_fleet_requires_frozen_placements(corpus, truth_model, small_config):
    loaded = LoadedCorpus(corpus_id="c", documents=(CorpusDocument(doc_id="d1", subtype="A", lines=tuple(corpus)),))
    with pytest.raises(UsageError):
        finetune_fleet(truth_model, loaded, small_config)


def test_finetune_unknown_labels(truth_model, small_config, prototypes):
    protos = dict(prototypes, z=prototypes["a"], q=prototypes["b"])
    line = render_line("azq", protos)
    config = small_config.model_copy(update={"freeze_placements": True})
    with pytest.raises(UnknownLabelsError) as exc:
        finetune_prototypes(truth_model, [line], config)
    assert exc.value.labels == ["q", "z"]


def test_finetune_fixed_point(corpus, texts, truth_model, small_config):
    config = small_config.model_copy(update={"freeze_placements": True})
    tuned = finetune_prototypes(truth_model, corpus, config, placements=truth_alignments(texts), label="doc")
    assert tuned.provenance.parent_id == truth_model.model_id
    assert tuned.alphabet == truth_model.alphabet
    assert tuned.proto_side == truth_model.proto_side
    for char in truth_model.alphabet:
        diff = np.abs(tuned.prototype(char).pixels - truth_model.prototype(char).pixels)
        assert diff.mean() < 1e-3


def test_finetune_localized_change(texts, truth_model, prototypes, small_config):
    """Hanya prototype "a" (dengan serif tambahan) yang berubah."""
    serif = prototypes["a"].data.copy()
    serif[1, 4:7] = 1.0
    edited = dict(prototypes, a=GrayImage(data=serif))
    corpus = [render_line(t, edited) for t in texts]
    config = small_config.model_copy(update={"freeze_placements": True})
    tuned = finetune_prototypes(truth_model, corpus, config, placements=truth_alignments(texts))
    assert np.abs(tuned.prototype("a").pixels - prototypes["a"].data).max() > 0.5
    for char in ("b", "c"):
        assert np.abs(tuned.prototype(char).pixels - prototypes[char].data).max() < 1e-3


def test_reconstruction_error_zero_for_truth(corpus, texts, truth_model):
    for line, alignment in zip(corpus, truth_alignments(texts)):
        assert reconstruction_error(line.image, alignment, truth_model) == pytest.approx(0.0, abs=1e-15)
