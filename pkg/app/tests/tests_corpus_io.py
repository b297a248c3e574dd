"""
============================================================================
CORPUS, MODEL FILE & OUTPUT TESTS
============================================================================
Manifest ingestion, transcription normalisasi, model persistence, SVG,
prototype sheets, dan RunConfig resolution.

Run tests:
    pytest app/tests/tests_corpus_io.py -v
============================================================================
"""

import json
import logging

import numpy as np
import pytest

from app.core.config import Settings, resolve_run_config
from app.core.errors import ChecksumError, ConfigError, ImageLoadError, ManifestError, TranscriptionError, UsageError
from app.crud.crud_corpus import load_corpus, load_manifest, normalize_transcription, write_png
from app.crud.crud_model import load_model, save_model
from app.crud.crud_outputs import CELL_PAD, file_stem, sheet_array, write_graph_svg
from app.crud.svg import graph_svg
from app.schemas.analysis import ComparisonGraph, GraphPoint
from app.schemas.corpus import CharsetPolicy
from app.schemas.model import Provenance
from app.tests.conftest import SIDE, make_model


def write_manifest(root, documents, corpus_id="demo"):
    path = root / "manifest.json"
    path.write_text(json.dumps({"corpus_id": corpus_id, "documents": documents}), encoding="utf-8")
    return path


def line_png(path, width=40, height=16):
    data = np.ones((height, width, 3))
    data[4:12, 6:14] = 0.0
    write_png(data, path)


# ============================================================================
# MANIFEST & CORPUS
# ============================================================================

def test_manifest_duplicate_doc_id(tmp_path):
    path = write_manifest(tmp_path, [{"doc_id": "d1", "lines": []}, {"doc_id": "d1", "lines": []}])
    with pytest.raises(ManifestError) as exc:
        load_manifest(path)
    assert "d1" in exc.value.detail


def test_manifest_invalid_json(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_load_corpus_order_and_height(tmp_path):
    documents = []
    for doc in ("d1", "d2"):
        lines = []
        for i in range(3):
            line_png(tmp_path / doc / f"{i}.png", height=32)
            lines.append({"image": f"{doc}/{i}.png", "transcription": "ab c"})
        documents.append({"doc_id": doc, "subtype": "A", "reference_member": doc == "d1", "lines": lines})
    corpus = load_corpus(write_manifest(tmp_path, documents), 16)
    samples = corpus.lines()
    assert len(samples) == 6
    assert [s.doc_id for s in samples] == ["d1"] * 3 + ["d2"] * 3
    assert samples[0].transcription == ("a", "b", "c")
    assert samples[0].image.shape == (16, 20)
    assert corpus.membership() == frozenset({"d1"})


def test_load_corpus_inverts_light_page(tmp_path):
    line_png(tmp_path / "l.png")
    path = write_manifest(tmp_path, [{"doc_id": "d1", "lines": [{"image": "l.png", "transcription": "a"}]}])
    image = load_corpus(path, 16).lines()[0].image
    assert image.data[0, 0, 0] == 0.0
    assert image.data[8, 8, 0] == 1.0


def test_load_corpus_missing_image(tmp_path):
    path = write_manifest(tmp_path, [{"doc_id": "d1", "lines": [{"image": "nope.png", "transcription": "a"}]}])
    with pytest.raises(ImageLoadError) as exc:
        load_corpus(path, 16)
    assert "nope.png" in exc.value.detail
    assert exc.value.doc_id == "d1"
    assert exc.value.line_index == 0


def test_load_corpus_empty_transcription(tmp_path):
    line_png(tmp_path / "l.png")
    path = write_manifest(tmp_path, [{"doc_id": "d1", "lines": [{"image": "l.png", "transcription": "  "}]}])
    with pytest.raises(TranscriptionError):
        load_corpus(path, 16)


# ============================================================================
# TRANSCRIPTIONS
# ============================================================================

def test_normalize_plain_word():
    assert normalize_transcription("domine") == ("d", "o", "m", "i", "n", "e")


def test_normalize_excluded_char_dropped():
    policy = CharsetPolicy(exclude="k", on_unknown="drop")
    assert normalize_transcription("kat", policy) == ("a", "t")


def test_normalize_composes_accents():
    assert normalize_transcription("cafe\u0301") == ("c", "a", "f", "\u00e9")


def test_normalize_error_names_codepoint():
    policy = CharsetPolicy(charset="abc", on_unknown="error")
    with pytest.raises(TranscriptionError) as exc:
        normalize_transcription("abz", policy)
    assert "U+007A" in exc.value.detail


def test_normalize_lowercase_only():
    policy = CharsetPolicy(lowercase_alpha_only=True)
    assert normalize_transcription("Ab1c.", policy) == ("b", "c")


# ============================================================================
# MODEL FILES
# ============================================================================

def test_model_round_trip(tmp_path, truth_model):
    path = save_model(truth_model, tmp_path / "truth.pscm")
    loaded = load_model(path)
    assert loaded == truth_model
    assert loaded.model_id == truth_model.model_id
    for char in truth_model.alphabet:
        assert np.array_equal(loaded.prototype(char).pixels, truth_model.prototype(char).pixels)


def test_model_truncated(tmp_path, truth_model):
    path = save_model(truth_model, tmp_path / "truth.pscm")
    path.write_bytes(path.read_bytes()[:-40])
    with pytest.raises(ChecksumError):
        load_model(path)


def test_model_dangling_parent(tmp_path, truth_model, caplog):
    child = make_model(
        {c: truth_model.prototype(c).image for c in truth_model.alphabet},
        label="d1",
        provenance=Provenance.finetuned("0" * 16),
    )
    path = save_model(child, tmp_path / "child.pscm")
    with caplog.at_level(logging.WARNING):
        loaded = load_model(path)
    assert loaded.provenance.parent_id == "0" * 16
    assert "dangling parent" in caplog.text


def test_model_parent_found(tmp_path, truth_model, caplog):
    save_model(truth_model, tmp_path / "reference.pscm")
    child = make_model(
        {c: truth_model.prototype(c).image for c in truth_model.alphabet},
        label="d1",
        provenance=Provenance.finetuned(truth_model.model_id),
    )
    path = save_model(child, tmp_path / "child.pscm")
    with caplog.at_level(logging.WARNING):
        load_model(path)
    assert "dangling parent" not in caplog.text


# ============================================================================
# OUTPUTS
# ============================================================================

def test_graph_svg_one_marker_per_point():
    points = tuple(
        GraphPoint(
            label=f"d{i}",
            d_a=float(i),
            d_b=float(14 - i),
            marker="reference-dot" if i % 2 else "holdout-cross",
            side="A-side" if i < 14 - i else "B-side",
        )
        for i in range(14)
    )
    svg = graph_svg(ComparisonGraph(kind="character", subject="a", points=points))
    assert svg.count('class="marker"') == 14
    assert svg.startswith("<?xml")
    assert svg.rstrip().endswith("</svg>")


def test_graph_svg_unwritable_path_is_usage_error(tmp_path):
    graph = ComparisonGraph(kind="document", subject="d1", points=())
    (tmp_path / "taken.svg").mkdir()
    with pytest.raises(UsageError) as exc:
        write_graph_svg(graph, tmp_path / "taken.svg")
    assert exc.value.exit_code == 1
    (tmp_path / "file").write_text("x", encoding="utf-8")
    with pytest.raises(UsageError):
        write_graph_svg(graph, tmp_path / "file" / "graph.svg")


def test_sheet_grid_size(prototypes):
    chars = [chr(ord("a") + i) for i in range(20)]
    models = [make_model(prototypes, label="one"), make_model(prototypes, label="two")]
    sheet = sheet_array(models, chars)
    cell = SIDE + 2 * CELL_PAD
    assert sheet.shape == (2 * cell, 20 * cell, 3)
    inner = sheet[CELL_PAD : CELL_PAD + SIDE, CELL_PAD : CELL_PAD + SIDE, 0]
    assert np.allclose(inner, 1.0 - prototypes["a"].data)


def test_file_stem_escapes():
    assert file_stem("subtype-A") == "subtype-A"
    assert file_stem("é/x") == "u00e9u002fx"


# ============================================================================
# RUN CONFIG
# ============================================================================

def test_config_precedence(tmp_path):
    env = Settings(PROTO_SIDE=32, LINE_HEIGHT=32)
    assert resolve_run_config(env=env).train.proto_side == 32
    assert resolve_run_config(flags={"train.proto_side": 16}, env=env).train.proto_side == 16
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"train": {"proto_side": 24}}), encoding="utf-8")
    config = resolve_run_config(str(path), {"train.proto_side": 16}, env=env)
    assert config.train.proto_side == 24
    assert config.train.line_height == 32


def test_config_fixed_layer_beats_file(tmp_path, caplog):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"train": {"freeze_placements": False}}), encoding="utf-8")
    with caplog.at_level(logging.WARNING):
        config = resolve_run_config(str(path), fixed={"train.freeze_placements": True})
    assert config.train.freeze_placements is True
    assert "overridden by the command" in caplog.text
    assert json.loads(config.to_json())["train"]["freeze_placements"] is True


def test_config_seed_propagates():
    config = resolve_run_config(flags={"seed": 5})
    assert config.train.seed == 5
    assert config.synth.seed == 5


def test_config_explicit_section_seed_wins():
    config = resolve_run_config(flags={"seed": 5, "train.seed": 9})
    assert config.train.seed == 9
    assert config.synth.seed == 5


def test_config_invalid_value():
    with pytest.raises(ConfigError) as exc:
        resolve_run_config(flags={"filter.t": 2.0})
    assert any(error.startswith("filter.t") for error in exc.value.errors)
    assert exc.value.exit_code == 1


def test_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        resolve_run_config(str(tmp_path / "absent.json"))
