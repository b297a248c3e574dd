"""
============================================================================
COMMAND LINE TESTS
============================================================================
End-to-end lewat app.main.main(argv): exit codes, artifacts, dan
determinism pipeline.

Run tests:
    pytest app/tests/tests_cli.py -v
============================================================================
"""

import json

import numpy as np
import pytest
from PIL import Image

from app.crud.crud_corpus import write_png
from app.crud.crud_model import save_model
from app.main import main
from app.schemas.image import GrayImage
from app.schemas.model import ModelState, Prototype
from app.tests.conftest import make_model

SMALL_SYNTH = {
    "alphabet": ["a", "o", "n"],
    "deltas": {"a": "open_bow"},
    "proto_side": 16,
    "line_height": 16,
    "glyphs_per_line": 3,
    "lines_per_document": 2,
    "documents_per_subtype": 2,
    "reference_docs_per_subtype": 1,
}
SMALL_TRAIN = {"proto_side": 16, "line_height": 16, "max_rounds": 2, "warmup_rounds": 1}


@pytest.fixture
def run_config(tmp_path):
    """Config file kecil supaya pipeline cepat."""
    path = tmp_path / "small.json"
    path.write_text(json.dumps({"seed": 2, "synth": SMALL_SYNTH, "train": SMALL_TRAIN}), encoding="utf-8")
    return str(path)


def tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


# ============================================================================
# USAGE ERRORS
# ============================================================================

def test_unknown_flag_exits_1(capsys):
    assert main(["--bogus"]) == 1
    assert "error:" in capsys.readouterr().err


def test_missing_subcommand_exits_1():
    assert main([]) == 1


def test_train_without_corpus_exits_1(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "train"]) == 1
    assert "--corpus" in capsys.readouterr().err


def test_invalid_config_exits_1(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"filter": {"t": 3.0}}), encoding="utf-8")
    assert main(["--config", str(path), "--out", str(tmp_path / "out"), "synth"]) == 1


# ============================================================================
# WORKFLOW
# ============================================================================

def test_synth_writes_corpus(tmp_path, run_config):
    out = tmp_path / "out"
    assert main(["--config", run_config, "--out", str(out), "synth"]) == 0
    manifest = json.loads((out / "corpus" / "manifest.json").read_text(encoding="utf-8"))
    assert [d["doc_id"] for d in manifest["documents"]] == ["A01", "A02", "B01", "B02"]
    assert (out / "corpus" / "A01" / "line_000.png").is_file()
    assert (out / "run_config.json").is_file()


def test_finetune_unknown_labels_exits_2(tmp_path, run_config, capsys):
    synth_out, train_out = tmp_path / "synth", tmp_path / "train"
    assert main(["--config", run_config, "--out", str(synth_out), "synth"]) == 0
    manifest = str(synth_out / "corpus" / "manifest.json")
    assert main(["--config", run_config, "--out", str(train_out), "train", "--corpus", manifest]) == 0
    reference = train_out / "models" / "reference.pscm"
    assert reference.is_file()

    other = tmp_path / "other.json"
    other_synth = dict(SMALL_SYNTH, alphabet=["a", "e", "h"])
    other.write_text(json.dumps({"synth": other_synth, "train": SMALL_TRAIN}), encoding="utf-8")
    assert main(["--config", str(other), "--out", str(tmp_path / "s2"), "synth"]) == 0
    code = main(
        [
            "--out", str(tmp_path / "ft"), "finetune",
            "--corpus", str(tmp_path / "s2" / "corpus" / "manifest.json"),
            "--reference", str(reference),
        ]
    )
    assert code == 2
    assert "'e' 'h'" in capsys.readouterr().err


def test_finetune_records_frozen_placements(tmp_path, capsys):
    """Config file dengan freeze_placements false: finetune tetap frozen dan run_config mencatatnya."""
    config = tmp_path / "unfrozen.json"
    config.write_text(
        json.dumps({"seed": 2, "synth": SMALL_SYNTH, "train": dict(SMALL_TRAIN, freeze_placements=False)}),
        encoding="utf-8",
    )
    synth_out, train_out, ft_out = tmp_path / "synth", tmp_path / "train", tmp_path / "ft"
    assert main(["--config", str(config), "--out", str(synth_out), "synth"]) == 0
    manifest = str(synth_out / "corpus" / "manifest.json")
    assert main(["--config", str(config), "--out", str(train_out), "train", "--corpus", manifest]) == 0
    capsys.readouterr()
    code = main(
        [
            "--config", str(config), "--out", str(ft_out), "finetune",
            "--corpus", manifest,
            "--reference", str(train_out / "models" / "reference.pscm"),
        ]
    )
    assert code == 0
    recorded = json.loads((ft_out / "run_config.json").read_text(encoding="utf-8"))
    assert recorded["train"]["freeze_placements"] is True
    assert "overridden by the command" in capsys.readouterr().err


def test_graph_geometry_mismatch_exits_2(tmp_path, prototypes, capsys):
    data = np.ones((8, 40, 3))
    data[2:6, 10:14] = 0.0
    write_png(data, tmp_path / "d1.png")
    manifest = tmp_path / "manifest.json"
    manifest.write_text(
        json.dumps(
            {
                "corpus_id": "tiny",
                "documents": [{"doc_id": "d1", "lines": [{"image": "d1.png", "transcription": "ab"}]}],
            }
        ),
        encoding="utf-8",
    )
    save_model(make_model(prototypes, label="reference"), tmp_path / "reference.pscm")
    small = ModelState(
        alphabet=("a",),
        prototypes=(Prototype(char_id="a", image=GrayImage.zeros(4, 4)),),
        proto_side=4,
        line_height=4,
        label="d1",
    )
    save_model(small, tmp_path / "d1.pscm")
    code = main(
        [
            "--out", str(tmp_path / "out"), "graph",
            "--corpus", str(manifest),
            "--models", str(tmp_path / "reference.pscm"), str(tmp_path / "d1.pscm"),
            "--axis-a", "reference", "--axis-b", "reference",
        ]
    )
    assert code == 2
    assert "geometry mismatch" in capsys.readouterr().err


def test_filter_sheets_show_masked_prototypes(tmp_path, prototypes):
    """Ink di luar reference mask: sheet filtered berbeda dari sheet raw."""
    stray = prototypes["a"].data.copy()
    stray[:, 6:8] = 1.0
    save_model(make_model(prototypes, label="reference"), tmp_path / "reference.pscm")
    save_model(make_model(dict(prototypes, a=GrayImage(data=stray)), label="d1"), tmp_path / "d1.pscm")
    out = tmp_path / "out"
    code = main(
        [
            "--out", str(out), "filter",
            "--models", str(tmp_path / "reference.pscm"), str(tmp_path / "d1.pscm"),
        ]
    )
    assert code == 0
    raw = np.asarray(Image.open(out / "sheets" / "raw.png"))
    filtered = np.asarray(Image.open(out / "sheets" / "filtered.png"))
    assert raw.shape == filtered.shape
    assert not np.array_equal(raw, filtered)


def test_pipeline_outputs_and_determinism(tmp_path, run_config, monkeypatch):
    """Dua run dengan config dan seed sama: output tree identik byte per byte."""
    trees = []
    for name in ("one", "two"):
        workdir = tmp_path / name
        workdir.mkdir()
        monkeypatch.chdir(workdir)
        assert main(["--config", run_config, "--out", "out", "pipeline"]) == 0
        trees.append(tree(workdir / "out"))

    first = trees[0]
    for expected in (
        "run_config.json",
        "report.json",
        "corpus/manifest.json",
        "models/reference.pscm",
        "models/subtype_A.pscm",
        "models/doc_B02.pscm",
        "sheets/reference.png",
        "sheets/filtered.png",
        "graphs/character_a.svg",
        "graphs/document_A01.svg",
        "diffs/subtype-A-vs-subtype-B-a.png",
    ):
        assert expected in first, expected
    report = json.loads(first["report.json"])
    assert set(report["variability"]) == {"A", "B"}
    assert report["compare"]["distances"]["a"] >= 0.0
    recorded = json.loads(first["run_config.json"])
    assert recorded["train"]["freeze_placements"] is True
    assert first == trees[1]
