"""
============================================================================
ANALYSIS TESTS
============================================================================
Difference maps, distances, comparison graphs, dan variability.

Run tests:
    pytest app/tests/tests_analysis.py -v
============================================================================
"""

import numpy as np
import pytest

from app.core.errors import GeometryMismatchError
from app.schemas.analysis import AnalysisOptions
from app.schemas.filter import FilterParams
from app.schemas.image import GrayImage
from app.schemas.model import ModelState, Prototype
from app.services.analysis import (
    character_graph,
    difference_map,
    document_graph,
    frequency_shade,
    prototype_distance,
    subtype_variability,
    variability_report,
)
from app.services.workflow import compare_pair
from app.tests.conftest import make_model


@pytest.fixture
def faded_model(prototypes) -> ModelState:
    """Model B: bar "a" dengan intensity 0.5."""
    faded = prototypes["a"].data.copy()
    faded[1:7, 2:4] = 0.5
    return make_model(dict(prototypes, a=GrayImage(data=faded)), label="faded")


@pytest.fixture
def small_model() -> ModelState:
    return ModelState(
        alphabet=("a",),
        prototypes=(Prototype(char_id="a", image=GrayImage.zeros(4, 4)),),
        proto_side=4,
        line_height=4,
        label="small",
    )


# ============================================================================
# DIFFERENCE MAP & DISTANCE
# ============================================================================

def test_difference_identical_is_white():
    img = GrayImage(data=np.linspace(0, 1, 9).reshape(3, 3))
    dm = difference_map(img, img)
    assert np.all(dm.signed == 0.0)
    assert np.all(dm.render.data == 1.0)


def test_difference_positive_is_blue():
    dm = difference_map(GrayImage.full(1, 1, 1.0), GrayImage.zeros(1, 1))
    assert dm.render.data[0, 0].tolist() == [0.0, 0.0, 1.0]


def test_difference_negative_is_red():
    dm = difference_map(GrayImage.zeros(1, 1), GrayImage.full(1, 1, 1.0))
    assert dm.render.data[0, 0].tolist() == [1.0, 0.0, 0.0]


def test_difference_antisymmetric():
    rng = np.random.default_rng(2)
    a = GrayImage(data=rng.uniform(size=(5, 5)))
    b = GrayImage(data=rng.uniform(size=(5, 5)))
    assert np.array_equal(difference_map(a, b).signed, -difference_map(b, a).signed)


def test_distance_half_intensity():
    assert prototype_distance(GrayImage.zeros(2, 2), GrayImage.full(2, 2, 0.5)) == pytest.approx(1.0)
    assert prototype_distance(GrayImage.zeros(2, 2), GrayImage.full(2, 2, 0.5), "l1") == pytest.approx(2.0)


def test_distance_symmetric_and_zero_on_self():
    rng = np.random.default_rng(4)
    a = GrayImage(data=rng.uniform(size=(6, 6)))
    b = GrayImage(data=rng.uniform(size=(6, 6)))
    assert prototype_distance(a, b) == pytest.approx(prototype_distance(b, a))
    assert prototype_distance(a, a) == 0.0


@pytest.mark.parametrize("norm", ["l2", "l1"])
def test_distance_metric_axioms(norm):
    """500 random triples: identity, positivity, symmetry, triangle inequality."""
    rng = np.random.default_rng(17)
    for _ in range(500):
        side = int(rng.integers(1, 9))
        a, b, c = (GrayImage(data=rng.uniform(size=(side, side))) for _ in range(3))
        ab, bc, ac = prototype_distance(a, b, norm), prototype_distance(b, c, norm), prototype_distance(a, c, norm)
        assert prototype_distance(a, a, norm) == 0.0
        assert ab > 0.0
        assert ab == prototype_distance(b, a, norm)
        assert ac <= ab + bc + 1e-9


def test_distance_rejects_bad_input():
    with pytest.raises(ValueError):
        prototype_distance(GrayImage.zeros(2, 2), GrayImage.zeros(3, 3))
    with pytest.raises(ValueError):
        prototype_distance(GrayImage.zeros(2, 2), GrayImage.zeros(2, 2), "linf")


def test_compare_pair_self(truth_model):
    results = compare_pair(truth_model, truth_model, truth_model, FilterParams(), AnalysisOptions())
    assert sorted(results) == ["a", "b", "c"]
    assert all(distance == 0.0 for _, distance in results.values())


def test_compare_pair_geometry_mismatch(truth_model, small_model):
    with pytest.raises(GeometryMismatchError):
        compare_pair(truth_model, small_model, None, FilterParams(), AnalysisOptions())


# ============================================================================
# CHARACTER GRAPH
# ============================================================================

def test_character_graph_single_point(truth_model, faded_model):
    graph = character_graph("a", {"d1": truth_model}, truth_model, faded_model, {"d1"}, reference=truth_model)
    (point,) = graph.points
    assert graph.kind == "character"
    assert point.label == "d1"
    assert point.d_a == 0.0
    assert point.d_b > 0.0
    assert point.side == "A-side"


def test_character_graph_markers(truth_model, faded_model):
    fleet = {"d1": truth_model, "d2": faded_model}
    graph = character_graph(
        "a", fleet, truth_model, faded_model, {"d1"}, reference=truth_model, subtypes={"d1": "x", "d2": "y"}
    )
    by_doc = {p.label: p for p in graph.points}
    assert by_doc["d1"].marker == "reference-dot"
    assert by_doc["d2"].marker == "holdout-cross"
    assert by_doc["d2"].side == "B-side"
    assert by_doc["d2"].klass == "y"


def test_character_graph_skips_absent(truth_model, faded_model):
    fleet = {"d1": truth_model, "d2": faded_model}
    frequencies = {"d1": {"a": 3}, "d2": {"b": 2}}
    graph = character_graph(
        "a", fleet, truth_model, faded_model, set(), reference=truth_model, frequencies=frequencies
    )
    assert [p.label for p in graph.points] == ["d1"]
    assert any("d2" in note for note in graph.notes)


def test_character_graph_geometry_mismatch(truth_model, faded_model, small_model):
    with pytest.raises(GeometryMismatchError):
        character_graph("a", {"d1": small_model}, truth_model, faded_model, set(), reference=truth_model)


def test_character_graph_raw_source(truth_model, faded_model):
    options = AnalysisOptions(source="raw")
    graph = character_graph("a", {"d1": faded_model}, truth_model, faded_model, set(), reference=truth_model, options=options)
    (point,) = graph.points
    expected = prototype_distance(faded_model.prototype("a").image, truth_model.prototype("a").image)
    assert point.d_a == pytest.approx(expected)
    assert point.d_b == 0.0


# ============================================================================
# DOCUMENT GRAPH
# ============================================================================

def test_document_graph_notes_absent(truth_model, faded_model):
    graph = document_graph(truth_model, truth_model, faded_model, {"a": 5, "b": 5}, reference=truth_model)
    assert [p.label for p in graph.points] == ["a", "b"]
    assert any("'c'" in note for note in graph.notes)


def test_document_graph_uniform_shade(truth_model, faded_model):
    graph = document_graph(truth_model, truth_model, faded_model, {"a": 4, "b": 4, "c": 4}, reference=truth_model)
    assert {p.shade for p in graph.points} == {0.0}


def test_document_graph_rare_is_darker(truth_model, faded_model):
    graph = document_graph(truth_model, truth_model, faded_model, {"a": 1000, "b": 1}, reference=truth_model)
    shades = {p.label: p.shade for p in graph.points}
    assert shades["b"] > shades["a"]
    assert shades["b"] == pytest.approx(frequency_shade(1, 1000))


# ============================================================================
# VARIABILITY
# ============================================================================

def test_variability_identical_is_zero():
    img = GrayImage(data=np.linspace(0, 1, 16).reshape(4, 4))
    assert subtype_variability({"d1": img, "d2": img, "d3": img}) == 0.0


def test_variability_two_extremes():
    assert subtype_variability({"d1": GrayImage.zeros(1, 1), "d2": GrayImage.full(1, 1, 1.0)}) == pytest.approx(0.5)


def test_variability_grows_with_jitter():
    rng = np.random.default_rng(9)
    base = np.full((6, 6), 0.5)

    def docs(amplitude):
        return {f"d{i}": GrayImage.from_array(base + rng.uniform(-amplitude, amplitude, base.shape), clip=True) for i in range(5)}

    assert subtype_variability(docs(0.3)) > subtype_variability(docs(0.02))


def test_variability_needs_two_documents():
    with pytest.raises(ValueError):
        subtype_variability({"d1": GrayImage.zeros(2, 2)})


def test_variability_report_identical_models(truth_model):
    report = variability_report("x", {"d1": truth_model, "d2": truth_model}, truth_model)
    assert report.sigma == {"a": 0.0, "b": 0.0, "c": 0.0}
    assert report.documents == ("d1", "d2")
