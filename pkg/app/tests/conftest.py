"""
============================================================================
SHARED FIXTURES
============================================================================
Prototypes kecil (K = H = 8) dan lines yang dirender dari placements yang
diketahui. Glyph centres berjarak K + 4 pixels, jadi footprints tidak
pernah overlap dan update_prototypes bisa recover prototypes secara exact.
============================================================================
"""

from typing import Dict, Sequence

import numpy as np
import pytest

from app.schemas.image import ColorImage, GrayImage
from app.schemas.model import LineAlignment, LineSample, ModelState, Placement, Prototype, TrainConfig
from app.services.typesetter import composite_line

SIDE = 8
PITCH = SIDE + 4
WHITE = (1.0, 1.0, 1.0)
BLACK = (0.0, 0.0, 0.0)


def make_prototypes() -> Dict[str, GrayImage]:
    """Tiga pola yang jelas berbeda: bar, box ring, dua garis horizontal."""
    a = np.zeros((SIDE, SIDE))
    a[1:7, 2:4] = 1.0
    a[5:7, 4:6] = 0.7
    b = np.zeros((SIDE, SIDE))
    b[2:6, 1:7] = 0.8
    b[3:5, 3:5] = 0.0
    c = np.zeros((SIDE, SIDE))
    c[1:3, 1:7] = 1.0
    c[5:7, 1:7] = 0.6
    return {"a": GrayImage(data=a), "b": GrayImage(data=b), "c": GrayImage(data=c)}


def make_model(prototypes: Dict[str, GrayImage], label: str = "truth", **fields) -> ModelState:
    alphabet = tuple(sorted(prototypes))
    return ModelState(
        alphabet=alphabet,
        prototypes=tuple(Prototype(char_id=c, image=prototypes[c]) for c in alphabet),
        proto_side=SIDE,
        line_height=SIDE,
        bg_color=WHITE,
        label=label,
        **fields,
    )


def placements_for(text: str) -> tuple:
    return tuple(Placement(char_id=c, x=float(4 + SIDE // 2 + i * PITCH), fg_color=BLACK) for i, c in enumerate(text))


def render_line(text: str, prototypes, doc_id: str = "d1") -> LineSample:
    width = len(text) * PITCH + 4
    image = composite_line(WHITE, width, SIDE, placements_for(text), prototypes)
    return LineSample(image=image, transcription=text, doc_id=doc_id)


def truth_alignments(texts: Sequence[str]) -> tuple:
    return tuple(LineAlignment(placements=placements_for(t), bg_color=WHITE) for t in texts)


@pytest.fixture
def prototypes() -> Dict[str, GrayImage]:
    return make_prototypes()


@pytest.fixture
def truth_model(prototypes) -> ModelState:
    return make_model(prototypes)


@pytest.fixture
def texts():
    return ["abc", "cab", "bca", "aab"]


@pytest.fixture
def corpus(texts, prototypes):
    """
    Lines yang dirender dari truth prototypes.

    Returns:
        list[LineSample]: Satu line per text, background putih, ink hitam
    """
    return [render_line(t, prototypes) for t in texts]


@pytest.fixture
def small_config() -> TrainConfig:
    return TrainConfig(proto_side=SIDE, line_height=SIDE, max_rounds=4, warmup_rounds=1, seed=3)


@pytest.fixture
def white_line() -> ColorImage:
    return ColorImage.filled(SIDE, 40, WHITE)
