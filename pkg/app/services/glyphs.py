"""
============================================================================
GLYPHS SERVICE
============================================================================
Built-in synthetic glyph set dari stroke primitives (bars, bows, spurs).

Koordinat glyph dalam unit box [0,1]^2 (y ke bawah):
    ascender top 0.12, x-height 0.40, baseline 0.75, descender 0.92

Delta kinds (dipakai untuk subtype B):
    - angular: bows digambar sebagai polygon kasar
    - spur: hairline spur di ujung atas stem
    - open_bow: bow terbuka di bagian atas
============================================================================
"""

import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.schemas.image import GrayImage
from app.services.geometry import center_ink, ink_shift

Point = Tuple[float, float]
Segment = Tuple[Point, Point]

ASCENDER = 0.12
X_HEIGHT = 0.40
BASELINE = 0.75
DESCENDER = 0.92
MID = (X_HEIGHT + BASELINE) / 2.0
BOW_RY = (BASELINE - X_HEIGHT) / 2.0

STROKE = 0.09
SMOOTH_VERTICES = 40
ANGULAR_VERTICES = 6


# ============================================================================
# PRIMITIVES
# ============================================================================

def bar(x0: float, y0: float, x1: float, y1: float) -> List[Segment]:
    return [((x0, y0), (x1, y1))]


def bow(
    cx: float,
    cy: float,
    rx: float,
    ry: float,
    start: float = 0.0,
    end: float = 360.0,
    *,
    angular: bool = False,
    open_top: bool = False,
) -> List[Segment]:
    """
    Elliptical arc sebagai polyline, angle dalam derajat (0 = kanan,
    90 = atas). `open_top` membuang bagian 60..120 derajat.
    """
    vertices = ANGULAR_VERTICES if angular else SMOOTH_VERTICES
    span = end - start
    count = max(2, int(math.ceil(vertices * abs(span) / 360.0)))
    angles = np.linspace(start, end, count + 1)
    points = [(cx + rx * math.cos(math.radians(a)), cy - ry * math.sin(math.radians(a))) for a in angles]
    segments = list(zip(points[:-1], points[1:]))
    if open_top:
        kept = []
        for (p, q), a0, a1 in zip(segments, angles[:-1], angles[1:]):
            mid = ((a0 + a1) / 2.0) % 360.0
            if not 60.0 < mid < 120.0:
                kept.append((p, q))
        segments = kept
    return segments


def spur(x: float, y: float) -> List[Segment]:
    """Hairline spur ke kiri-bawah dari ujung stem."""
    return [((x, y), (x - 0.12, y + 0.07))]


def dot(x: float, y: float) -> List[Segment]:
    return [((x, y), (x, y))]


# ============================================================================
# GLYPH DEFINITIONS
# ============================================================================

def glyph_strokes(char: str, delta: Optional[str] = None) -> List[Segment]:
    """
    Segments untuk satu glyph.

    Args:
        char (str): Salah satu dari a b c d e h i n o p
        delta (str, optional): angular / spur / open_bow

    Raises:
        KeyError: Jika tidak ada built-in glyph
    """
    angular = delta == "angular"
    open_top = delta == "open_bow"
    spurred = delta == "spur"
    arc = dict(angular=angular, open_top=open_top)

    if char == "o":
        strokes = bow(0.5, MID, 0.2, BOW_RY, **arc)
    elif char == "c":
        strokes = bow(0.52, MID, 0.2, BOW_RY, 50.0, 310.0, **arc)
    elif char == "e":
        strokes = bow(0.5, MID, 0.2, BOW_RY, 20.0, 340.0, **arc) + bar(0.3, MID, 0.7, MID)
    elif char == "a":
        strokes = bow(0.45, MID + 0.06, 0.17, BOW_RY - 0.06, **arc) + bar(0.64, X_HEIGHT + 0.05, 0.64, BASELINE)
        strokes += bow(0.48, X_HEIGHT + 0.06, 0.16, 0.06, 20.0, 160.0)
    elif char == "b":
        strokes = bar(0.34, ASCENDER, 0.34, BASELINE) + bow(0.52, MID, 0.18, BOW_RY, **arc)
    elif char == "d":
        strokes = bar(0.66, ASCENDER, 0.66, BASELINE) + bow(0.48, MID, 0.18, BOW_RY, **arc)
    elif char == "p":
        strokes = bar(0.34, X_HEIGHT, 0.34, DESCENDER) + bow(0.52, MID, 0.18, BOW_RY, **arc)
    elif char == "h":
        strokes = bar(0.34, ASCENDER, 0.34, BASELINE) + bow(0.5, X_HEIGHT + 0.12, 0.16, 0.1, 0.0, 180.0, **arc)
        strokes += bar(0.66, X_HEIGHT + 0.12, 0.66, BASELINE)
    elif char == "n":
        strokes = bar(0.34, X_HEIGHT, 0.34, BASELINE) + bow(0.5, X_HEIGHT + 0.12, 0.16, 0.1, 0.0, 180.0, **arc)
        strokes += bar(0.66, X_HEIGHT + 0.12, 0.66, BASELINE)
    elif char == "i":
        strokes = bar(0.5, X_HEIGHT, 0.5, BASELINE) + dot(0.5, 0.27)
    else:
        raise KeyError(f"no built-in glyph for {char!r}")

    if spurred:
        top = ASCENDER if char in ("b", "d", "h") else X_HEIGHT
        stem_x = {"b": 0.34, "h": 0.34, "p": 0.34, "n": 0.34, "d": 0.66, "a": 0.64, "i": 0.5}.get(char, 0.5)
        strokes += spur(stem_x, top)
    return strokes


# ============================================================================
# RASTERIZATION
# ============================================================================

def rasterize(segments: List[Segment], side: int, stroke: float = STROKE) -> np.ndarray:
    """
    Render segments ke canvas side x side. Intensity per pixel dari jarak ke
    stroke terdekat dengan 1-pixel anti-aliasing.
    """
    centres = (np.arange(side) + 0.5) / side
    py, px = np.meshgrid(centres, centres, indexing="ij")
    half = max(stroke * side, 1.5) / 2.0
    nearest = np.full((side, side), np.inf)
    for (x0, y0), (x1, y1) in segments:
        dx, dy = x1 - x0, y1 - y0
        length2 = dx * dx + dy * dy
        if length2 == 0.0:
            t = np.zeros_like(px)
        else:
            t = np.clip(((px - x0) * dx + (py - y0) * dy) / length2, 0.0, 1.0)
        dist = np.hypot(px - (x0 + t * dx), py - (y0 + t * dy)) * side
        nearest = np.minimum(nearest, dist)
    return np.clip(half - nearest + 0.5, 0.0, 1.0)


def render_glyph(char: str, side: int, delta: Optional[str] = None) -> GrayImage:
    """
    Render satu glyph, horizontal-centred pada ink centroid glyph dasar.
    Varian dengan delta digeser sama persis, jadi perbedaannya hanya di
    stroke yang diedit.

    Example:
        >>> render_glyph("o", 32).shape
        (32, 32)
    """
    shift = ink_shift(rasterize(glyph_strokes(char), side))
    pixels = center_ink(rasterize(glyph_strokes(char, delta), side), shift)
    return GrayImage.from_array(pixels, clip=True)


def glyph_set(alphabet: Tuple[str, ...], side: int, deltas: Optional[Dict[str, str]] = None) -> Dict[str, GrayImage]:
    deltas = deltas or {}
    return {char: render_glyph(char, side, deltas.get(char)) for char in alphabet}
