"""
============================================================================
GEOMETRY SERVICE
============================================================================
Geometric normalization dan validasi ModelState.

Functions:
    - normalize_line: resize line image ke target height (bilinear)
    - validate_model: list semua pelanggaran invariant ModelState
    - center_ink: horizontal centring prototype pada ink centroid
============================================================================
"""

from typing import List, Optional

import numpy as np
from PIL import Image
from scipy import ndimage

from app.core.errors import DataError
from app.schemas.image import ColorImage
from app.schemas.model import ModelState, Violation


def normalize_line(raw: ColorImage, target_height: int) -> ColorImage:
    """
    Resize line ke `target_height`, aspect ratio tetap.

    Args:
        raw (ColorImage): Line image mentah
        target_height (int): H model

    Returns:
        ColorImage: Image dengan height = target_height. Jika height sudah
        sama, image dikembalikan apa adanya (idempotent).

    Raises:
        DataError: Jika image zero-area

    Example:
        >>> normalize_line(ColorImage.filled(128, 400, (1, 1, 1)), 64).shape
        (64, 200)
    """
    if raw.area == 0:
        raise DataError(f"cannot normalize a zero-area image ({raw.height}x{raw.width})")
    if target_height < 1:
        raise ValueError("target_height must be >= 1")
    if raw.height == target_height:
        return raw

    width = max(1, int(round(raw.width * target_height / raw.height)))
    planes = []
    for channel in range(3):
        # mode "F" supaya resampling di float, bukan 8-bit
        plane = Image.fromarray(np.ascontiguousarray(raw.data[:, :, channel], dtype=np.float32), mode="F")
        plane = plane.resize((width, target_height), resample=Image.Resampling.BILINEAR)
        planes.append(np.asarray(plane, dtype=np.float64))
    return ColorImage.from_array(np.stack(planes, axis=2), clip=True)


def validate_model(state: ModelState, parent: Optional[ModelState] = None) -> List[Violation]:
    """
    Cek semua invariants ModelState. Tidak pernah raise.

    Args:
        state (ModelState): Model yang dicek
        parent (ModelState, optional): Parent model untuk state finetuned

    Returns:
        List[Violation]: Kosong jika semua invariant terpenuhi

    Example:
        >>> [str(v) for v in validate_model(state_without_q)]
        ['missing-prototype(q)']
    """
    violations: List[Violation] = []

    seen = set()
    for char in state.alphabet:
        if char in seen:
            violations.append(Violation(field="alphabet", rule="duplicate-label", detail=char))
        seen.add(char)

    counts: dict = {}
    for proto in state.prototypes:
        counts[proto.char_id] = counts.get(proto.char_id, 0) + 1
        if proto.image.shape != (state.proto_side, state.proto_side):
            violations.append(
                Violation(
                    field="prototypes",
                    rule="prototype-shape",
                    detail=f"{proto.char_id}:{proto.image.height}x{proto.image.width}",
                )
            )
    for char in state.alphabet:
        if char not in counts:
            violations.append(Violation(field="prototypes", rule="missing-prototype", detail=char))
    for char, count in counts.items():
        if char not in seen:
            violations.append(Violation(field="prototypes", rule="extra-prototype", detail=char))
        elif count > 1:
            violations.append(Violation(field="prototypes", rule="duplicate-label", detail=char))

    if parent is not None:
        if state.proto_side != parent.proto_side or state.line_height != parent.line_height:
            violations.append(
                Violation(
                    field="proto_side",
                    rule="geometry-mismatch",
                    detail=f"K={state.proto_side}/{parent.proto_side} H={state.line_height}/{parent.line_height}",
                )
            )
        if state.alphabet != parent.alphabet:
            violations.append(Violation(field="alphabet", rule="alphabet-mismatch"))
        if state.provenance.kind == "finetuned" and state.provenance.parent_id != parent.model_id:
            violations.append(
                Violation(field="provenance", rule="provenance-mismatch", detail=str(state.provenance.parent_id))
            )

    return violations


def ink_shift(pixels: np.ndarray) -> int:
    """Whole-pixel horizontal shift yang membawa ink centroid ke tengah canvas."""
    mass = float(pixels.sum())
    if mass <= 0:
        return 0
    width = pixels.shape[1]
    centroid = float(np.sum(pixels.sum(axis=0) * (np.arange(width) + 0.5)) / mass)
    return int(round(width / 2.0 - centroid))


def center_ink(pixels: np.ndarray, shift: Optional[int] = None) -> np.ndarray:
    """
    Geser horizontal (whole pixels) supaya ink centroid jatuh dalam 0.5 px
    dari tengah canvas. `shift` eksplisit memakai geseran lain (misalnya
    milik glyph dasar). Canvas kosong dikembalikan apa adanya.
    """
    shift = ink_shift(pixels) if shift is None else shift
    if shift == 0:
        return pixels
    return ndimage.shift(pixels, (0, shift), order=0, mode="constant", cval=0.0)
