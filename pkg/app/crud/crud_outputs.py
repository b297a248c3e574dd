"""
============================================================================
OUTPUT CRUD OPERATIONS
============================================================================
Emisi semua artifacts satu run. Semua writers deterministic: input sama
menghasilkan bytes yang sama.

Files:
    - prototype sheet PNG: satu row per model, satu column per character;
      prototype warn/fail diberi outline orange/red
    - difference map PNG
    - graph SVG
    - report JSON (sorted keys)
    - run_config.json
============================================================================
"""

import json
from pathlib import Path
from typing import Any, List, Mapping, Optional, Sequence

import numpy as np

from app.core.config import RunConfig
from app.core.errors import UsageError
from app.core.logging import get_logger
from app.crud.base import PathLike
from app.crud.crud_corpus import write_png
from app.crud.svg import graph_svg
from app.schemas.analysis import ComparisonGraph, DifferenceMap
from app.schemas.filter import FilterFlag
from app.schemas.model import ModelState

logger = get_logger(__name__)

CELL_PAD = 2
OUTLINE = {FilterFlag.WARN: (1.0, 0.55, 0.0), FilterFlag.FAIL: (0.85, 0.0, 0.0)}
EMPTY_CELL = (0.85, 0.85, 0.85)
RUN_CONFIG_NAME = "run_config.json"


def file_stem(text: str) -> str:
    """Nama file aman: [A-Za-z0-9_-] dipertahankan, lainnya jadi uXXXX."""
    return "".join(c if (c.isascii() and (c.isalnum() or c in "_-")) else f"u{ord(c):04x}" for c in text)


def _writable(path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {path.parent}: {exc.strerror or exc}")
    return path


def _write_text(path: Path, text: str) -> Path:
    path = _writable(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}")
    return path


def sheet_array(
    models: Sequence[ModelState],
    chars: Optional[Sequence[str]] = None,
    flags: Optional[Mapping[str, Mapping[str, FilterFlag]]] = None,
) -> np.ndarray:
    """
    Grid RGB (rows x cols cells). Prototype ditampilkan sebagai 1 - P (ink
    gelap di atas putih).

    Args:
        models: Satu row per model
        chars: Columns; default alphabet model pertama
        flags: row label -> char -> FilterFlag
    """
    if not models:
        raise ValueError("a prototype sheet needs at least one model")
    chars = tuple(chars if chars is not None else models[0].alphabet)
    side = models[0].proto_side
    cell = side + 2 * CELL_PAD
    sheet = np.ones((len(models) * cell, max(1, len(chars)) * cell, 3))
    flags = flags or {}
    for row, model in enumerate(models):
        protos = model.prototype_map()
        row_flags = flags.get(model.label, {})
        for col, char in enumerate(chars):
            top, left = row * cell, col * cell
            block = sheet[top : top + cell, left : left + cell]
            status = row_flags.get(char, FilterFlag.OK)
            if status in OUTLINE:
                block[:, :] = OUTLINE[status]
            inner = block[CELL_PAD : CELL_PAD + side, CELL_PAD : CELL_PAD + side]
            if char in protos and protos[char].side == side:
                inner[:, :] = (1.0 - protos[char].pixels)[:, :, None]
            else:
                inner[:, :] = EMPTY_CELL
    return sheet


def write_prototype_sheet(
    models: Sequence[ModelState],
    path: PathLike,
    chars: Optional[Sequence[str]] = None,
    flags: Optional[Mapping[str, Mapping[str, FilterFlag]]] = None,
) -> Path:
    return write_png(sheet_array(models, chars, flags), _writable(Path(path)))


def write_difference_map(diff: DifferenceMap, path: PathLike) -> Path:
    return write_png(diff.render.data, _writable(Path(path)))


def write_graph_svg(graph: ComparisonGraph, path: PathLike) -> Path:
    return _write_text(Path(path), graph_svg(graph))


def write_report(report: Mapping[str, Any], path: PathLike) -> Path:
    """JSON dengan sorted keys; floats ditulis dengan repr (lossless)."""
    return _write_text(Path(path), json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n")


def write_run_config(config: RunConfig, out_dir: PathLike) -> Path:
    return _write_text(Path(out_dir) / RUN_CONFIG_NAME, config.to_json())


def emit_outputs(
    out_dir: PathLike,
    *,
    report: Mapping[str, Any],
    sheets: Optional[Mapping[str, Sequence[ModelState]]] = None,
    flags: Optional[Mapping[str, Mapping[str, FilterFlag]]] = None,
    difference_maps: Optional[Mapping[str, DifferenceMap]] = None,
    graphs: Optional[Sequence[ComparisonGraph]] = None,
    report_name: str = "report.json",
) -> List[Path]:
    """
    Tulis semua artifacts ke out_dir.

    Args:
        out_dir: Output directory
        report: Semua numeric results (distances, e, flags, sigma)
        sheets: nama sheet -> models (rows)
        flags: model label -> char -> flag (untuk outline)
        difference_maps: nama file (tanpa suffix) -> DifferenceMap
        graphs: Comparison graphs; nama file dari kind + subject

    Returns:
        List[Path]: Files yang ditulis, urut

    Raises:
        UsageError: Directory tidak bisa ditulis
    """
    out_dir = Path(out_dir)
    written: List[Path] = []
    for name, models in sorted((sheets or {}).items()):
        written.append(write_prototype_sheet(models, out_dir / "sheets" / f"{file_stem(name)}.png", flags=flags))
    for name, diff in sorted((difference_maps or {}).items()):
        written.append(write_difference_map(diff, out_dir / "diffs" / f"{file_stem(name)}.png"))
    for graph in graphs or ():
        written.append(write_graph_svg(graph, out_dir / "graphs" / f"{graph.kind}_{file_stem(graph.subject)}.svg"))
    written.append(write_report(report, out_dir / report_name))
    logger.info("wrote %d files to %s", len(written), out_dir)
    return sorted(written)
