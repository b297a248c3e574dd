"""
============================================================================
TYPESETTER SERVICE
============================================================================
Generative reconstruction model: text line = background + prototypes yang
di-composite di posisi, scale, dan warna masing-masing.

Functions:
    - composite_line: render line dari placements
    - render_placements: composite_line + placements + bg sebagai RenderedLine
    - estimate_background: median color (lower-median tie rule)
    - align_line / align_corpus: monotone forced alignment (DP)
    - reconstruction_error / corpus_error: mean squared error
    - update_prototypes: least-squares re-estimation per character
    - train_reference: alternating align/update dari blob initialization
    - finetune_prototypes: placements frozen dari reference, hanya pixels
      prototype yang berubah

Semua function deterministic untuk input dan seed yang sama.
============================================================================
"""

import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy import fft as sp_fft
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from app.core.errors import DataError, NumericError, UnknownLabelsError, UsageError
from app.core.logging import get_logger
from app.schemas.image import RGB, ColorImage, GrayImage
from app.schemas.model import (
    LineAlignment,
    LineSample,
    ModelState,
    Placement,
    Prototype,
    Provenance,
    RenderedLine,
    TrainConfig,
)
from app.services.geometry import center_ink, normalize_line, validate_model
from app.services.warp import glyph_warp, ink_clipped, template

logger = get_logger(__name__)

PrototypeSet = Union[ModelState, Mapping[str, Prototype], Mapping[str, GrayImage], Mapping[str, np.ndarray]]
AlignmentLike = Union[LineAlignment, Sequence[Placement]]

# Background-only lines: max |line - bg| di bawah ini dianggap kosong
DEGENERATE_TOL = 1e-6
# Ridge relatif untuk pixels prototype yang tidak ter-cover occurrence
RIDGE = 1e-9


# ============================================================================
# HELPERS
# ============================================================================

def _pixel_map(prototypes: PrototypeSet) -> Dict[str, np.ndarray]:
    if isinstance(prototypes, ModelState):
        return {p.char_id: p.pixels for p in prototypes.prototypes}
    out: Dict[str, np.ndarray] = {}
    for char, proto in prototypes.items():
        if isinstance(proto, Prototype):
            out[char] = proto.pixels
        elif isinstance(proto, GrayImage):
            out[char] = proto.data
        else:
            out[char] = np.asarray(proto, dtype=np.float64)
    return out


def _check_labels(labels: Sequence[str], known: Mapping[str, object]) -> None:
    unknown = {c for c in labels if c not in known}
    if unknown:
        raise UnknownLabelsError(unknown)


def _lower_median(values: np.ndarray) -> np.ndarray:
    """Lower median per column: elemen ke (n-1)//2 setelah sort."""
    ordered = np.sort(values, axis=0)
    return ordered[(ordered.shape[0] - 1) // 2]


def _prefix_argmin(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Running minimum dan index paling kiri yang mencapainya."""
    running = np.minimum.accumulate(values)
    is_new = np.empty(values.shape, dtype=bool)
    is_new[0] = True
    is_new[1:] = values[1:] < running[:-1]
    index = np.maximum.accumulate(np.where(is_new, np.arange(values.size), 0))
    return running, index


def _ordered_scales(scales: Sequence[float]) -> List[float]:
    # tie-break: scale paling dekat ke 1 menang
    return sorted(scales, key=lambda s: (abs(s - 1.0), s))


def _as_placements(item: AlignmentLike) -> Tuple[Placement, ...]:
    return tuple(item.placements) if isinstance(item, LineAlignment) else tuple(item)


def _converged(previous: Optional[float], error: float, config: TrainConfig) -> bool:
    """Error di bawah floor, atau perubahan kecil relatif ke max(previous, floor)."""
    if error <= config.error_floor:
        return True
    if previous is None:
        return False
    return abs(previous - error) <= config.convergence_tol * max(previous, config.error_floor)


# ============================================================================
# COMPOSITING
# ============================================================================

def estimate_background(line: ColorImage) -> RGB:
    """
    Median color dari semua pixels (per channel, lower median).

    Example:
        >>> estimate_background(ColorImage.filled(4, 4, (1.0, 1.0, 1.0)))
        (1.0, 1.0, 1.0)
    """
    if line.area == 0:
        raise ValueError("cannot estimate the background of an empty image")
    median = _lower_median(line.data.reshape(-1, 3))
    return (float(median[0]), float(median[1]), float(median[2]))


def _composite_array(
    bg_color: RGB,
    width: int,
    height: int,
    placements: Sequence[Placement],
    pixels: Mapping[str, np.ndarray],
    warn_clipping: bool = True,
) -> np.ndarray:
    canvas = np.empty((height, width, 3), dtype=np.float64)
    canvas[:, :] = np.asarray(bg_color, dtype=np.float64)
    for placement in sorted(placements, key=lambda p: p.x):
        proto = pixels[placement.char_id]
        if warn_clipping and ink_clipped(proto, placement.x, placement.scale, height, width):
            logger.warning(
                "glyph %r at x=%.2f scale=%.2f escapes the %dx%d canvas; clipped",
                placement.char_id, placement.x, placement.scale, height, width,
            )
        warp = glyph_warp(placement.x, placement.scale, proto.shape[0], height, width)
        if warp.ncols == 0:
            continue
        alpha = warp.render(proto)[:, :, None]
        window = canvas[:, warp.c0 : warp.c1]
        canvas[:, warp.c0 : warp.c1] = (1.0 - alpha) * window + alpha * np.asarray(placement.fg_color)
    return canvas


def composite_line(
    bg_color: RGB,
    width: int,
    height: int,
    placements: Sequence[Placement],
    prototypes: PrototypeSet,
) -> ColorImage:
    """
    Render line: background bg_color, lalu setiap placement (kiri ke kanan)
    di-composite dengan prototype sebagai alpha:

        out = (1 - alpha) * out + alpha * fg_color

    Args:
        bg_color (RGB): Background color
        width, height (int): Canvas size
        placements: Glyph instances
        prototypes: ModelState atau mapping char -> prototype

    Returns:
        ColorImage: Rendered line

    Raises:
        UnknownLabelsError: Jika placement memakai char yang tidak ada
    """
    pixels = _pixel_map(prototypes)
    _check_labels([p.char_id for p in placements], pixels)
    return ColorImage.from_array(_composite_array(bg_color, width, height, placements, pixels), clip=True)


def render_placements(
    bg_color: RGB,
    width: int,
    height: int,
    placements: Sequence[Placement],
    prototypes: PrototypeSet,
) -> RenderedLine:
    """composite_line, dibungkus bersama placements (urut x) dan bg_color."""
    ordered = tuple(sorted(placements, key=lambda p: p.x))
    image = composite_line(bg_color, width, height, ordered, prototypes)
    return RenderedLine(image=image, placements=ordered, bg_color=bg_color)


def reconstruction_error(line: ColorImage, alignment: AlignmentLike, prototypes: PrototypeSet, bg_color: Optional[RGB] = None) -> float:
    """Mean squared error antara line dan rekonstruksinya."""
    if bg_color is None:
        bg_color = alignment.bg_color if isinstance(alignment, LineAlignment) else estimate_background(line)
    recon = _composite_array(bg_color, line.width, line.height, _as_placements(alignment), _pixel_map(prototypes), warn_clipping=False)
    return float(np.mean((recon - line.data) ** 2))


def corpus_error(corpus: Sequence[LineSample], alignments: Sequence[AlignmentLike], prototypes: PrototypeSet) -> float:
    """Pixel-weighted mean reconstruction error over corpus."""
    total = 0.0
    count = 0
    for line, alignment in zip(corpus, alignments):
        total += reconstruction_error(line.image, alignment, prototypes) * line.image.area
        count += line.image.area
    return total / count if count else 0.0


# ============================================================================
# ALIGNMENT
# ============================================================================

def _uniform_alignment(line: LineSample, bg: RGB, pixels: Mapping[str, np.ndarray]) -> LineAlignment:
    n = len(line.transcription)
    width = line.image.width
    fg = tuple(1.0 - c for c in bg)
    placements = tuple(
        Placement(char_id=c, x=(i + 0.5) * width / n, scale=1.0, fg_color=fg)
        for i, c in enumerate(line.transcription)
    )
    error = reconstruction_error(line.image, placements, pixels, bg)
    return LineAlignment(placements=placements, bg_color=bg, error=error, low_confidence=True)


def _score_alphabet(z: np.ndarray, pixels: Mapping[str, np.ndarray], chars: Sequence[str], scales: Sequence[float]) -> Dict[str, Dict[str, np.ndarray]]:
    """
    Score setiap (char, scale, integer x) sekaligus.

    Score = perubahan squared error relatif ke background dengan fg optimal:
        -|sum(alpha * z)|^2 / sum(alpha^2),  z = line - bg
    Templates satu scale punya shape yang sama untuk semua characters, jadi
    correlation dihitung dengan satu batched rFFT sepanjang x (template
    setinggi line, sehingga hanya ada satu offset vertikal).
    """
    height, width, _ = z.shape
    positions = width + 1
    scores = {c: [] for c in chars}
    numer = {c: [] for c in chars}
    denom = {c: [] for c in chars}
    for scale in scales:
        rendered = [template(pixels[c], scale, height) for c in chars]
        alphas = np.stack([alpha for alpha, _ in rendered])
        xc = rendered[0][1]
        span = alphas.shape[2]
        n = sp_fft.next_fast_len(width + span, real=True)
        z_f = sp_fft.rfft(np.pad(z, ((0, 0), (xc, span - xc), (0, 0))), n, axis=1)
        vis_f = sp_fft.rfft(np.pad(np.ones((height, width)), ((0, 0), (xc, span - xc))), n, axis=1)
        alpha_f = np.conj(sp_fft.rfft(alphas, n, axis=2))
        sq_f = np.conj(sp_fft.rfft(alphas * alphas, n, axis=2))
        cross = sp_fft.irfft(np.einsum("hfk,chf->ckf", z_f, alpha_f), n, axis=2)[:, :, :positions]
        energy = sp_fft.irfft(np.einsum("hf,chf->cf", vis_f, sq_f), n, axis=1)[:, :positions]
        for i, char in enumerate(chars):
            floor = 1e-9 * max(float(energy[i].max()), 1e-300)
            ok = energy[i] > floor
            score = np.zeros(positions)
            score[ok] = -np.sum(cross[i][:, ok] ** 2, axis=0) / energy[i][ok]
            scores[char].append(score)
            numer[char].append(cross[i])
            denom[char].append(np.where(ok, energy[i], np.inf))

    tables = {}
    for char in chars:
        stacked = np.stack(scores[char])
        # FFT noise di bawah resolusi ini dibuang supaya tie-break leftmost berlaku
        quantum = 1e-10 * max(float(np.abs(stacked).max()), 1e-300)
        stacked = np.round(stacked / quantum) * quantum
        best = np.argmin(stacked, axis=0)
        tables[char] = {
            "scores": stacked,
            "best_scale": best,
            "best_score": stacked[best, np.arange(positions)],
            "numer": np.stack(numer[char]),
            "denom": np.stack(denom[char]),
        }
    return tables


def _subpixel(row: np.ndarray, x: int) -> float:
    """Quadratic interpolation di sekitar minimum integer x."""
    if x <= 0 or x >= row.size - 1:
        return 0.0
    left, mid, right = row[x - 1], row[x], row[x + 1]
    curvature = left - 2.0 * mid + right
    if curvature <= 0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / curvature, -0.5, 0.5))


def align_line(
    line: LineSample,
    prototypes: PrototypeSet,
    bg_color: Optional[RGB] = None,
    config: Optional[TrainConfig] = None,
    *,
    scales: Optional[Sequence[float]] = None,
    integer_only: bool = False,
) -> LineAlignment:
    """
    Monotone forced alignment dari transcription ke line image.

    Process:
    1. Score setiap (char, scale, integer x) dengan batched template correlation
    2. Dynamic programming atas glyph sequence: x naik dengan jarak minimal
       `config.min_gap * K`; tie -> x paling kiri, scale paling dekat ke 1
    3. Sub-pixel refinement x dengan quadratic interpolation
    4. fg_color = ink-weighted least-squares color di bawah prototype

    Args:
        line (LineSample): Line dengan transcription
        prototypes: Prototype set
        bg_color (RGB, optional): Default estimate_background(line.image)
        config (TrainConfig, optional): Scale grid dan min_gap
        scales: Override scale grid
        integer_only (bool): Skip sub-pixel refinement

    Returns:
        LineAlignment: Placements (satu per character) + error + flag

    Example:
        >>> result = align_line(line, model)
        >>> [round(p.x) for p in result.placements]
        [24, 60, 96]
    """
    config = config or TrainConfig()
    pixels = _pixel_map(prototypes)
    bg = bg_color if bg_color is not None else estimate_background(line.image)
    if not line.transcription:
        return LineAlignment(placements=(), bg_color=bg, error=reconstruction_error(line.image, (), pixels, bg))
    _check_labels(line.transcription, pixels)

    image = line.image.data
    height, width, _ = image.shape
    z = image - np.asarray(bg)
    side = next(iter(pixels.values())).shape[0]
    gap = max(2, int(math.ceil(config.min_gap * side)))
    n = len(line.transcription)

    if float(np.abs(z).max()) < DEGENERATE_TOL:
        logger.warning("line of doc %r is background only; uniform placements", line.doc_id)
        return _uniform_alignment(line, bg, pixels)
    if (n - 1) * gap > width:
        logger.warning("line of doc %r too narrow for %d glyphs; uniform placements", line.doc_id, n)
        return _uniform_alignment(line, bg, pixels)

    grid = _ordered_scales(scales if scales is not None else config.scales)
    tables = _score_alphabet(z, pixels, tuple(dict.fromkeys(line.transcription)), grid)

    positions = width + 1
    cost = np.empty((n, positions))
    back = np.zeros((n, positions), dtype=np.int64)
    cost[0] = tables[line.transcription[0]]["best_score"]
    for i in range(1, n):
        running, index = _prefix_argmin(cost[i - 1])
        reach = np.full(positions, np.inf)
        reach[gap:] = running[: positions - gap]
        back[i, gap:] = index[: positions - gap]
        cost[i] = tables[line.transcription[i]]["best_score"] + reach

    if not np.isfinite(cost[n - 1]).any():
        logger.warning("no feasible alignment for a line of doc %r; uniform placements", line.doc_id)
        return _uniform_alignment(line, bg, pixels)

    xs = [0] * n
    xs[n - 1] = int(np.argmin(cost[n - 1]))
    for i in range(n - 1, 0, -1):
        xs[i - 1] = int(back[i, xs[i]])

    placements = []
    for char, x in zip(line.transcription, xs):
        table = tables[char]
        k = int(table["best_scale"][x])
        offset = 0.0 if integer_only else _subpixel(table["scores"][k], x)
        fg = np.clip(np.asarray(bg) + table["numer"][k][:, x] / table["denom"][k][x], 0.0, 1.0)
        placements.append(
            Placement(
                char_id=char,
                x=float(np.clip(x + offset, 0.0, width)),
                scale=grid[k],
                fg_color=tuple(float(c) for c in fg),
            )
        )
    placements_t = tuple(placements)
    error = reconstruction_error(line.image, placements_t, pixels, bg)
    return LineAlignment(placements=placements_t, bg_color=bg, error=error)


def align_corpus(
    corpus: Sequence[LineSample],
    state: PrototypeSet,
    config: Optional[TrainConfig] = None,
    *,
    scales: Optional[Sequence[float]] = None,
    integer_only: bool = False,
) -> Tuple[LineAlignment, ...]:
    """
    Align semua lines. Lines independent, jadi bisa parallel (joblib);
    urutan output selalu sama dengan urutan corpus.
    """
    config = config or TrainConfig()
    pixels = _pixel_map(state)
    if config.n_jobs == 1 or len(corpus) < 2:
        results = [align_line(line, pixels, None, config, scales=scales, integer_only=integer_only) for line in corpus]
    else:
        results = Parallel(n_jobs=config.n_jobs)(
            delayed(align_line)(line, pixels, None, config, scales=scales, integer_only=integer_only) for line in corpus
        )
    low = sum(1 for r in results if r.low_confidence)
    if low:
        logger.warning("%d of %d lines aligned with low confidence", low, len(results))
    return tuple(results)


# ============================================================================
# PROTOTYPE UPDATE
# ============================================================================

def update_prototypes(
    corpus: Sequence[LineSample],
    placements: Sequence[AlignmentLike],
    state: ModelState,
    step: float = 1.0,
) -> Dict[str, Prototype]:
    """
    Re-estimate setiap prototype dengan least squares.

    Untuk satu occurrence dengan effective background `b` (background +
    glyph tetangga) dan warna fg, compositing affine di alpha:
        y - b = alpha * (fg - b)
    Semua occurrences satu character memberi normal equations
        sum W^T diag(w) W p = sum W^T r
    dengan w = |fg - b|^2 dan r = (fg - b) . (y - b). Pixels yang tidak
    ter-cover tetap di nilai lama (ridge kecil). Hasil di-blend dengan
    prototype lama: p = (1 - step) * old + step * solved, lalu di-clamp.

    Args:
        corpus: Lines
        placements: Per line, LineAlignment atau sequence of Placement
        state (ModelState): Prototypes saat ini
        step (float): Blend factor di [0, 1]

    Returns:
        Dict[str, Prototype]: Prototype baru per character

    Example:
        >>> new = update_prototypes(corpus, alignments, model, step=1.0)
        >>> new["a"].image.shape
        (64, 64)
    """
    if not 0.0 <= step <= 1.0:
        raise ValueError("step must lie in [0, 1]")
    if len(placements) != len(corpus):
        raise ValueError("placements must cover every line of the corpus")

    current = _pixel_map(state)
    side = state.proto_side
    blocks: Dict[str, List[sparse.csr_matrix]] = {c: [] for c in state.alphabet}
    weights: Dict[str, List[np.ndarray]] = {c: [] for c in state.alphabet}
    targets: Dict[str, List[np.ndarray]] = {c: [] for c in state.alphabet}

    for line, item in zip(corpus, placements):
        glyphs = sorted(_as_placements(item), key=lambda p: p.x)
        if not glyphs:
            continue
        _check_labels([g.char_id for g in glyphs], current)
        image = line.image.data
        height, width, _ = image.shape
        bg = np.asarray(item.bg_color if isinstance(item, LineAlignment) else estimate_background(line.image))
        warps = [glyph_warp(g.x, g.scale, side, height, width) for g in glyphs]
        alphas = [w.render(current[g.char_id]) for g, w in zip(glyphs, warps)]

        for j, (glyph, warp) in enumerate(zip(glyphs, warps)):
            if warp.ncols == 0:
                continue
            below = np.empty((height, warp.ncols, 3))
            below[:, :] = bg
            for k, (other, owarp) in enumerate(zip(glyphs, warps)):
                lo, hi = max(warp.c0, owarp.c0), min(warp.c1, owarp.c1)
                if k == j or lo >= hi:
                    continue
                a = alphas[k][:, lo - owarp.c0 : hi - owarp.c0, None]
                seg = below[:, lo - warp.c0 : hi - warp.c0]
                below[:, lo - warp.c0 : hi - warp.c0] = (1.0 - a) * seg + a * np.asarray(other.fg_color)
            diff = np.asarray(glyph.fg_color) - below
            observed = image[:, warp.c0 : warp.c1] - below
            blocks[glyph.char_id].append(warp.matrix)
            weights[glyph.char_id].append(np.sum(diff * diff, axis=2).ravel())
            targets[glyph.char_id].append(np.sum(diff * observed, axis=2).ravel())

    updated: Dict[str, Prototype] = {}
    for char in state.alphabet:
        old = current[char]
        if not blocks[char]:
            logger.warning("character %r has no occurrence; prototype kept", char)
            updated[char] = state.prototype(char)
            continue
        stacked = sparse.vstack(blocks[char], format="csr")
        w = np.concatenate(weights[char])
        r = np.concatenate(targets[char])
        normal = (stacked.T @ sparse.diags(w) @ stacked).tocsc()
        rhs = stacked.T @ r
        coverage = normal.diagonal()
        ridge = RIDGE * max(float(coverage.max()), 1.0)
        system = (normal + ridge * sparse.identity(side * side, format="csc")).tocsc()
        solved = sparse_linalg.spsolve(system, rhs + ridge * old.ravel())
        if not np.all(np.isfinite(solved)):
            raise NumericError(f"prototype solve for {char!r} produced non-finite values")
        solved = np.where(coverage > 0, solved, old.ravel()).reshape(side, side)
        blended = (1.0 - step) * old + step * solved
        updated[char] = Prototype(char_id=char, image=GrayImage.from_array(blended, clip=True))
    return updated


# ============================================================================
# TRAINING
# ============================================================================

def init_prototypes(alphabet: Sequence[str], side: int, seed: int) -> Dict[str, Prototype]:
    """
    Gaussian blob (sigma = K/4, amplitude 0.5) di tengah canvas plus uniform
    noise [-0.05, 0.05] per character, dari satu RNG seeded.
    """
    rng = np.random.default_rng(seed)
    centre = (np.arange(side) + 0.5) - side / 2.0
    sigma = side / 4.0
    blob = 0.5 * np.exp(-(centre[:, None] ** 2 + centre[None, :] ** 2) / (2.0 * sigma**2))
    protos = {}
    for char in alphabet:
        noisy = blob + rng.uniform(-0.05, 0.05, size=(side, side))
        protos[char] = Prototype(char_id=char, image=GrayImage.from_array(noisy, clip=True))
    return protos


def recenter_prototype(proto: Prototype) -> Prototype:
    moved = center_ink(proto.pixels)
    if moved is proto.pixels:
        return proto
    return Prototype(char_id=proto.char_id, image=GrayImage.from_array(moved, clip=True))


def prepare_corpus(corpus: Sequence[LineSample], height: int) -> List[LineSample]:
    prepared = []
    for index, line in enumerate(corpus):
        if line.image.width == 0 or line.image.height == 0:
            raise DataError(f"line {index} of doc {line.doc_id!r} has zero width")
        if line.image.height != height:
            line = line.model_copy(update={"image": normalize_line(line.image, height)})
        prepared.append(line)
    return prepared


def _model_background(corpus: Sequence[LineSample]) -> RGB:
    per_line = np.array([estimate_background(line.image) for line in corpus])
    median = _lower_median(per_line)
    return (float(median[0]), float(median[1]), float(median[2]))


def train_reference(corpus: Sequence[LineSample], config: TrainConfig, *, label: str = "reference") -> ModelState:
    """
    Train reference model dari corpus (alphabet = union transcriptions).

    Setiap round: align semua lines, ukur mean reconstruction error, update
    prototypes. Round `warmup_rounds` pertama align di scale 1 dengan x
    integer. Stop jika improvement relatif ke max(previous, error_floor)
    < convergence_tol, jika error <= error_floor, jika error
    naik (prototypes round sebelumnya dipakai), atau di max_rounds.

    Args:
        corpus: Lines dengan transcriptions
        config (TrainConfig): Parameter training
        label (str): Nama model

    Returns:
        ModelState: Provenance reference, history non-increasing

    Raises:
        DataError: Corpus kosong, alphabet kosong, line zero-width
    """
    if not corpus:
        raise DataError("cannot train on an empty corpus")
    alphabet = tuple(sorted({c for line in corpus for c in line.transcription}))
    if not alphabet:
        raise DataError("corpus transcriptions define an empty alphabet")
    lines = prepare_corpus(corpus, config.line_height)

    state = ModelState(
        alphabet=alphabet,
        prototypes=tuple(init_prototypes(alphabet, config.proto_side, config.seed)[c] for c in alphabet),
        proto_side=config.proto_side,
        line_height=config.line_height,
        bg_color=_model_background(lines),
        provenance=Provenance(),
        training_seed=config.seed,
        label=label,
    )
    logger.info("training reference on %d lines, alphabet %s", len(lines), "".join(alphabet))

    best = state
    history: List[float] = []
    for round_index in range(config.max_rounds):
        warm = round_index < config.warmup_rounds
        alignments = align_corpus(lines, state, config, scales=(1.0,) if warm else None, integer_only=warm)
        error = corpus_error(lines, alignments, state)
        logger.info("round %d: mean reconstruction error %.6g", round_index + 1, error)
        if history and error > history[-1]:
            logger.info("error increased; keeping round %d prototypes", len(history))
            break
        previous = history[-1] if history else None
        history.append(error)
        best = state
        if _converged(previous, error, config):
            break
        protos = update_prototypes(lines, alignments, state, config.proto_step)
        if config.recenter:
            protos = {c: recenter_prototype(p) for c, p in protos.items()}
        state = state.with_prototypes(protos)

    return best.model_copy(update={"history": tuple(history)})


def finetune_with_placements(
    reference: ModelState,
    corpus: Sequence[LineSample],
    alignments: Sequence[LineAlignment],
    config: TrainConfig,
    *,
    label: str = "",
) -> ModelState:
    """
    Update prototypes dengan placements yang sudah frozen. Alphabet,
    geometry, bg_color, dan placements tidak pernah berubah.
    """
    lines = prepare_corpus(corpus, reference.line_height)
    state = reference
    error = corpus_error(lines, alignments, state)
    history = [error]
    best = state
    for round_index in range(config.max_rounds):
        if error <= config.error_floor:
            break
        candidate = state.with_prototypes(update_prototypes(lines, alignments, state, config.proto_step))
        new_error = corpus_error(lines, alignments, candidate)
        logger.info("finetune round %d: mean reconstruction error %.6g", round_index + 1, new_error)
        if new_error > error:
            break
        previous = error
        state, best, error = candidate, candidate, new_error
        history.append(error)
        if _converged(previous, error, config):
            break

    return best.model_copy(
        update={
            "provenance": Provenance.finetuned(reference.model_id),
            "label": label,
            "history": tuple(history),
        }
    )


def finetune_prototypes(
    reference: ModelState,
    corpus: Sequence[LineSample],
    config: TrainConfig,
    *,
    placements: Optional[Sequence[LineAlignment]] = None,
    label: str = "",
) -> ModelState:
    """
    Finetune hanya prototype pixels dari reference model.

    Placements untuk setiap line dihitung SEKALI dengan align_line memakai
    prototypes REFERENCE (atau diberikan lewat `placements`), lalu
    update_prototypes diulang dengan placements tetap.

    Raises:
        UsageError: config.freeze_placements False
        UnknownLabelsError: Corpus memakai label di luar alphabet reference
        DataError: Reference model tidak valid
    """
    if not config.freeze_placements:
        raise UsageError("finetuning requires freeze_placements=true")
    violations = validate_model(reference)
    if violations:
        raise DataError("invalid reference model: " + ", ".join(str(v) for v in violations))
    known = set(reference.alphabet)
    unknown = {c for line in corpus for c in line.transcription if c not in known}
    if unknown:
        raise UnknownLabelsError(unknown)

    lines = prepare_corpus(corpus, reference.line_height)
    if placements is None:
        placements = align_corpus(lines, reference, config)
    elif len(placements) != len(lines):
        raise ValueError("placements must cover every line of the corpus")
    logger.info("finetuning %r on %d lines with frozen placements", label or "model", len(lines))
    return finetune_with_placements(reference, lines, placements, config, label=label)
