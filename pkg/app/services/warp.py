"""
============================================================================
WARP SERVICE
============================================================================
Linear map dari prototype pixels ke canvas pixels untuk satu placement.

Canvas pixel (r, c) membaca prototype di koordinat
    u = (c + 0.5 - x) / s + K/2,   v = (r + 0.5 - H/2) / s + K/2
dengan bilinear interpolation (nol di luar prototype). Map ini separable,
jadi matrix-nya adalah kron(Wv, Wu). Dipakai oleh compositing, alignment
templates, dan least-squares update, sehingga ketiganya selalu konsisten.
============================================================================
"""

import math
from typing import NamedTuple, Tuple

import numpy as np
from scipy import sparse


class GlyphWarp(NamedTuple):
    """
    Warp untuk satu placement.

    Attributes:
        c0, c1: Column window [c0, c1) di canvas
        height: Canvas height
        matrix: CSR (height * (c1 - c0), K * K)
    """

    c0: int
    c1: int
    height: int
    matrix: sparse.csr_matrix

    @property
    def ncols(self) -> int:
        return self.c1 - self.c0

    def render(self, pixels: np.ndarray) -> np.ndarray:
        """Alpha di window, shape (height, c1 - c0)."""
        if self.ncols <= 0:
            return np.zeros((self.height, 0))
        return (self.matrix @ pixels.ravel()).reshape(self.height, self.ncols)


def _interp_matrix(coords: np.ndarray, size: int) -> sparse.csr_matrix:
    """1-D bilinear sampling matrix (len(coords), size), nol di luar [0, size)."""
    base = np.floor(coords)
    frac = coords - base
    base = base.astype(np.int64)
    rows = np.concatenate([np.arange(coords.size), np.arange(coords.size)])
    cols = np.concatenate([base, base + 1])
    vals = np.concatenate([1.0 - frac, frac])
    keep = (cols >= 0) & (cols < size) & (vals != 0.0)
    return sparse.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(coords.size, size))


def footprint(x: float, scale: float, side: int, width: int) -> Tuple[int, int]:
    half = scale * side / 2.0
    c0 = max(0, int(math.floor(x - half)) - 1)
    c1 = min(width, int(math.ceil(x + half)) + 1)
    return c0, max(c0, c1)


def glyph_warp(x: float, scale: float, side: int, height: int, width: int) -> GlyphWarp:
    """
    Build warp untuk glyph dengan centre `x` dan `scale` di canvas height x width.

    Example:
        >>> w = glyph_warp(8.0, 1.0, 4, 4, 16)
        >>> w.render(np.ones((4, 4))).sum()
        16.0
    """
    c0, c1 = footprint(x, scale, side, width)
    cols = np.arange(c0, c1, dtype=np.float64)
    rows = np.arange(height, dtype=np.float64)
    fu = (cols + 0.5 - x) / scale + side / 2.0 - 0.5
    fv = (rows + 0.5 - height / 2.0) / scale + side / 2.0 - 0.5
    wu = _interp_matrix(fu, side)
    wv = _interp_matrix(fv, side)
    matrix = sparse.kron(wv, wu, format="csr")
    matrix.eliminate_zeros()
    return GlyphWarp(c0, c1, height, matrix)


def template(pixels: np.ndarray, scale: float, height: int) -> Tuple[np.ndarray, int]:
    """
    Render prototype sebagai template alpha (height, Wt) dengan centre di
    column integer `xc`. Menggeser template sejauh integer n sama persis
    dengan render di centre xc + n.
    """
    side = pixels.shape[0]
    width = 2 * int(math.ceil(scale * side / 2.0)) + 4
    xc = width // 2
    warp = glyph_warp(float(xc), scale, side, height, width)
    alpha = np.zeros((height, width))
    alpha[:, warp.c0 : warp.c1] = warp.render(pixels)
    return alpha, xc


def ink_clipped(pixels: np.ndarray, x: float, scale: float, height: int, width: int) -> bool:
    """True jika ada ink pixel prototype yang jatuh di luar canvas."""
    ink_rows, ink_cols = np.nonzero(pixels > 0)
    if ink_rows.size == 0:
        return False
    side = pixels.shape[0]
    lo_c = x + (ink_cols.min() - side / 2.0) * scale
    hi_c = x + (ink_cols.max() + 1 - side / 2.0) * scale
    lo_r = height / 2.0 + (ink_rows.min() - side / 2.0) * scale
    hi_r = height / 2.0 + (ink_rows.max() + 1 - side / 2.0) * scale
    return lo_c < 0 or hi_c > width or lo_r < 0 or hi_r > height
