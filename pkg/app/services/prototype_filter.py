"""
============================================================================
PROTOTYPE FILTER SERVICE
============================================================================
Filtering finetuned prototypes dengan soft mask dari reference prototype:

    M = G * D(R > t)          (blur of dilated binarized reference)
    F = M . P                 (filtered prototype)
    e = sum (1 - M) . [P > t']  (ink di luar mask)

e > warn_at -> warn (orange), e > fail_at -> fail (red).

Semua function pure; input images tidak pernah diubah.
============================================================================
"""

import math
from typing import Dict, List, Union

import numpy as np
from scipy import ndimage

from app.core.errors import GeometryMismatchError
from app.core.logging import get_logger
from app.schemas.filter import FilterFlag, FilterParams, FilterReport
from app.schemas.image import GrayImage
from app.schemas.model import ModelState, Prototype

logger = get_logger(__name__)

ImageLike = Union[GrayImage, Prototype]


def _pixels(image: ImageLike) -> np.ndarray:
    return image.pixels if isinstance(image, Prototype) else image.data


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


# ============================================================================
# MORPHOLOGY & BLUR
# ============================================================================

def binarize(image: ImageLike, t: float) -> GrayImage:
    """
    Pixel = 1 jika intensity > t (strict), else 0.

    Example:
        >>> binarize(GrayImage.full(3, 3, 0.8), 0.8).data.sum()
        0.0
    """
    return GrayImage(data=(_pixels(image) > t).astype(np.float64))


def structuring_element(radius: int, element: str = "square") -> np.ndarray:
    size = 2 * radius + 1
    if element == "square":
        return np.ones((size, size), dtype=bool)
    offsets = np.arange(size) - radius
    return offsets[:, None] ** 2 + offsets[None, :] ** 2 <= radius * radius


def dilate(mask: GrayImage, radius: int, element: str = "square") -> GrayImage:
    """
    Binary dilation. Square element (2r+1)^2 default; radius 0 = identity.

    Raises:
        ValueError: Jika mask bukan binary atau radius negatif
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    data = mask.data
    if not np.all((data == 0.0) | (data == 1.0)):
        raise ValueError("dilate expects a binary mask (values in {0, 1})")
    if radius == 0 or data.size == 0:
        return mask
    grown = ndimage.binary_dilation(data > 0.5, structure=structuring_element(radius, element))
    return GrayImage(data=grown.astype(np.float64))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Discrete Gaussian, radius ceil(3 sigma), sum 1."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    radius = int(math.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_blur(image: ImageLike, sigma: float) -> GrayImage:
    """
    Separable Gaussian blur, border replication (mode="nearest").

    Example:
        >>> gaussian_blur(GrayImage.full(5, 5, 0.3), 2.0).data.max()
        0.3
    """
    kernel = gaussian_kernel(sigma)
    data = _pixels(image)
    if data.size == 0:
        return GrayImage(data=data)
    out = ndimage.correlate1d(data, kernel, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, kernel, axis=1, mode="nearest")
    return GrayImage.from_array(out, clip=True)


# ============================================================================
# MASK, FILTER, ERROR
# ============================================================================

def reference_mask(reference: ImageLike, params: FilterParams) -> GrayImage:
    """
    Soft mask M dari reference prototype R.

    Args:
        reference: Reference prototype R
        params (FilterParams): t, dilate_radius, sigma, element

    Returns:
        GrayImage: M dengan values di [0, 1]
    """
    support = dilate(binarize(reference, params.t), params.dilate_radius, params.element)
    return gaussian_blur(support, params.sigma)


def filter_prototype(mask: GrayImage, prototype: ImageLike) -> GrayImage:
    """F = M . P (pixel-wise); F <= M dan F <= P."""
    pixels = _pixels(prototype)
    _same_shape(mask.data, pixels)
    return GrayImage.from_array(mask.data * pixels, clip=True)


def filtering_error(mask: GrayImage, prototype: ImageLike, params: FilterParams) -> float:
    """
    e = sum (1 - M) . [P > t']  (L1, unit pixels).

    Example:
        >>> filtering_error(GrayImage.zeros(4, 4), proto_with_7_ink_pixels, FilterParams())
        7.0
    """
    pixels = _pixels(prototype)
    _same_shape(mask.data, pixels)
    return float(np.sum((1.0 - mask.data) * (pixels > params.t_prime)))


def flag(error: float, params: FilterParams) -> FilterFlag:
    if error < 0:
        raise ValueError("filtering error must be >= 0")
    if error > params.fail_at:
        return FilterFlag.FAIL
    if error > params.warn_at:
        return FilterFlag.WARN
    return FilterFlag.OK


# ============================================================================
# MODEL-LEVEL HELPERS
# ============================================================================

def _check_comparable(reference: ModelState, model: ModelState) -> None:
    if reference.proto_side != model.proto_side:
        raise GeometryMismatchError(
            f"prototype sizes differ: {reference.label or reference.model_id} K={reference.proto_side}, "
            f"{model.label or model.model_id} K={model.proto_side}"
        )


def filter_model(reference: ModelState, model: ModelState, params: FilterParams) -> List[FilterReport]:
    """
    FilterReport untuk setiap character yang ada di kedua model (urutan
    alphabet reference).

    Raises:
        GeometryMismatchError: Jika K berbeda
    """
    _check_comparable(reference, model)
    reports = []
    protos = model.prototype_map()
    for char in reference.alphabet:
        if char not in protos:
            continue
        mask = reference_mask(reference.prototype(char), params)
        error = filtering_error(mask, protos[char], params)
        status = flag(error, params)
        if status is not FilterFlag.OK:
            logger.info("prototype %r of %s flagged %s (e=%.2f)", char, model.label or model.model_id, status.value, error)
        reports.append(
            FilterReport(
                char_id=char,
                mask=mask,
                filtered=filter_prototype(mask, protos[char]),
                error=error,
                flag=status,
            )
        )
    return reports


def filtered_prototypes(reference: ModelState, model: ModelState, params: FilterParams) -> Dict[str, GrayImage]:
    """Map char -> F untuk model, mask dari reference."""
    return {report.char_id: report.filtered for report in filter_model(reference, model, params)}
