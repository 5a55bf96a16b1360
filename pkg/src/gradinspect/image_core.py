"""Gradient-space computation via forward differences.

All detection happens on the gradient magnitude image, not on raw
intensities: a break in a repeating pattern shows up far more strongly in
the rate of change than in the absolute pixel values.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["GradientField", "as_image", "forward_differences", "gradient_space"]


def as_image(pixels) -> np.ndarray:
    """Validate an intensity array and promote it to 2-D float64.

    Raises ValueError for anything that is not a finite, non-empty 2-D
    array. 8-bit inputs are promoted so downstream block sums cannot
    saturate.
    """
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D intensity array, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"image must be at least 1x1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite intensities")
    return arr


@dataclass(frozen=True)
class GradientField:
    """Horizontal/vertical forward differences and their magnitude.

    All three arrays share the source image's shape. The last column of
    `gx` and the last row of `gy` are zero (replicate-border convention,
    so the field stays aligned with the original image for cropping).
    """

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray


def forward_differences(img) -> GradientField:
    """Differentiate with the (-1, 1) masks along columns and rows.

    gx[r][c] = img[r][c+1] - img[r][c] (0 in the last column),
    gy[r][c] = img[r+1][c] - img[r][c] (0 in the last row),
    magnitude = sqrt(gx^2 + gy^2).
    """
    img = as_image(img)
    gx = np.zeros_like(img)
    gy = np.zeros_like(img)
    gx[:, :-1] = img[:, 1:] - img[:, :-1]
    gy[:-1, :] = img[1:, :] - img[:-1, :]
    # sqrt(gx*gx + gy*gy) rather than hypot: bit-identical to a scalar
    # reference loop, and 0..255 inputs cannot overflow doubles.
    magnitude = np.sqrt(gx * gx + gy * gy)
    return GradientField(gx=gx, gy=gy, magnitude=magnitude)


def gradient_space(img) -> np.ndarray:
    """Gradient magnitude plane consumed by all downstream stages."""
    return forward_differences(img).magnitude
