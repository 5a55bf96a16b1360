"""Fusing per-crop detections into one full-image defect mask.

The four crops flag defective blocks independently. Their block
boundaries are rasterized onto a single full-image canvas (logical OR),
the outlined zones are morphologically filled, and a Canny pass over the
filled mask extracts a clean closed contour for presentation. Masks are
2-D boolean arrays in full-image coordinates.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from gradinspect.image_core import as_image
from gradinspect.periodic_tiling import BlockGrid

__all__ = [
    "CannyParams",
    "rasterize_boundaries",
    "fill_holes",
    "canny_edges",
    "fuse",
    "overlay",
    "gaussian_smooth",
    "centered_gradient",
    "suppress_nonmaxima",
]

BURN_VALUE = 255.0  # 8-bit white point used by overlay()


@dataclass(frozen=True)
class CannyParams:
    """Edge detector knobs the source material leaves unstated.

    sigma: Gaussian smoothing standard deviation in pixels (kernel
    half-width is ceil(3 * sigma)). high_percentile: percentile of the
    nonzero gradient magnitudes used as the high threshold. low_ratio:
    low threshold as a fraction of the high one.
    """

    sigma: float = 1.4
    high_percentile: float = 90.0
    low_ratio: float = 0.4

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not 0 < self.high_percentile <= 100:
            raise ValueError(
                f"high_percentile must be in (0, 100], got {self.high_percentile}"
            )
        if not 0 < self.low_ratio <= 1:
            raise ValueError(f"low_ratio must be in (0, 1], got {self.low_ratio}")


def _as_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got ndim={arr.ndim}")
    return arr.astype(bool)


def rasterize_boundaries(
    detections: Sequence[Iterable[int]],
    grids: Sequence[BlockGrid],
    height: int,
    width: int,
) -> np.ndarray:
    """Union of 1-pixel block outlines for every detection of every crop.

    `detections[i]` lists the defective block indices of `grids[i]`;
    rectangles are placed via each grid's crop offsets, so outlines from
    different crops land at their true full-image positions.
    """
    if len(detections) != len(grids):
        raise ValueError(
            f"{len(detections)} detection lists for {len(grids)} grids"
        )
    mask = np.zeros((height, width), dtype=bool)
    for blocks, grid in zip(detections, grids):
        for k in blocks:
            r0, c0, r1, c1 = grid.block_rect(k)
            if r1 > height or c1 > width:
                raise ValueError(
                    f"block {k} rectangle {(r0, c0, r1, c1)} exceeds "
                    f"image {height}x{width}"
                )
            mask[r0, c0:c1] = True
            mask[r1 - 1, c0:c1] = True
            mask[r0:r1, c0] = True
            mask[r0:r1, c1 - 1] = True
    return mask


def fill_holes(mask) -> np.ndarray:
    """Set every background pixel that cannot reach the border.

    Background connectivity is 4-connected; set pixels are never cleared,
    and the operation is idempotent. Implemented as a vectorized flood
    from the border background.
    """
    mask = _as_mask(mask)
    background = ~mask
    reach = np.zeros_like(mask)
    reach[0, :] = background[0, :]
    reach[-1, :] = background[-1, :]
    reach[:, 0] |= background[:, 0]
    reach[:, -1] |= background[:, -1]
    frontier = reach.copy()
    while frontier.any():
        grow = np.zeros_like(frontier)
        grow[1:, :] |= frontier[:-1, :]
        grow[:-1, :] |= frontier[1:, :]
        grow[:, 1:] |= frontier[:, :-1]
        grow[:, :-1] |= frontier[:, 1:]
        frontier = grow & background & ~reach
        reach |= frontier
    return ~reach


def _gaussian_kernel(sigma: float) -> np.ndarray:
    half = math.ceil(3.0 * sigma)
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    kernel = np.exp(-(offsets * offsets) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_smooth(img, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with replicate borders.

    Rejects images smaller than the kernel (size 2*ceil(3*sigma) + 1).
    """
    img = as_image(img)
    kernel = _gaussian_kernel(sigma)
    half = kernel.size // 2
    h, w = img.shape
    if h < kernel.size or w < kernel.size:
        raise ValueError(
            f"image {h}x{w} is smaller than the {kernel.size}-tap "
            f"smoothing kernel for sigma={sigma}"
        )
    padded = np.pad(img, ((0, 0), (half, half)), mode="edge")
    out = np.zeros_like(img)
    for t in range(kernel.size):
        out += kernel[t] * padded[:, t:t + w]
    padded = np.pad(out, ((half, half), (0, 0)), mode="edge")
    out = np.zeros_like(img)
    for t in range(kernel.size):
        out += kernel[t] * padded[t:t + h, :]
    return out


def centered_gradient(img) -> tuple[np.ndarray, np.ndarray]:
    """Centered-difference gradient with replicate borders (half steps there)."""
    img = as_image(img)
    padded = np.pad(img, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return gx, gy

# Quantized gradient directions, as (dr, dc) of the forward neighbor:
# bin 0 = horizontal gradient, 1 = down-right, 2 = vertical, 3 = down-left.
_DIRECTIONS = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}


def suppress_nonmaxima(magnitude, gx, gy) -> np.ndarray:
    """Thin ridges to 1 pixel along the quantized gradient direction.

    A pixel survives if it strictly beats its backward neighbor and at
    least ties its forward neighbor (so an exactly tied pair keeps one
    pixel instead of losing both). Out-of-image neighbors count as 0.
    """
    magnitude = np.asarray(magnitude, dtype=np.float64)
    h, w = magnitude.shape
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    bins = np.round(angle / 45.0).astype(np.int64) % 4
    padded = np.pad(magnitude, 1)
    forward = np.zeros_like(magnitude)
    backward = np.zeros_like(magnitude)
    for b, (dr, dc) in _DIRECTIONS.items():
        sel = bins == b
        fwd = padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
        bwd = padded[1 - dr:1 - dr + h, 1 - dc:1 - dc + w]
        forward[sel] = fwd[sel]
        backward[sel] = bwd[sel]
    return (magnitude > 0) & (magnitude >= forward) & (magnitude > backward)


def _hysteresis(strong: np.ndarray, weak: np.ndarray) -> np.ndarray:
    edges = strong.copy()
    frontier = strong
    while frontier.any():
        grow = np.zeros_like(frontier)
        grow[1:, :] |= frontier[:-1, :]
        grow[:-1, :] |= frontier[1:, :]
        grow[:, 1:] |= frontier[:, :-1]
        grow[:, :-1] |= frontier[:, 1:]
        grow[1:, 1:] |= frontier[:-1, :-1]
        grow[1:, :-1] |= frontier[:-1, 1:]
        grow[:-1, 1:] |= frontier[1:, :-1]
        grow[:-1, :-1] |= frontier[1:, 1:]
        frontier = grow & weak & ~edges
        edges |= frontier
    return edges


def canny_edges(img, params: CannyParams = CannyParams()) -> np.ndarray:
    """Classic five-stage Canny detector returning a boolean edge mask.

    Gaussian smoothing, centered-difference gradient, non-maximum
    suppression over 4 quantized directions, then double-threshold
    hysteresis: the high threshold is the given percentile of the nonzero
    gradient magnitudes, the low one is low_ratio times that, and weak
    pixels survive only when 8-connected (transitively) to a strong one.
    """
    smoothed = gaussian_smooth(img, params.sigma)
    gx, gy = centered_gradient(smoothed)
    magnitude = np.sqrt(gx * gx + gy * gy)
    nonzero = magnitude[magnitude > 0]
    if nonzero.size == 0:
        return np.zeros(magnitude.shape, dtype=bool)
    high = float(np.percentile(nonzero, params.high_percentile))
    low = params.low_ratio * high
    thinned = suppress_nonmaxima(magnitude, gx, gy)
    strong = thinned & (magnitude >= high)
    weak = thinned & (magnitude >= low) & ~strong
    return _hysteresis(strong, weak)


def fuse(
    detections: Sequence[Iterable[int]],
    grids: Sequence[BlockGrid],
    height: int,
    width: int,
    params: CannyParams = CannyParams(),
) -> tuple[np.ndarray, np.ndarray]:
    """Superimpose, fill, and trace the per-crop detections.

    Returns (filled mask, edge mask): the union of defective block
    outlines after hole filling, and the Canny contour of that filled
    mask scaled to 0/255.
    """
    filled = fill_holes(rasterize_boundaries(detections, grids, height, width))
    edges = canny_edges(filled.astype(np.float64) * 255.0, params)
    return filled, edges


def overlay(base, edges) -> np.ndarray:
    """Copy of `base` with edge pixels burned to the 8-bit white point."""
    base = as_image(base)
    edges = _as_mask(edges)
    if base.shape != edges.shape:
        raise ValueError(f"image {base.shape} vs edge mask {edges.shape}")
    out = base.copy()
    out[edges] = BURN_VALUE
    return out
