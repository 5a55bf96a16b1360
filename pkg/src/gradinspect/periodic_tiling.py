"""Four-corner cropping and periodic block decomposition.

An image rarely contains a whole number of periodic units; simply
truncating would leave the fractional border strips uninspected. Instead
the largest whole-period sub-image is taken anchored at each of the four
corners, so every pixel lands in at least one crop. Each crop is then
tiled exactly by blocks of one periodic unit.

Crop geometry for an M x N image with a unit of `rows` x `cols` pixels:

    crop_height = floor(M / rows) * rows
    crop_width  = floor(N / cols) * cols

with the crop rectangle flush against the anchoring corner. Blocks are
numbered 1..n in row-major order within their crop.
"""

from dataclasses import dataclass

import numpy as np

from gradinspect.image_core import as_image

__all__ = [
    "CORNERS",
    "Periodicity",
    "CropSpec",
    "BlockGrid",
    "InsufficientPeriodsError",
    "four_crops",
    "block_grid",
    "extract_block",
]

CORNERS = ("top_left", "bottom_left", "top_right", "bottom_right")


class InsufficientPeriodsError(ValueError):
    """Image holds fewer than two whole periodic units in some direction."""


@dataclass(frozen=True)
class Periodicity:
    """Size of one periodic unit: `rows` x `cols` pixels."""

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"periods must be >= 1, got {self.rows}x{self.cols}")


@dataclass(frozen=True)
class CropSpec:
    """One corner-anchored whole-period rectangle inside the source image."""

    corner: str
    row_offset: int
    col_offset: int
    height: int
    width: int


@dataclass(frozen=True)
class BlockGrid:
    """Periodic block tiling of a crop, with 1-based row-major indexing."""

    crop: CropSpec
    unit: Periodicity
    block_rows: int
    block_cols: int

    @property
    def n_blocks(self) -> int:
        return self.block_rows * self.block_cols

    def block_rect(self, k: int) -> tuple[int, int, int, int]:
        """Pixel rectangle of block k as (r0, c0, r1, c1), half-open.

        Coordinates are in the full-image frame (crop offsets included).
        """
        if not 1 <= k <= self.n_blocks:
            raise IndexError(f"block index {k} outside 1..{self.n_blocks}")
        br, bc = divmod(k - 1, self.block_cols)
        r0 = self.crop.row_offset + br * self.unit.rows
        c0 = self.crop.col_offset + bc * self.unit.cols
        return r0, c0, r0 + self.unit.rows, c0 + self.unit.cols


def four_crops(height: int, width: int, unit: Periodicity) -> list[CropSpec]:
    """Whole-period crops anchored at all four corners.

    Requires at least two complete periodic units in each direction;
    violations raise InsufficientPeriodsError naming the failing
    dimension. When the image is an exact multiple of the unit all four
    crops coincide with the full image.
    """
    units_v = height // unit.rows
    units_h = width // unit.cols
    if units_v < 2:
        raise InsufficientPeriodsError(
            f"image height {height} holds only {units_v} complete periodic "
            f"unit(s) of {unit.rows} rows; need at least 2"
        )
    if units_h < 2:
        raise InsufficientPeriodsError(
            f"image width {width} holds only {units_h} complete periodic "
            f"unit(s) of {unit.cols} columns; need at least 2"
        )
    crop_h = units_v * unit.rows
    crop_w = units_h * unit.cols
    dr = height - crop_h
    dc = width - crop_w
    offsets = {
        "top_left": (0, 0),
        "bottom_left": (dr, 0),
        "top_right": (0, dc),
        "bottom_right": (dr, dc),
    }
    return [
        CropSpec(corner=c, row_offset=offsets[c][0], col_offset=offsets[c][1],
                 height=crop_h, width=crop_w)
        for c in CORNERS
    ]


def block_grid(crop: CropSpec, unit: Periodicity) -> BlockGrid:
    """Exact block tiling of a crop; crop dimensions must be unit multiples."""
    if crop.height % unit.rows or crop.width % unit.cols:
        raise ValueError(
            f"crop {crop.height}x{crop.width} is not a multiple of the "
            f"{unit.rows}x{unit.cols} unit"
        )
    return BlockGrid(
        crop=crop,
        unit=unit,
        block_rows=crop.height // unit.rows,
        block_cols=crop.width // unit.cols,
    )


def extract_block(img, grid: BlockGrid, k: int) -> np.ndarray:
    """Copy of block k's pixels (one periodic unit)."""
    img = as_image(img)
    r0, c0, r1, c1 = grid.block_rect(k)
    if r1 > img.shape[0] or c1 > img.shape[1]:
        raise ValueError(
            f"grid rectangle {(r0, c0, r1, c1)} exceeds image {img.shape}"
        )
    return img[r0:r1, c0:c1].copy()
