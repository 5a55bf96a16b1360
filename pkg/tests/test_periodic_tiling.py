import numpy as np
import pytest

from gradinspect import (
    InsufficientPeriodsError,
    Periodicity,
    block_grid,
    extract_block,
    four_crops,
)

from oracles import crop_size_by_subtraction


def grids_for(height, width, unit):
    return [block_grid(c, unit) for c in four_crops(height, width, unit)]


def test_worked_crop_arithmetic():
    crops = four_crops(266, 244, Periodicity(25, 30))
    assert all(c.height == 250 and c.width == 240 for c in crops)
    by_corner = {c.corner: c for c in crops}
    assert (by_corner["bottom_right"].row_offset,
            by_corner["bottom_right"].col_offset) == (16, 4)
    assert (by_corner["top_left"].row_offset,
            by_corner["top_left"].col_offset) == (0, 0)


def test_exact_multiples_collapse_to_full_image():
    crops = four_crops(200, 300, Periodicity(25, 30))
    assert len(crops) == 4
    for c in crops:
        assert (c.row_offset, c.col_offset, c.height, c.width) == (0, 0, 200, 300)


def test_single_vertical_unit_rejected():
    with pytest.raises(InsufficientPeriodsError, match="height"):
        four_crops(49, 120, Periodicity(25, 30))
    with pytest.raises(InsufficientPeriodsError, match="width"):
        four_crops(120, 49, Periodicity(25, 30))


def test_block_grid_dimensions():
    crop = four_crops(250, 240, Periodicity(25, 30))[0]
    grid = block_grid(crop, Periodicity(25, 30))
    assert (grid.block_rows, grid.block_cols, grid.n_blocks) == (10, 8, 80)

    small = four_crops(50, 60, Periodicity(25, 30))[0]
    assert block_grid(small, Periodicity(25, 30)).n_blocks == 4


def test_block_rect_with_offsets():
    unit = Periodicity(25, 30)
    crops = four_crops(266, 244, unit)
    grid = block_grid([c for c in crops if c.corner == "bottom_right"][0], unit)
    r0, c0, r1, c1 = grid.block_rect(1)
    assert (r0, c0) == (16, 4)
    assert (r1, c1) == (41, 34)  # rows 16..40, cols 4..33 inclusive


def test_block_index_is_row_major():
    unit = Periodicity(25, 30)
    grid = block_grid(four_crops(250, 240, unit)[0], unit)
    assert grid.block_rect(2)[:2] == (0, 30)
    assert grid.block_rect(9)[:2] == (25, 0)
    assert grid.block_rect(grid.n_blocks)[:2] == (225, 210)


def test_extract_block_errors_and_content(rng):
    unit = Periodicity(25, 30)
    grid = block_grid(four_crops(50, 60, unit)[0], unit)
    img = np.full((50, 60), 3.0)
    with pytest.raises(IndexError):
        extract_block(img, grid, grid.n_blocks + 1)
    with pytest.raises(IndexError):
        extract_block(img, grid, 0)
    block = extract_block(img, grid, 2)
    assert block.shape == (25, 30)
    assert np.array_equal(block, np.full((25, 30), 3.0))

    marked = img.copy()
    marked[30, 40] = 99.0  # inside block 4 (rows 25.., cols 30..)
    assert 99.0 in extract_block(marked, grid, 4)
    assert 99.0 not in extract_block(marked, grid, 1)


def test_extract_block_returns_copy():
    unit = Periodicity(2, 2)
    grid = block_grid(four_crops(4, 4, unit)[0], unit)
    img = np.zeros((4, 4))
    block = extract_block(img, grid, 1)
    block[0, 0] = 5.0
    assert img[0, 0] == 0.0


def test_blocks_tile_crop_exactly(rng):
    for _ in range(40):
        pr = int(rng.integers(1, 12))
        pc = int(rng.integers(1, 12))
        height = int(rng.integers(2 * pr, 5 * pr + 3))
        width = int(rng.integers(2 * pc, 5 * pc + 3))
        unit = Periodicity(pr, pc)
        for grid in grids_for(height, width, unit):
            coverage = np.zeros((height, width), dtype=int)
            for k in range(1, grid.n_blocks + 1):
                r0, c0, r1, c1 = grid.block_rect(k)
                coverage[r0:r1, c0:c1] += 1
            crop = grid.crop
            inside = coverage[crop.row_offset:crop.row_offset + crop.height,
                              crop.col_offset:crop.col_offset + crop.width]
            assert (inside == 1).all()
            assert coverage.sum() == crop.height * crop.width


def test_four_crops_cover_every_pixel(rng):
    for _ in range(40):
        pr = int(rng.integers(1, 10))
        pc = int(rng.integers(1, 10))
        height = int(rng.integers(2 * pr, 4 * pr + 5))
        width = int(rng.integers(2 * pc, 4 * pc + 5))
        covered = np.zeros((height, width), dtype=bool)
        for c in four_crops(height, width, Periodicity(pr, pc)):
            covered[c.row_offset:c.row_offset + c.height,
                    c.col_offset:c.col_offset + c.width] = True
        assert covered.all()


def test_crop_size_matches_subtraction_oracle(rng):
    for _ in range(200):
        period = int(rng.integers(1, 40))
        extent = int(rng.integers(2 * period, 8 * period + period))
        unit = Periodicity(period, period)
        crop = four_crops(extent, extent, unit)[0]
        assert crop.height == crop_size_by_subtraction(extent, period)


def test_invalid_periodicity():
    with pytest.raises(ValueError):
        Periodicity(0, 5)
    with pytest.raises(ValueError):
        Periodicity(5, -1)
