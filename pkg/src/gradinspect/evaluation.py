"""Block-level scoring and a deterministic synthetic texture generator.

Scoring is per crop: predicted and ground-truth defective block sets are
compared as sets, giving TP/TN/FP/FN counts, precision TP/(TP+FP), recall
TP/(TP+FN) and accuracy (TP+TN)/n. A metric whose denominator is zero is
reported as None (undefined), never coerced to 0 or 1.

The generator renders procedural dot / star / box motifs tiled at an
exact period, composites seeded defects, and returns the image together
with the exact set of pixels the defects changed. Identical specs produce
byte-identical results (the noise stream is a PCG64 generator seeded from
the spec).
"""

from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from gradinspect.periodic_tiling import BlockGrid, Periodicity

__all__ = [
    "ConfusionCounts",
    "CropScore",
    "score_crop",
    "average_scores",
    "DefectSpec",
    "SyntheticSpec",
    "generate_texture",
    "blocks_intersecting",
    "ground_truth_blocks",
    "BACKGROUND",
]

BACKGROUND = 50.0  # motif background intensity; also what missing-motif restores
FOREGROUND = 230.0


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class CropScore:
    """One evaluated crop: counts plus (possibly undefined) metrics."""

    corner: str
    counts: ConfusionCounts
    precision: float | None
    recall: float | None
    accuracy: float


def score_crop(
    predicted: Iterable[int], truth: Iterable[int], n_blocks: int
) -> tuple[ConfusionCounts, float | None, float | None, float]:
    """Confusion counts and metrics for one crop's block decisions."""
    pred = set(predicted)
    true = set(truth)
    for name, blocks in (("predicted", pred), ("truth", true)):
        bad = [k for k in blocks if not 1 <= k <= n_blocks]
        if bad:
            raise ValueError(
                f"{name} block indices {sorted(bad)} outside 1..{n_blocks}"
            )
    tp = len(pred & true)
    fp = len(pred - true)
    fn = len(true - pred)
    tn = n_blocks - tp - fp - fn
    counts = ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    accuracy = (tp + tn) / n_blocks
    return counts, precision, recall, accuracy


def average_scores(scores: Iterable[CropScore]) -> dict[str, float | None]:
    """Unweighted arithmetic means over the crops' defined metric values."""
    scores = list(scores)

    def mean_of(values):
        defined = [v for v in values if v is not None]
        return sum(defined) / len(defined) if defined else None

    return {
        "precision": mean_of(s.precision for s in scores),
        "recall": mean_of(s.recall for s in scores),
        "accuracy": mean_of(s.accuracy for s in scores),
    }


@dataclass(frozen=True)
class DefectSpec:
    """One synthetic defect.

    blob: filled disk of radius `size` at (row, col), intensities shifted
    by `delta` (then clipped to 0..255).
    scratch: 2-pixel-thick horizontal dash starting at (row, col),
    `size` pixels long, shifted by `delta`.
    missing_motif: the periodic cell containing (row, col) is restored to
    the plain background; `size` and `delta` are ignored.
    """

    shape: str
    row: int
    col: int
    size: int = 0
    delta: float = 0.0

    def __post_init__(self):
        if self.shape not in ("blob", "scratch", "missing_motif"):
            raise ValueError(f"unknown defect shape {self.shape!r}")


@dataclass(frozen=True)
class SyntheticSpec:
    """Deterministic recipe for one patterned test image.

    The image is `reps_rows` x `reps_cols` periodic units of `unit` plus
    `margin` extra pattern-continuing pixels on the bottom and right (so
    dimensions need not be unit multiples). `noise` is the half-width of
    the uniform intensity noise; `seed` fixes the noise stream.
    """

    pattern: str
    unit: Periodicity
    reps_rows: int
    reps_cols: int
    margin: int = 0
    noise: float = 0.0
    seed: int = 0
    defects: tuple[DefectSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.pattern not in ("dot", "star", "box"):
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if self.reps_rows < 1 or self.reps_cols < 1:
            raise ValueError(
                f"repetitions must be >= 1, got {self.reps_rows}x{self.reps_cols}"
            )
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")
        if self.noise < 0:
            raise ValueError(f"noise amplitude must be >= 0, got {self.noise}")

    @property
    def height(self) -> int:
        return self.reps_rows * self.unit.rows + self.margin

    @property
    def width(self) -> int:
        return self.reps_cols * self.unit.cols + self.margin


def _motif_tile(pattern: str, unit: Periodicity) -> np.ndarray:
    """Render one periodic unit; features stay inset from the cell edges
    so cell borders are plain background."""
    pr, pc = unit.rows, unit.cols
    tile = np.full((pr, pc), BACKGROUND)
    short = min(pr, pc)
    inset = max(1, short // 4)
    thickness = max(1, short // 10)
    if pattern == "dot":
        radius = max(1.0, short / 2.0 - inset)
        sigma = radius / 2.5
        rr, cc = np.mgrid[0:pr, 0:pc]
        dist2 = (rr - (pr - 1) / 2.0) ** 2 + (cc - (pc - 1) / 2.0) ** 2
        bump = 180.0 * np.exp(-dist2 / (2.0 * sigma * sigma))
        bump[dist2 > radius * radius] = 0.0
        tile += bump
    elif pattern == "star":
        rmid, cmid = pr // 2, pc // 2
        tile[rmid:rmid + thickness, inset:pc - inset] = FOREGROUND
        tile[inset:pr - inset, cmid:cmid + thickness] = FOREGROUND
    else:  # box
        r0, r1 = inset, pr - inset
        c0, c1 = inset, pc - inset
        tile[r0:r1, c0:c1] = FOREGROUND
        hole = tile[r0 + thickness:r1 - thickness, c0 + thickness:c1 - thickness]
        if hole.size:
            hole[:] = BACKGROUND
    return np.clip(tile, 0.0, 255.0)


def _apply_defect(img: np.ndarray, tile_bg: float, unit: Periodicity,
                  defect: DefectSpec) -> np.ndarray:
    """Composite one defect in place; returns the changed-pixel mask."""
    h, w = img.shape
    d = defect
    if not (0 <= d.row < h and 0 <= d.col < w):
        raise ValueError(f"defect at ({d.row}, {d.col}) outside {h}x{w} image")
    before = img.copy()
    if d.shape == "blob":
        r = max(1, d.size)
        if d.row - r < 0 or d.row + r >= h or d.col - r < 0 or d.col + r >= w:
            raise ValueError(
                f"blob of radius {r} at ({d.row}, {d.col}) exceeds {h}x{w} image"
            )
        rr, cc = np.ogrid[-r:r + 1, -r:r + 1]
        disk = rr * rr + cc * cc <= r * r
        window = img[d.row - r:d.row + r + 1, d.col - r:d.col + r + 1]
        window[disk] = np.clip(window[disk] + d.delta, 0.0, 255.0)
    elif d.shape == "scratch":
        length = max(1, d.size)
        if d.row + 2 > h or d.col + length > w:
            raise ValueError(
                f"scratch of length {length} at ({d.row}, {d.col}) exceeds "
                f"{h}x{w} image"
            )
        band = img[d.row:d.row + 2, d.col:d.col + length]
        band[:] = np.clip(band + d.delta, 0.0, 255.0)
    else:  # missing_motif
        r0 = (d.row // unit.rows) * unit.rows
        c0 = (d.col // unit.cols) * unit.cols
        img[r0:r0 + unit.rows, c0:c0 + unit.cols] = tile_bg
    return img != before


def generate_texture(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Render the spec into (image, defect pixel mask).

    The clean canvas is an exact tiling of the motif (the margin simply
    continues the pattern), defects are composited on top, and uniform
    noise in [-noise, +noise] is added last. The mask flags exactly the
    pixels the defect compositing changed; noise never enters it.
    """
    tile = _motif_tile(spec.pattern, spec.unit)
    reps_r = spec.reps_rows + (1 if spec.margin else 0)
    reps_c = spec.reps_cols + (1 if spec.margin else 0)
    img = np.tile(tile, (reps_r, reps_c))[:spec.height, :spec.width].copy()
    defect_mask = np.zeros(img.shape, dtype=bool)
    for defect in spec.defects:
        defect_mask |= _apply_defect(img, BACKGROUND, spec.unit, defect)
    if spec.noise > 0:
        rng = np.random.default_rng(spec.seed)
        img += rng.uniform(-spec.noise, spec.noise, size=img.shape)
        np.clip(img, 0.0, 255.0, out=img)
    return img, defect_mask


def blocks_intersecting(defect_mask, grid: BlockGrid) -> set[int]:
    """Blocks whose rectangle contains at least one defect pixel."""
    mask = np.asarray(defect_mask, dtype=bool)
    out = set()
    for k in range(1, grid.n_blocks + 1):
        r0, c0, r1, c1 = grid.block_rect(k)
        if mask[r0:r1, c0:c1].any():
            out.add(k)
    return out


def ground_truth_blocks(spec: SyntheticSpec, grid: BlockGrid) -> set[int]:
    """Defective blocks of `grid` for the texture `spec` would generate."""
    crop = grid.crop
    if (crop.row_offset + crop.height > spec.height
            or crop.col_offset + crop.width > spec.width):
        raise ValueError(
            f"grid crop exceeds the {spec.height}x{spec.width} synthetic image"
        )
    _, defect_mask = generate_texture(spec)
    return blocks_intersecting(defect_mask, grid)
