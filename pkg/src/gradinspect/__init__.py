"""Defect detection for periodic (patterned) textures.

The pipeline works entirely in gradient space: the per-pixel gradient
magnitude of the input image is cropped from all four corners to whole
periodic units, each crop is split into period-sized blocks, the blocks'
L1 energies are clustered with Ward's method, the minority cluster is
flagged as defective, and the per-crop detections are fused into a single
mask with morphological filling and Canny edge extraction.

Images are plain 2-D float64 numpy arrays throughout; block indices are
1-based and row-major within each crop.
"""

from gradinspect.image_core import GradientField, forward_differences, gradient_space
from gradinspect.periodic_tiling import (
    BlockGrid,
    CropSpec,
    InsufficientPeriodsError,
    Periodicity,
    block_grid,
    extract_block,
    four_crops,
)
from gradinspect.block_features import block_energies
from gradinspect.ward_clustering import (
    TwoClusterCut,
    cut_two_clusters,
    minority_rule,
    ward_linkage,
)
from gradinspect.defect_fusion import (
    CannyParams,
    canny_edges,
    fill_holes,
    fuse,
    overlay,
    rasterize_boundaries,
)
from gradinspect.evaluation import (
    ConfusionCounts,
    CropScore,
    DefectSpec,
    SyntheticSpec,
    average_scores,
    blocks_intersecting,
    generate_texture,
    ground_truth_blocks,
    score_crop,
)

__version__ = "0.1.0"

__all__ = [
    "GradientField",
    "forward_differences",
    "gradient_space",
    "Periodicity",
    "CropSpec",
    "BlockGrid",
    "InsufficientPeriodsError",
    "four_crops",
    "block_grid",
    "extract_block",
    "block_energies",
    "ward_linkage",
    "cut_two_clusters",
    "minority_rule",
    "TwoClusterCut",
    "CannyParams",
    "rasterize_boundaries",
    "fill_holes",
    "canny_edges",
    "fuse",
    "overlay",
    "ConfusionCounts",
    "CropScore",
    "DefectSpec",
    "SyntheticSpec",
    "score_crop",
    "average_scores",
    "ground_truth_blocks",
    "blocks_intersecting",
    "generate_texture",
    "__version__",
]
