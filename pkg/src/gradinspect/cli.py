"""Command-line interface: inspect, evaluate, and synth subcommands.

Orchestrates the whole pipeline (gradient space, four-corner crops,
block energies, Ward clustering, minority rule, fusion, overlay), scores
predictions against ground truth, and generates synthetic test textures.

File formats: 8-bit binary PGM (P5) is always supported; PNG is handled
through Pillow with RGB converted by the 0.299/0.587/0.114 luminance
weights. Reports are JSON. Output files are written to a temporary name
and renamed into place, so failures never leave partial artifacts.

Exit codes: 0 success, 2 bad arguments, 3 unreadable or undecodable
image, 4 too few periodic units for the given periods, 5 malformed truth
or synthesis spec file. The four per-crop analyses run in a small thread
pool capped by the GI_THREADS environment variable (0 or unset = auto);
results are joined in a fixed corner order, so outputs do not depend on
the thread count.
"""

import argparse
import dataclasses
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from gradinspect import __version__
from gradinspect.block_features import block_energies
from gradinspect.defect_fusion import CannyParams, fuse, overlay
from gradinspect.evaluation import (
    CropScore,
    DefectSpec,
    SyntheticSpec,
    average_scores,
    blocks_intersecting,
    generate_texture,
    score_crop,
)
from gradinspect.image_core import gradient_space
from gradinspect.periodic_tiling import (
    CORNERS,
    BlockGrid,
    InsufficientPeriodsError,
    Periodicity,
    block_grid,
    four_crops,
)
from gradinspect.ward_clustering import (
    TwoClusterCut,
    cut_two_clusters,
    minority_rule,
    ward_linkage,
)

EXIT_USAGE = 2
EXIT_IMAGE = 3
EXIT_ASSUMPTION = 4
EXIT_FORMAT = 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# raster I/O


def _read_pgm_bytes(data: bytes) -> np.ndarray:
    tokens = []
    i = 0
    while len(tokens) < 4:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if i < len(data) and data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace():
            i += 1
        if start == i:
            raise ValueError("truncated PGM header")
        tokens.append(data[start:i])
    if tokens[0] != b"P5":
        raise ValueError(f"not a binary PGM (magic {tokens[0]!r}, expected P5)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ValueError("non-numeric PGM header fields") from None
    if width < 1 or height < 1:
        raise ValueError(f"bad PGM dimensions {width}x{height}")
    if not 0 < maxval < 256:
        raise ValueError(f"only 8-bit PGM supported (maxval {maxval})")
    i += 1  # single whitespace byte after maxval
    raster = data[i:i + width * height]
    if len(raster) != width * height:
        raise ValueError(
            f"PGM raster truncated: {len(raster)} of {width * height} bytes"
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).astype(np.float64)


def _encode_pgm(img: np.ndarray) -> bytes:
    data = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    h, w = data.shape
    return b"P5\n%d %d\n255\n" % (w, h) + data.tobytes()


def _encode_png(img: np.ndarray) -> bytes:
    from PIL import Image

    data = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(data, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def read_image(path: str) -> np.ndarray:
    """Decode a grayscale image, promoting to float64."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise CliError(EXIT_IMAGE, f"cannot read {path}: {exc}") from exc
    lower = path.lower()
    try:
        if lower.endswith(".pgm"):
            return _read_pgm_bytes(data)
        if lower.endswith(".png"):
            from PIL import Image

            img = Image.open(io.BytesIO(data))
            if img.mode not in ("L", "I;16", "I"):
                img = img.convert("RGB").convert("L")  # ITU-R 601-2 weights
            elif img.mode != "L":
                img = img.convert("L")
            return np.asarray(img, dtype=np.float64)
        raise ValueError("unsupported extension (use .pgm or .png)")
    except CliError:
        raise
    except Exception as exc:
        raise CliError(EXIT_IMAGE, f"cannot decode {path}: {exc}") from exc


def _atomic_write(path: str, data: bytes) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise CliError(EXIT_USAGE, f"cannot write {path}: {exc}") from exc


def encode_image(path: str, img: np.ndarray) -> bytes:
    if path.lower().endswith(".png"):
        return _encode_png(img)
    return _encode_pgm(img)


# ---------------------------------------------------------------------------
# pipeline


@dataclass(frozen=True)
class InspectConfig:
    """User-facing pipeline knobs."""

    unit: Periodicity
    canny: CannyParams = CannyParams()
    tau: float = 0.0


@dataclass(frozen=True)
class CropAnalysis:
    grid: BlockGrid
    energies: np.ndarray
    linkage: np.ndarray
    cut: TwoClusterCut


@dataclass(frozen=True)
class InspectionResult:
    config: InspectConfig
    height: int
    width: int
    crops: list[CropAnalysis]
    filled: np.ndarray
    edges: np.ndarray
    overlay_image: np.ndarray


def _worker_count() -> int:
    raw = os.environ.get("GI_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        n = min(4, os.cpu_count() or 1)
    return n


def run_inspection(img: np.ndarray, config: InspectConfig) -> InspectionResult:
    """Full pipeline over a decoded grayscale image."""
    height, width = img.shape
    g = gradient_space(img)
    crops = four_crops(height, width, config.unit)

    def analyze(crop) -> CropAnalysis:
        grid = block_grid(crop, config.unit)
        energies = block_energies(g, grid)
        linkage = ward_linkage(energies)
        cut = minority_rule(cut_two_clusters(linkage), energies, tau=config.tau)
        return CropAnalysis(grid=grid, energies=energies, linkage=linkage, cut=cut)

    workers = _worker_count()
    if workers == 1:
        analyses = [analyze(c) for c in crops]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            analyses = list(pool.map(analyze, crops))

    filled, edges = fuse(
        [a.cut.defective_blocks for a in analyses],
        [a.grid for a in analyses],
        height,
        width,
        config.canny,
    )
    return InspectionResult(
        config=config,
        height=height,
        width=width,
        crops=analyses,
        filled=filled,
        edges=edges,
        overlay_image=overlay(img, edges),
    )


def inspection_report(source: str, result: InspectionResult) -> dict:
    cfg = result.config
    return {
        "tool": {"name": "gradinspect", "version": __version__},
        "input": {"path": source, "height": result.height, "width": result.width},
        "parameters": {
            "period_rows": cfg.unit.rows,
            "period_cols": cfg.unit.cols,
            "canny_sigma": cfg.canny.sigma,
            "canny_high_pct": cfg.canny.high_percentile,
            "canny_low_ratio": cfg.canny.low_ratio,
            "tau": cfg.tau,
        },
        "crops": [
            {
                "corner": a.grid.crop.corner,
                "row_offset": a.grid.crop.row_offset,
                "col_offset": a.grid.crop.col_offset,
                "height": a.grid.crop.height,
                "width": a.grid.crop.width,
                "block_rows": a.grid.block_rows,
                "block_cols": a.grid.block_cols,
                "n_blocks": a.grid.n_blocks,
                "defective_cluster": a.cut.defective_cluster,
                "defective_blocks": list(a.cut.defective_blocks),
                "ambiguous": a.cut.ambiguous,
                "linkage": [
                    [int(row[0]), int(row[1]), float(row[2])] for row in a.linkage
                ],
            }
            for a in result.crops
        ],
        "fusion": {
            "filled_pixels": int(result.filled.sum()),
            "edge_pixels": int(result.edges.sum()),
        },
    }


def _report_bytes(report: dict) -> bytes:
    return (json.dumps(report, indent=2) + "\n").encode()


# ---------------------------------------------------------------------------
# truth and synthesis spec files


def _load_truth(path: str, grids: list[BlockGrid]) -> dict[str, set[int]]:
    """Per-corner defective block sets, from a block list or a pixel mask."""
    if path.lower().endswith((".pgm", ".png")):
        mask = read_image(path) > 0
        return {g.crop.corner: blocks_intersecting(mask, g) for g in grids}
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_FORMAT, f"cannot read truth file {path}: {exc}") from exc
    by_corner = {g.crop.corner: g for g in grids}
    truth: dict[str, set[int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise CliError(EXIT_FORMAT, f"{path}:{lineno}: expected 'corner: indices'")
        corner, _, rest = line.partition(":")
        corner = corner.strip()
        if corner not in by_corner:
            raise CliError(EXIT_FORMAT, f"{path}:{lineno}: unknown corner {corner!r}")
        if corner in truth:
            raise CliError(EXIT_FORMAT, f"{path}:{lineno}: duplicate corner {corner!r}")
        try:
            blocks = {int(tok) for tok in rest.split()}
        except ValueError:
            raise CliError(
                EXIT_FORMAT, f"{path}:{lineno}: non-integer block index"
            ) from None
        n = by_corner[corner].n_blocks
        bad = sorted(k for k in blocks if not 1 <= k <= n)
        if bad:
            raise CliError(
                EXIT_FORMAT,
                f"{path}:{lineno}: block indices {bad} outside 1..{n} (1-based)",
            )
        truth[corner] = blocks
    missing = [c for c in by_corner if c not in truth]
    if missing:
        raise CliError(EXIT_FORMAT, f"{path}: missing corner lines for {missing}")
    return truth


def _truth_bytes(truth: dict[str, set[int]]) -> bytes:
    lines = ["# defective blocks per crop (1-based, row-major)"]
    for corner in CORNERS:
        blocks = " ".join(str(k) for k in sorted(truth.get(corner, set())))
        lines.append(f"{corner}: {blocks}".rstrip())
    return ("\n".join(lines) + "\n").encode()


_SYNTH_KEYS = {
    "pattern", "period_rows", "period_cols", "reps_rows", "reps_cols",
    "margin", "noise", "seed",
}


def _parse_synth_spec(text: str, path: str) -> SyntheticSpec:
    """Parse the plain key/value synthesis document (see README)."""
    fields: dict[str, str] = {}
    defects: list[DefectSpec] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        key, found, value = line.partition(sep)
        if not found:
            raise ValueError(f"{path}:{lineno}: expected 'key {sep} value'")
        key = key.strip().lower().replace("-", "_")
        value = value.strip()
        if key == "defect":
            parts = value.split()
            if not parts:
                raise ValueError(f"{path}:{lineno}: empty defect")
            shape = parts[0].lower().replace("-", "_")
            try:
                nums = [float(tok) for tok in parts[1:]]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric defect field") from None
            if shape == "missing_motif":
                if len(nums) != 2:
                    raise ValueError(
                        f"{path}:{lineno}: missing-motif takes 'row col'"
                    )
                defects.append(DefectSpec(shape, int(nums[0]), int(nums[1])))
            elif shape in ("blob", "scratch"):
                if len(nums) != 4:
                    raise ValueError(
                        f"{path}:{lineno}: {shape} takes 'row col size delta'"
                    )
                defects.append(
                    DefectSpec(shape, int(nums[0]), int(nums[1]), int(nums[2]), nums[3])
                )
            else:
                raise ValueError(f"{path}:{lineno}: unknown defect shape {shape!r}")
        elif key in _SYNTH_KEYS:
            fields[key] = value
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    required = ("pattern", "period_rows", "period_cols", "reps_rows", "reps_cols")
    missing = [k for k in required if k not in fields]
    if missing:
        raise ValueError(f"{path}: missing required keys {missing}")
    try:
        return SyntheticSpec(
            pattern=fields["pattern"].lower(),
            unit=Periodicity(int(fields["period_rows"]), int(fields["period_cols"])),
            reps_rows=int(fields["reps_rows"]),
            reps_cols=int(fields["reps_cols"]),
            margin=int(fields.get("margin", "0")),
            noise=float(fields.get("noise", "0")),
            seed=int(fields.get("seed", "0")),
            defects=tuple(defects),
        )
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# subcommands


def _run_checked(img: np.ndarray, config: InspectConfig) -> InspectionResult:
    try:
        return run_inspection(img, config)
    except InsufficientPeriodsError as exc:
        raise CliError(EXIT_ASSUMPTION, str(exc)) from exc
    except ValueError as exc:
        # e.g. the smoothing kernel for --canny-sigma exceeds the image
        raise CliError(EXIT_USAGE, str(exc)) from exc


def _pct(value: float | None) -> float | None:
    return None if value is None else round(value * 100.0, 1)


def _pct_text(value: float | None) -> str:
    return "n/a" if value is None else f"{_pct(value):.1f}"


def _cmd_inspect(args) -> int:
    t0 = time.perf_counter()
    img = read_image(args.input)
    config = InspectConfig(
        unit=Periodicity(args.period_rows, args.period_cols),
        canny=CannyParams(args.canny_sigma, args.canny_high_pct, args.canny_low_ratio),
        tau=args.tau,
    )
    result = _run_checked(img, config)

    outputs: list[tuple[str, bytes]] = []
    if args.out_mask:
        outputs.append((args.out_mask, encode_image(args.out_mask, result.filled * 255.0)))
    if args.out_edges:
        outputs.append((args.out_edges, encode_image(args.out_edges, result.edges * 255.0)))
    if args.out_overlay:
        outputs.append((args.out_overlay, encode_image(args.out_overlay, result.overlay_image)))
    if args.report:
        outputs.append((args.report, _report_bytes(inspection_report(args.input, result))))
    for path, data in outputs:
        _atomic_write(path, data)

    for a in result.crops:
        blocks = ", ".join(str(k) for k in a.cut.defective_blocks) or "-"
        print(f"{a.grid.crop.corner:<13} {a.grid.n_blocks:>4} blocks  defective: {blocks}")
    print(
        f"fused: {int(result.filled.sum())} filled / {int(result.edges.sum())} edge pixels"
    )
    print(f"[gradinspect] inspect took {time.perf_counter() - t0:.3f}s", file=sys.stderr)
    return 0


def _cmd_evaluate(args) -> int:
    img = read_image(args.input)
    config = InspectConfig(
        unit=Periodicity(args.period_rows, args.period_cols),
        canny=CannyParams(args.canny_sigma, args.canny_high_pct, args.canny_low_ratio),
        tau=args.tau,
    )
    result = _run_checked(img, config)

    truth = _load_truth(args.truth, [a.grid for a in result.crops])
    scores = []
    for a in result.crops:
        corner = a.grid.crop.corner
        counts, precision, recall, accuracy = score_crop(
            a.cut.defective_blocks, truth[corner], a.grid.n_blocks
        )
        scores.append(CropScore(corner, counts, precision, recall, accuracy))
    averaged = average_scores(scores)

    header = (
        f"{'corner':<13} {'blocks':>6} {'TP':>4} {'TN':>4} {'FP':>4} {'FN':>4}"
        f" {'precision%':>11} {'recall%':>8} {'accuracy%':>10}"
    )
    print(header)
    for s in scores:
        c = s.counts
        print(
            f"{s.corner:<13} {c.total:>6} {c.tp:>4} {c.tn:>4} {c.fp:>4} {c.fn:>4}"
            f" {_pct_text(s.precision):>11} {_pct_text(s.recall):>8}"
            f" {_pct_text(s.accuracy):>10}"
        )
    print(
        f"{'average':<13} {'':>6} {'':>4} {'':>4} {'':>4} {'':>4}"
        f" {_pct_text(averaged['precision']):>11}"
        f" {_pct_text(averaged['recall']):>8}"
        f" {_pct_text(averaged['accuracy']):>10}"
    )

    if args.report:
        report = inspection_report(args.input, result)
        report["evaluation"] = {
            "truth": args.truth,
            "per_crop": [
                {
                    "corner": s.corner,
                    "n_blocks": s.counts.total,
                    "tp": s.counts.tp,
                    "tn": s.counts.tn,
                    "fp": s.counts.fp,
                    "fn": s.counts.fn,
                    "precision_pct": _pct(s.precision),
                    "recall_pct": _pct(s.recall),
                    "accuracy_pct": _pct(s.accuracy),
                }
                for s in scores
            ],
            "averaged": {
                "precision_pct": _pct(averaged["precision"]),
                "recall_pct": _pct(averaged["recall"]),
                "accuracy_pct": _pct(averaged["accuracy"]),
            },
        }
        _atomic_write(args.report, _report_bytes(report))
    return 0


def _cmd_synth(args) -> int:
    try:
        with open(args.spec, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_FORMAT, f"cannot read spec {args.spec}: {exc}") from exc
    try:
        spec = _parse_synth_spec(text, args.spec)
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed)
        img, defect_mask = generate_texture(spec)
        crops = four_crops(spec.height, spec.width, spec.unit)
    except (ValueError, InsufficientPeriodsError) as exc:
        raise CliError(EXIT_FORMAT, f"bad synthesis spec: {exc}") from exc
    grids = [block_grid(c, spec.unit) for c in crops]
    truth = {g.crop.corner: blocks_intersecting(defect_mask, g) for g in grids}

    outputs = [
        (args.out_image, encode_image(args.out_image, img)),
        (args.out_mask, encode_image(args.out_mask, defect_mask * 255.0)),
        (args.out_truth, _truth_bytes(truth)),
    ]
    for path, data in outputs:
        _atomic_write(path, data)
    total = sum(len(v) for v in truth.values())
    print(f"wrote {spec.height}x{spec.width} {spec.pattern} texture, "
          f"{total} defective block entries across 4 crops")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _ratio_float(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {value}")
    return value


def _percentile_float(text: str) -> float:
    value = float(text)
    if not 0 < value <= 100:
        raise argparse.ArgumentTypeError(f"must be in (0, 100], got {value}")
    return value


def _add_pipeline_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--input", required=True, help="input image (.pgm or .png)")
    sub.add_argument("--period-rows", required=True, type=_positive_int,
                     help="rows per periodic unit")
    sub.add_argument("--period-cols", required=True, type=_positive_int,
                     help="columns per periodic unit")
    sub.add_argument("--canny-sigma", type=_positive_float, default=1.4,
                     help="Gaussian sigma for edge extraction (default 1.4)")
    sub.add_argument("--canny-high-pct", type=_percentile_float, default=90.0,
                     help="high-threshold percentile of nonzero magnitudes (default 90)")
    sub.add_argument("--canny-low-ratio", type=_ratio_float, default=0.4,
                     help="low threshold as a fraction of the high one (default 0.4)")
    sub.add_argument("--tau", type=_nonneg_float, default=0.0,
                     help="defect-free guard ratio; 0 disables (default 0)")
    sub.add_argument("--report", help="write a JSON report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradinspect",
        description="Detect defects in periodic textures via gradient-space "
                    "block energies and Ward clustering.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)

    inspect = subparsers.add_parser("inspect", help="run the detection pipeline")
    _add_pipeline_args(inspect)
    inspect.add_argument("--out-mask", help="write the filled defect mask here")
    inspect.add_argument("--out-edges", help="write the defect edge mask here")
    inspect.add_argument("--out-overlay", help="write edges burned into the input here")
    inspect.set_defaults(func=_cmd_inspect)

    evaluate = subparsers.add_parser(
        "evaluate", help="run the pipeline and score it against ground truth"
    )
    _add_pipeline_args(evaluate)
    evaluate.add_argument("--truth", required=True,
                          help="block-list text file or defect pixel mask image")
    evaluate.set_defaults(func=_cmd_evaluate)

    synth = subparsers.add_parser("synth", help="generate a synthetic test texture")
    synth.add_argument("--spec", required=True, help="synthesis spec document")
    synth.add_argument("--seed", type=int, default=None,
                       help="override the spec's noise seed")
    synth.add_argument("--out-image", required=True, help="write the texture here")
    synth.add_argument("--out-mask", required=True,
                       help="write the defect pixel mask here")
    synth.add_argument("--out-truth", required=True,
                       help="write per-crop defective block lists here")
    synth.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"gradinspect: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
