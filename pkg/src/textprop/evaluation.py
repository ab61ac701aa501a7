"""Recall measurement: IoU, curves, dataset IO, rotation, synthetic corpus."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .validation import DataError, InvalidInputError, check_box, check_rgb_image

DIFFICULT_MARK = "###"
DEFAULT_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9)
DEFAULT_N_GRID = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)


def iou(a, b) -> float:
    """Intersection over union of two (x, y, w, h) boxes.

    Boxes are half-open pixel sets: [x, x+w) x [y, y+h); a box without
    pixels (zero or negative extent) overlaps nothing and scores 0.
    """
    try:
        ax, ay, aw, ah = (int(v) for v in a)
        bx, by, bw, bh = (int(v) for v in b)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed box pair {a!r}, {b!r}") from exc
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        return 0.0
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


def boxes_iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """IoU between every row of `a` and every row of `b` ((x, y, w, h) rows)."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    ax0, ay0 = a[:, 0:1], a[:, 1:2]
    ax1, ay1 = ax0 + a[:, 2:3], ay0 + a[:, 3:4]
    bx0, by0 = b[None, :, 0], b[None, :, 1]
    bx1, by1 = bx0 + b[None, :, 2], by0 + b[None, :, 3]
    iw = np.clip(np.minimum(ax1, bx1) - np.maximum(ax0, bx0), 0, None)
    ih = np.clip(np.minimum(ay1, by1) - np.maximum(ay0, by0), 0, None)
    inter = iw * ih
    union = a[:, 2:3] * a[:, 3:4] + b[None, :, 2] * b[None, :, 3] - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(union > 0, inter / union, 0.0)


@dataclass(frozen=True)
class GtBox:
    bbox: tuple[int, int, int, int]
    transcription: str
    difficult: bool = False


@dataclass
class GroundTruth:
    image_id: str
    boxes: list[GtBox] = field(default_factory=list)

    def countable(self) -> list[GtBox]:
        return [b for b in self.boxes if not b.difficult]


@dataclass
class RecallCurve:
    iou_threshold: float
    points: list[tuple[int, float]]  # (n proposals considered, recall)

    def recall_at_n(self, n: int) -> float:
        """Recall at the largest tabulated budget <= n."""
        best = 0.0
        for point_n, recall in self.points:
            if point_n <= n:
                best = recall
        return best

    def max_recall(self) -> float:
        return self.points[-1][1] if self.points else 0.0


def _as_boxes(proposals) -> np.ndarray:
    rows = []
    for p in proposals:
        rows.append(p.bbox if hasattr(p, "bbox") else tuple(p))
    return np.array(rows, dtype=np.float64).reshape(-1, 4)


def _match_ranks(prop_boxes: np.ndarray, gt_boxes: np.ndarray, threshold: float) -> np.ndarray:
    """1-based rank of the first proposal matching each gt (0 = never)."""
    if len(prop_boxes) == 0 or len(gt_boxes) == 0:
        return np.zeros(len(gt_boxes), dtype=np.int64)
    hits = boxes_iou_matrix(prop_boxes, gt_boxes) > threshold  # (n_prop, n_gt)
    any_hit = hits.any(axis=0)
    first = hits.argmax(axis=0) + 1
    return np.where(any_hit, first, 0)


def recall_at(proposals, gt: GroundTruth, iou_threshold: float, n: int | None = None) -> float | None:
    """Fraction of countable gt boxes matched by one of the first n proposals.

    Matching is per-gt existence (IoU strictly above the threshold), not
    one-to-one. Returns None when the image has no countable gt boxes.
    """
    countable = gt.countable()
    if not countable:
        return None
    boxes = _as_boxes(proposals)
    if n is not None:
        boxes = boxes[:n]
    ranks = _match_ranks(boxes, np.array([b.bbox for b in countable], dtype=np.float64), iou_threshold)
    return float(np.count_nonzero(ranks)) / len(countable)


def recall_curves(
    per_image_proposals: list,
    per_image_gts: list[GroundTruth],
    thresholds=DEFAULT_THRESHOLDS,
    n_grid=None,
) -> list[RecallCurve]:
    """Recall as a function of proposal budget, per IoU threshold.

    Dataset-level recall is the macro mean over images that have countable
    gt boxes. The budget grid always includes the largest proposal count so
    the last point is the maximum attainable recall.
    """
    if len(per_image_proposals) != len(per_image_gts):
        raise InvalidInputError("proposals and gts differ in image count")
    max_n = max((len(p) for p in per_image_proposals), default=0)
    grid = sorted(set(int(n) for n in (n_grid or DEFAULT_N_GRID) if int(n) >= 1) | {max(max_n, 1)})

    curves = []
    for thr in thresholds:
        per_image_ranks = []
        for props, gt in zip(per_image_proposals, per_image_gts):
            countable = gt.countable()
            if not countable:
                per_image_ranks.append(None)
                continue
            ranks = _match_ranks(
                _as_boxes(props), np.array([b.bbox for b in countable], dtype=np.float64), thr
            )
            per_image_ranks.append(ranks)
        points = []
        for n in grid:
            vals = [
                float(np.count_nonzero((r > 0) & (r <= n))) / len(r)
                for r in per_image_ranks
                if r is not None and len(r) > 0
            ]
            points.append((n, float(np.mean(vals)) if vals else 0.0))
        curves.append(RecallCurve(iou_threshold=float(thr), points=points))
    return curves


def summary_stats(
    per_image_proposals: list,
    per_image_gts: list[GroundTruth],
    thresholds=DEFAULT_THRESHOLDS,
    runtimes: list[float] | None = None,
) -> dict:
    """Dataset summary: recall per threshold (macro and micro), mean proposal
    count, mean per-image runtime."""
    if len(per_image_proposals) != len(per_image_gts):
        raise InvalidInputError("proposals and gts differ in image count")
    macro: dict[float, float] = {}
    micro: dict[float, float] = {}
    for thr in thresholds:
        per_image = []
        hit_total = 0
        gt_total = 0
        for props, gt in zip(per_image_proposals, per_image_gts):
            r = recall_at(props, gt, thr)
            if r is None:
                continue
            per_image.append(r)
            n_count = len(gt.countable())
            hit_total += round(r * n_count)
            gt_total += n_count
        macro[float(thr)] = float(np.mean(per_image)) if per_image else 0.0
        micro[float(thr)] = (hit_total / gt_total) if gt_total else 0.0
    return {
        "n_images": len(per_image_gts),
        "mean_proposals": float(np.mean([len(p) for p in per_image_proposals])) if per_image_proposals else 0.0,
        "mean_runtime_s": float(np.mean(runtimes)) if runtimes else 0.0,
        "macro": macro,
        "micro": micro,
        "thresholds": [float(t) for t in thresholds],
    }


def write_curves_csv(path, curves: list[RecallCurve]) -> None:
    """CSV with `iou,n,recall` rows, one per tabulated point."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iou,n,recall\n")
        for curve in curves:
            for n, recall in curve.points:
                fh.write(f"{curve.iou_threshold!r},{n},{recall!r}\n")


def write_summary_csv(path, summary: dict) -> None:
    """Two-row (macro/micro) dataset summary table."""
    thresholds = summary["thresholds"]
    cols = ["aggregation", "n_images", "mean_proposals", "mean_runtime_s"]
    cols += [f"recall_{t:g}" for t in thresholds]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for agg in ("macro", "micro"):
            row = [
                agg,
                str(summary["n_images"]),
                repr(summary["mean_proposals"]),
                f"{summary['mean_runtime_s']:.6f}",
            ]
            row += [repr(summary[agg][t]) for t in thresholds]
            fh.write(",".join(row) + "\n")


def load_ground_truth(path, fmt: str = "plain", image_id: str | None = None) -> GroundTruth:
    """Parse a gt file: `x,y,width,height,"transcription"` lines.

    `fmt="icdar13"` reads `x1,y1,x2,y2,"transcription"` corner boxes instead.
    A transcription of ### marks the box difficult (excluded from recall
    denominators).
    """
    if fmt not in ("plain", "icdar13"):
        raise InvalidInputError(f"unknown gt format {fmt!r}")
    path = Path(path)
    boxes: list[GtBox] = []
    with open(path, "r", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh, skipinitialspace=True)
        for ln_no, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 5:
                raise DataError(f"{path}:{ln_no}: expected 5 fields, got {len(row)}")
            try:
                a, b, c, d = (int(float(v.strip())) for v in row[:4])
            except ValueError as exc:
                raise DataError(f"{path}:{ln_no}: malformed coordinates") from exc
            text = ",".join(row[4:]).strip()
            if fmt == "icdar13":
                box = (a, b, c - a, d - b)
            else:
                box = (a, b, c, d)
            if box[2] <= 0 or box[3] <= 0:
                raise DataError(f"{path}:{ln_no}: box has non-positive extent")
            boxes.append(GtBox(bbox=box, transcription=text, difficult=text == DIFFICULT_MARK))
    return GroundTruth(image_id=image_id or path.stem, boxes=boxes)


@dataclass
class DatasetItem:
    image_path: Path
    gt: GroundTruth


def load_dataset(root, fmt: str = "plain") -> list[DatasetItem]:
    """Directory layout: <root>/images/<id>.<ext> plus <root>/gt/<id>.txt."""
    root = Path(root)
    img_dir, gt_dir = root / "images", root / "gt"
    if not img_dir.is_dir() or not gt_dir.is_dir():
        raise FileNotFoundError(f"{root}: expected images/ and gt/ subdirectories")
    items = []
    for img_path in sorted(img_dir.iterdir()):
        if img_path.suffix.lower() not in (".png", ".jpg", ".jpeg", ".bmp"):
            continue
        gt_path = gt_dir / (img_path.stem + ".txt")
        if not gt_path.is_file():
            raise FileNotFoundError(f"{gt_path}: missing gt for {img_path.name}")
        items.append(DatasetItem(image_path=img_path, gt=load_ground_truth(gt_path, fmt=fmt)))
    if not items:
        raise DataError(f"{root}: dataset has no images")
    return items


def read_image(path) -> np.ndarray:
    """Decode an image file to an RGB uint8 array."""
    raw = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if raw is None:
        raise OSError(f"{path}: cannot decode image")
    return cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)


def write_image(path, image: np.ndarray) -> None:
    if not cv2.imwrite(str(path), cv2.cvtColor(check_rgb_image(image), cv2.COLOR_RGB2BGR)):
        raise OSError(f"{path}: cannot encode image")


# --- rotation -------------------------------------------------------------

def _rotation_geometry(width: int, height: int, degrees: float):
    rad = math.radians(degrees)
    c, s = math.cos(rad), math.sin(rad)
    new_w = math.ceil(abs(c) * width + abs(s) * height - 1e-9)
    new_h = math.ceil(abs(s) * width + abs(c) * height - 1e-9)
    return c, s, new_w, new_h


def rotate_image(image: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate about the image center onto an enclosing canvas.

    Bilinear sampling, constant black outside the source. Continuous pixel
    coordinates keep 90-degree multiples exact.
    """
    arr = check_rgb_image(image)
    h, w = arr.shape[:2]
    c, s, new_w, new_h = _rotation_geometry(w, h, degrees)
    cx, cy = w / 2.0 - 0.5, h / 2.0 - 0.5
    cx2, cy2 = new_w / 2.0 - 0.5, new_h / 2.0 - 0.5
    m = np.array(
        [
            [c, -s, cx2 - c * cx + s * cy],
            [s, c, cy2 - s * cx - c * cy],
        ],
        dtype=np.float64,
    )
    return cv2.warpAffine(
        arr,
        m,
        (new_w, new_h),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=(0, 0, 0),
    )


def rotate_box(box, width: int, height: int, degrees: float) -> tuple[np.ndarray, tuple[int, int, int, int]]:
    """Rotate a gt box with its image; returns (quad corners, enclosing box).

    The quad is the rotated rectangle in continuous coordinates; the box is
    its integer axis-aligned enclosure clipped to the rotated canvas.
    """
    x, y, w, h = check_box(box)
    c, s, new_w, new_h = _rotation_geometry(width, height, degrees)
    cx, cy = width / 2.0, height / 2.0
    cx2, cy2 = new_w / 2.0, new_h / 2.0
    corners = np.array(
        [[x, y], [x + w, y], [x + w, y + h], [x, y + h]], dtype=np.float64
    )
    dx, dy = corners[:, 0] - cx, corners[:, 1] - cy
    quad = np.column_stack([c * dx - s * dy + cx2, s * dx + c * dy + cy2])
    eps = 1e-9
    x0 = max(0, int(math.floor(quad[:, 0].min() + eps)))
    y0 = max(0, int(math.floor(quad[:, 1].min() + eps)))
    x1 = min(new_w, int(math.ceil(quad[:, 0].max() - eps)))
    y1 = min(new_h, int(math.ceil(quad[:, 1].max() - eps)))
    x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
    return quad, (x0, y0, x1 - x0, y1 - y0)


def rotate_item(image: np.ndarray, gt: GroundTruth, degrees: float) -> tuple[np.ndarray, GroundTruth]:
    """Rotate one dataset item; gt boxes become enclosing boxes of the
    rotated quads."""
    arr = check_rgb_image(image)
    h, w = arr.shape[:2]
    rotated = rotate_image(arr, degrees)
    boxes = [
        GtBox(
            bbox=rotate_box(b.bbox, w, h, degrees)[1],
            transcription=b.transcription,
            difficult=b.difficult,
        )
        for b in gt.boxes
    ]
    return rotated, GroundTruth(image_id=f"{gt.image_id}_rot{degrees:g}", boxes=boxes)


# --- synthetic corpus ------------------------------------------------------

# 5x7 block glyphs; every glyph is 4-connected and spans its full cell
_FONT = {
    "A": ("#####", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "B": ("####.", "#..#.", "####.", "#...#", "#...#", "#...#", "#####"),
    "C": ("#####", "#....", "#....", "#....", "#....", "#....", "#####"),
    "D": ("####.", "#..#.", "#..#.", "#..#.", "#..#.", "#..#.", "####."),
    "E": ("#####", "#....", "#....", "#####", "#....", "#....", "#####"),
    "F": ("#####", "#....", "#....", "#####", "#....", "#....", "#...."),
    "H": ("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "I": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "#####"),
    "J": ("....#", "....#", "....#", "....#", "#...#", "#...#", "#####"),
    "L": ("#....", "#....", "#....", "#....", "#....", "#....", "#####"),
    "O": ("#####", "#...#", "#...#", "#...#", "#...#", "#...#", "#####"),
    "P": ("#####", "#...#", "#...#", "#####", "#....", "#....", "#...."),
    "T": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),
    "U": ("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", "#####"),
    "Y": ("#...#", "#...#", "#####", "..#..", "..#..", "..#..", "..#.."),
}
_LETTERS = "".join(sorted(_FONT))


def _glyph_grid(letter: str) -> np.ndarray:
    return np.array([[ch == "#" for ch in row] for row in _FONT[letter]], dtype=bool)


def _render_word(word: str, scale: int) -> np.ndarray:
    """Boolean stamp of a word: glyphs side by side, one-cell gaps."""
    cells = [_glyph_grid(ch) for ch in word]
    gap = np.zeros((7, 1), dtype=bool)
    strip: list[np.ndarray] = []
    for i, cell in enumerate(cells):
        if i:
            strip.append(gap)
        strip.append(cell)
    grid = np.concatenate(strip, axis=1)
    return np.kron(grid, np.ones((scale, scale), dtype=bool))


def _boxes_gap(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    dx = max(bx - (ax + aw), ax - (bx + bw), 0)
    dy = max(by - (ay + ah), ay - (by + bh), 0)
    return math.hypot(dx, dy)


def synth_corpus(
    seed: int,
    n_images: int = 50,
    words_per_image: tuple[int, int] = (3, 8),
    size: tuple[int, int] = (640, 480),
    min_gap: int = 60,
) -> list[tuple[np.ndarray, GroundTruth]]:
    """Deterministic synthetic word images with tight ground truth.

    Uniform background, uniform-intensity block-letter words (contrast at
    least 60 levels), word boxes pairwise at least `min_gap` pixels apart.
    The same seed always yields byte-identical images and gt.
    """
    if n_images < 1:
        raise InvalidInputError("n_images must be >= 1")
    lo, hi = words_per_image
    if not 1 <= lo <= hi:
        raise InvalidInputError("words_per_image must be an increasing pair >= 1")
    width, height = size
    if width < 120 or height < 120:
        raise InvalidInputError("synthetic images must be at least 120x120")

    corpus = []
    for idx in range(n_images):
        rng = np.random.default_rng([int(seed), idx])
        bg = int(rng.integers(70, 166))
        canvas = np.full((height, width), bg, dtype=np.uint8)
        placed: list[tuple[int, int, int, int]] = []
        boxes: list[GtBox] = []
        n_words = int(rng.integers(lo, hi + 1))
        for _ in range(n_words):
            length = int(rng.integers(2, 7))
            word = "".join(_LETTERS[i] for i in rng.integers(0, len(_LETTERS), size=length))
            scale = int(rng.integers(2, 6))
            stamp = _render_word(word, scale)
            sh, sw = stamp.shape
            if sw > width - 20 or sh > height - 20:
                continue
            sign = 1 if rng.integers(0, 2) else -1
            mag = int(rng.integers(60, 91))
            ink = int(np.clip(bg + sign * mag, 0, 255))
            for _ in range(200):
                x = int(rng.integers(10, width - sw - 9))
                y = int(rng.integers(10, height - sh - 9))
                cand = (x, y, sw, sh)
                if all(_boxes_gap(cand, p) >= min_gap for p in placed):
                    canvas[y : y + sh, x : x + sw][stamp] = ink
                    placed.append(cand)
                    ys, xs = np.nonzero(stamp)
                    tight = (
                        x + int(xs.min()),
                        y + int(ys.min()),
                        int(xs.max() - xs.min()) + 1,
                        int(ys.max() - ys.min()) + 1,
                    )
                    boxes.append(GtBox(bbox=tight, transcription=word, difficult=False))
                    break
        image = np.stack([canvas, canvas, canvas], axis=-1)
        corpus.append((image, GroundTruth(image_id=f"img_{idx:03d}", boxes=boxes)))
    return corpus


def write_corpus(out_dir, corpus: list[tuple[np.ndarray, GroundTruth]]) -> None:
    """Write images/ and gt/ for a corpus in the plain dataset layout."""
    out_dir = Path(out_dir)
    img_dir, gt_dir = out_dir / "images", out_dir / "gt"
    img_dir.mkdir(parents=True, exist_ok=True)
    gt_dir.mkdir(parents=True, exist_ok=True)
    for image, gt in corpus:
        write_image(img_dir / f"{gt.image_id}.png", image)
        with open(gt_dir / f"{gt.image_id}.txt", "w", encoding="utf-8", newline="") as fh:
            for b in gt.boxes:
                x, y, w, h = b.bbox
                text = b.transcription.replace('"', '""')
                fh.write(f'{x},{y},{w},{h},"{text}"\n')
