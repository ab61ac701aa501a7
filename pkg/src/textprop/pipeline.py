"""End-to-end proposal generation across pyramid levels, channels, and cues."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .features import compute_features
from .grouping import CUES, CueSpace, Dendrogram, build_dendrogram
from .imaging import CHANNEL_KINDS, PYRAMID_LEVELS, RasterChannel, extract_channels, gradient_magnitude
from .ranking import StumpBoostRanker, group_features
from .segmentation import MserParams, extract_regions
from .validation import InvalidInputError, check_rgb_image

DEFAULT_SETTINGS = {
    "levels": ("P0", "P1"),
    "channels": ("R", "G", "B"),
    "cues": ("D", "F", "B", "G", "S"),
    "x_weight": 0.25,
}
PRESETS = {"paper-default": DEFAULT_SETTINGS}


@dataclass(frozen=True)
class Provenance:
    """Where a proposal came from: channel kind, pyramid level, cue, node id."""

    kind: str
    level: str
    cue: str
    node_id: int

    def sort_key(self) -> tuple[int, int, int, int]:
        return (
            PYRAMID_LEVELS.index(self.level),
            CHANNEL_KINDS.index(self.kind),
            CUES.index(self.cue),
            self.node_id,
        )


@dataclass(frozen=True)
class Proposal:
    """A ranked word candidate in original-image coordinates."""

    bbox: tuple[int, int, int, int]  # (x, y, width, height)
    score: float
    provenance: Provenance


class Hierarchy:
    """One scored dendrogram plus the geometry to map it back to the image."""

    def __init__(
        self,
        kind: str,
        level: str,
        cue: str,
        scale_factor: float,
        image_size: tuple[int, int],
        dendrogram: Dendrogram,
    ):
        self.kind = kind
        self.level = level
        self.cue = cue
        self.scale_factor = scale_factor
        self.image_size = image_size  # (width, height) of the original image
        self.dendrogram = dendrogram
        self.scores: np.ndarray | None = None  # per node; NaN where not evaluated

    def node_boxes_original(self) -> np.ndarray:
        """(n_nodes, 4) integer (x, y, w, h) boxes in original coordinates."""
        inv = int(round(1.0 / self.scale_factor))
        iw, ih = self.image_size
        out = np.empty((len(self.dendrogram.nodes), 4), dtype=np.int64)
        for node in self.dendrogram.nodes:
            x0, y0, x1, y1 = node.bbox
            x0, y0, x1, y1 = x0 * inv, y0 * inv, x1 * inv, y1 * inv
            x0, y0 = max(0, min(x0, iw - 1)), max(0, min(y0, ih - 1))
            x1, y1 = max(x0 + 1, min(x1, iw)), max(y0 + 1, min(y1, ih))
            out[node.id] = (x0, y0, x1 - x0, y1 - y0)
        return out


def count_hierarchies(config) -> int:
    """Hierarchy count implied by a configuration: levels x channels x cues."""
    if isinstance(config, dict):
        levels, channels, cues = config["levels"], config["channels"], config["cues"]
    else:
        levels, channels, cues = config.levels, config.channels, config.cues
    return len(levels) * len(channels) * len(cues)


class TextProposer(BaseEstimator):
    """Class-independent word proposer.

    Over-segments every (level, channel) plane into extremal regions, groups
    them by single linkage under each similarity cue, scores every novel
    node with the ranker, and merges all hierarchies into one ranked,
    deduplicated proposal list.

    Args:
        levels: pyramid levels to use, subset of P0/P1/P2.
        channels: channel kinds, subset of R/G/B/I.
        cues: similarity cues, subset of D/F/B/G/S.
        x_weight: weight of the squared horizontal term in the grouping
            distance (1.0 makes grouping rotation-invariant).
        mser_params: extremal-region knobs (None: defaults).
        ranker: fitted StumpBoostRanker; None scores every node 0.
        max_proposals: truncate the ranked list (None: keep everything).
        include_leaves: emit single-region nodes as proposals.
        normalize_features: scale cue/position values by their channel-wide
            range before grouping (off: raw values, the reference behavior).
        n_jobs: worker threads for per-channel work (1: sequential).
    """

    def __init__(
        self,
        levels: tuple[str, ...] = ("P0", "P1"),
        channels: tuple[str, ...] = ("R", "G", "B"),
        cues: tuple[str, ...] = ("D", "F", "B", "G", "S"),
        x_weight: float = 0.25,
        mser_params: MserParams | None = None,
        ranker: StumpBoostRanker | None = None,
        max_proposals: int | None = None,
        include_leaves: bool = True,
        normalize_features: bool = False,
        n_jobs: int = 1,
    ):
        self.levels = levels
        self.channels = channels
        self.cues = cues
        self.x_weight = x_weight
        self.mser_params = mser_params
        self.ranker = ranker
        self.max_proposals = max_proposals
        self.include_leaves = include_leaves
        self.normalize_features = normalize_features
        self.n_jobs = n_jobs

    def _check(self) -> None:
        for name, got, known in (
            ("levels", self.levels, PYRAMID_LEVELS),
            ("channels", self.channels, CHANNEL_KINDS),
            ("cues", self.cues, CUES),
        ):
            bad = [v for v in got if v not in known]
            if bad:
                raise InvalidInputError(f"unknown {name}: {bad}")
            if not got:
                raise InvalidInputError(f"{name} must be non-empty")
        if self.max_proposals is not None and self.max_proposals < 1:
            raise InvalidInputError("max_proposals must be >= 1 or None")

    def _channel_hierarchies(self, channel: RasterChannel, image_size) -> list[Hierarchy]:
        params = self.mser_params or MserParams()
        regions = extract_regions(channel, params)
        out: list[Hierarchy] = []
        if not regions:
            return out
        gradient = gradient_magnitude(channel.values)
        feats = [compute_features(r, channel, gradient) for r in regions]
        for cue in CUES:
            if cue not in self.cues:
                continue
            space = CueSpace(cue=cue, x_weight=self.x_weight, normalize=self.normalize_features)
            dendro = build_dendrogram(regions, feats, space)
            hier = Hierarchy(
                kind=channel.kind,
                level=channel.pyramid_level,
                cue=cue,
                scale_factor=channel.scale_factor,
                image_size=image_size,
                dendrogram=dendro,
            )
            self._score(hier)
            out.append(hier)
        return out

    def _score(self, hier: Hierarchy) -> None:
        nodes = hier.dendrogram.nodes
        scores = np.full(len(nodes), np.nan)
        todo = [n for n in nodes if n.needs_evaluation and (self.include_leaves or not n.is_leaf)]
        if todo:
            if self.ranker is None:
                vals = np.zeros(len(todo))
            else:
                X = np.vstack([group_features(n) for n in todo])
                vals = self.ranker.decision_function(X)
            for node, v in zip(todo, vals):
                scores[node.id] = float(v)
        hier.scores = scores

    def build_hierarchies(self, image) -> list[Hierarchy]:
        """Segment, group, and score; one hierarchy per (level, channel, cue)."""
        self._check()
        arr = check_rgb_image(image)
        image_size = (arr.shape[1], arr.shape[0])
        channels = extract_channels(arr, levels=tuple(self.levels), kinds=tuple(self.channels))
        if self.n_jobs == 1 or len(channels) <= 1:
            parts = [self._channel_hierarchies(ch, image_size) for ch in channels]
        else:
            workers = self.n_jobs if self.n_jobs > 0 else None
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda ch: self._channel_hierarchies(ch, image_size), channels))
        return [h for part in parts for h in part]

    def propose(self, image) -> list[Proposal]:
        """Ranked, deduplicated proposals for one image."""
        return ranked_proposals(self.build_hierarchies(image), self.max_proposals)


def ranked_proposals(hierarchies: list[Hierarchy], max_proposals: int | None = None) -> list[Proposal]:
    """Merge scored hierarchies into one ranked list.

    Exact duplicate boxes keep their highest score; ordering is score
    descending, then (level, kind, cue, node id) of the kept provenance.
    """
    best: dict[tuple[int, int, int, int], Proposal] = {}
    for hier in hierarchies:
        if hier.scores is None:
            raise InvalidInputError("hierarchies must be scored before ranking")
        boxes = hier.node_boxes_original()
        scores = hier.scores
        for node in hier.dendrogram.nodes:
            s = scores[node.id]
            if np.isnan(s):
                continue
            bbox = tuple(int(v) for v in boxes[node.id])
            prov = Provenance(kind=hier.kind, level=hier.level, cue=hier.cue, node_id=node.id)
            cur = best.get(bbox)
            if cur is None or s > cur.score:
                best[bbox] = Proposal(bbox=bbox, score=float(s), provenance=prov)
    ranked = sorted(best.values(), key=lambda p: (-p.score, p.provenance.sort_key()))
    if max_proposals is not None:
        ranked = ranked[:max_proposals]
    return ranked


def write_proposals_csv(path, proposals: list[Proposal]) -> None:
    """CSV with one `score,x,y,width,height` row per proposal."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("score,x,y,width,height\n")
        for p in proposals:
            x, y, w, h = p.bbox
            fh.write(f"{p.score!r},{x},{y},{w},{h}\n")


def read_proposals_csv(path) -> list[Proposal]:
    """Inverse of write_proposals_csv; provenance is a placeholder."""
    from .validation import DataError

    out: list[Proposal] = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "score,x,y,width,height":
        raise DataError(f"{path}: missing proposals header")
    for ln_no, ln in enumerate(lines[1:], start=2):
        if not ln.strip():
            continue
        parts = ln.split(",")
        if len(parts) != 5:
            raise DataError(f"{path}:{ln_no}: expected 5 fields")
        try:
            score = float(parts[0])
            x, y, w, h = (int(v) for v in parts[1:])
        except ValueError as exc:
            raise DataError(f"{path}:{ln_no}: malformed row") from exc
        out.append(
            Proposal(bbox=(x, y, w, h), score=score, provenance=Provenance("R", "P0", "D", 0))
        )
    return out
