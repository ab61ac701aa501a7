"""Recognition-driven word selection over scored hierarchies."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .pipeline import Hierarchy, Proposal
from .validation import InvalidInputError


class Recognizer(Protocol):
    """Anything that can read a word out of an image crop."""

    def recognize(self, image: np.ndarray, bbox: tuple[int, int, int, int]) -> tuple[str, float]:
        """Return (transcription, recognition score) for the given box."""
        ...


@dataclass(frozen=True)
class WordDetection:
    bbox: tuple[int, int, int, int]
    transcription: str
    recognition_score: float


class OracleRecognizer:
    """Mock recognizer backed by ground truth.

    Returns the transcription of the best-overlapping gt box and that
    overlap (IoU) as the recognition score; a crop disjoint from every gt
    scores 0.0.
    """

    def __init__(self, gt_boxes: list[tuple[int, int, int, int]], transcriptions: list[str]):
        if len(gt_boxes) != len(transcriptions):
            raise InvalidInputError("one transcription per gt box required")
        self.gt_boxes = [tuple(int(v) for v in b) for b in gt_boxes]
        self.transcriptions = list(transcriptions)

    def recognize(self, image, bbox) -> tuple[str, float]:
        from .evaluation import iou

        best_text, best_iou = "", 0.0
        for box, text in zip(self.gt_boxes, self.transcriptions):
            v = iou(bbox, box)
            if v > best_iou:
                best_text, best_iou = text, v
        return best_text, best_iou


def select_score_maxima(hierarchy: Hierarchy, node_scores: dict[int, float], tau: float) -> list[int]:
    """Nodes that beat tau, every evaluated descendant (strictly), and every
    evaluated ancestor (non-strictly).

    With equal scores along a root path only the deepest node survives.
    """
    nodes = hierarchy.dendrogram.nodes
    n = len(nodes)
    neg_inf = float("-inf")
    max_desc = np.full(n, neg_inf)
    for node in nodes:  # ids ascending: children come before parents
        if node.children is None:
            continue
        for c in node.children:
            cand = max_desc[c]
            if c in node_scores:
                cand = max(cand, node_scores[c])
            if cand > max_desc[node.id]:
                max_desc[node.id] = cand
    max_anc = np.full(n, neg_inf)
    for node in reversed(nodes):  # ids descending: parents before children
        if node.children is None:
            continue
        top = max_anc[node.id]
        if node.id in node_scores:
            top = max(top, node_scores[node.id])
        for c in node.children:
            max_anc[c] = top
    out = []
    for node_id, score in node_scores.items():
        if score > tau and score > max_desc[node_id] and score >= max_anc[node_id]:
            out.append(node_id)
    return sorted(out)


def spot_words(
    image,
    hierarchies: list[Hierarchy],
    recognizer: Recognizer,
    tau: float = 0.5,
    budget: int = 1000,
    nms_iou: float = 0.5,
) -> list[WordDetection]:
    """End-to-end word spotting over scored hierarchies.

    The recognizer runs once per distinct bbox among the `budget` best-ranked
    proposals; results propagate to every node sharing that bbox. Each
    hierarchy keeps its recognition-score maxima (strict against evaluated
    descendants, non-strict against evaluated ancestors), and a final greedy
    NMS across hierarchies drops any box overlapping a kept one at
    `nms_iou` or above.
    """
    from .evaluation import iou

    if budget < 1:
        raise InvalidInputError("budget must be >= 1")
    if not hierarchies:
        return []
    for hier in hierarchies:
        if hier.scores is None:
            raise InvalidInputError("hierarchies must be scored before spotting")

    # Rank exactly like the proposal pipeline, then recognize the first N.
    from .pipeline import ranked_proposals

    ranked: list[Proposal] = ranked_proposals(hierarchies)
    recognized: dict[tuple[int, int, int, int], tuple[str, float]] = {}
    for prop in ranked[:budget]:
        try:
            text, r_score = recognizer.recognize(image, prop.bbox)
            r_score = float(r_score)
            if not np.isfinite(r_score):
                raise ValueError("non-finite recognition score")
        except Exception:
            text, r_score = "", 0.0
        recognized[prop.bbox] = (text, r_score)

    candidates: dict[tuple[int, int, int, int], tuple[float, str]] = {}
    for hier in hierarchies:
        boxes = hier.node_boxes_original()
        node_scores: dict[int, float] = {}
        node_box: dict[int, tuple[int, int, int, int]] = {}
        for node in hier.dendrogram.nodes:
            bbox = tuple(int(v) for v in boxes[node.id])
            hit = recognized.get(bbox)
            if hit is not None:
                node_scores[node.id] = hit[1]
                node_box[node.id] = bbox
        for node_id in select_score_maxima(hier, node_scores, tau):
            bbox = node_box[node_id]
            r_score = node_scores[node_id]
            text = recognized[bbox][0]
            cur = candidates.get(bbox)
            if cur is None or r_score > cur[0]:
                candidates[bbox] = (r_score, text)

    pool = sorted(candidates.items(), key=lambda kv: (-kv[1][0], kv[0]))
    kept: list[WordDetection] = []
    for bbox, (r_score, text) in pool:
        if all(iou(bbox, k.bbox) < nms_iou for k in kept):
            kept.append(WordDetection(bbox=bbox, transcription=text, recognition_score=r_score))
    return kept


def write_detections_csv(path, detections: list[WordDetection]) -> None:
    """CSV with `x,y,width,height,score,transcription` rows, quoted text."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,y,width,height,score,transcription\n")
        for d in detections:
            x, y, w, h = d.bbox
            text = d.transcription.replace('"', '""')
            fh.write(f'{x},{y},{w},{h},{d.recognition_score!r},"{text}"\n')
