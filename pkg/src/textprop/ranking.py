"""Group-level features and the boosted proposal-ranking model."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .evaluation import boxes_iou_matrix
from .grouping import DendroNode, Dendrogram
from .validation import DataError, InvalidInputError

GROUP_FEATURE_NAMES = (
    "cov_intensity_fg",
    "cov_intensity_bg",
    "cov_gradient_border",
    "cov_stroke_width",
    "cov_diameter",
    "bbox_area_ratio",
    "bbox_width_ratio",
    "bbox_height_ratio",
    "bbox_x_diff_ratio",
    "bbox_y_diff_ratio",
)
N_GROUP_FEATURES = len(GROUP_FEATURE_NAMES)
MODEL_MAGIC = "textprop-ranker"
MODEL_VERSION = "v1"


def group_features(node: DendroNode) -> np.ndarray:
    """12-entry-style descriptor of a node, realized as 10 finite reals.

    First five: coefficient of variation (population sigma over mean, 0 when
    the mean is 0) of each region feature. Last five: shape ratios between
    the union bbox of member regions and the tight bbox of member centers.
    """
    mu = node.sums / node.count
    var = node.sumsqs / node.count - mu * mu
    sigma = np.sqrt(np.maximum(var, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        cov = np.where(mu != 0.0, sigma / mu, 0.0)

    gx0, gy0, gx1, gy1 = (float(v) for v in node.bbox)
    cx0, cy0, cx1, cy1 = node.center_box
    gw, gh = gx1 - gx0, gy1 - gy0
    cw, ch = cx1 - cx0, cy1 - cy0

    def ratio(num: float, den: float) -> float:
        return num / den if den > 0 else 0.0

    bbox = np.array(
        [
            ratio(cw * ch, gw * gh),
            ratio(cw, gw),
            ratio(ch, gh),
            ratio(cx0 - gx0, gx1 - cx1),
            ratio(cy0 - gy0, gy1 - cy1),
        ],
        dtype=np.float64,
    )
    out = np.concatenate([cov, bbox])
    if not np.all(np.isfinite(out)):
        raise InvalidInputError("group features must be finite")
    return out


@dataclass(frozen=True)
class TrainingSample:
    features: np.ndarray
    label: int  # +1 text group, -1 background
    best_iou: float


class TrainingSet:
    """Columnar bag of mined samples; indexes like a list of TrainingSample."""

    def __init__(self, features: np.ndarray, labels: np.ndarray, best_ious: np.ndarray):
        self.features = np.asarray(features, dtype=np.float64).reshape(-1, N_GROUP_FEATURES)
        self.labels = np.asarray(labels, dtype=np.int64).ravel()
        self.best_ious = np.asarray(best_ious, dtype=np.float64).ravel()
        if not (len(self.features) == len(self.labels) == len(self.best_ious)):
            raise InvalidInputError("training columns differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, i: int) -> TrainingSample:
        return TrainingSample(self.features[i], int(self.labels[i]), float(self.best_ious[i]))

    @staticmethod
    def concatenate(parts: list["TrainingSet"]) -> "TrainingSet":
        if not parts:
            return TrainingSet(np.empty((0, N_GROUP_FEATURES)), np.empty(0), np.empty(0))
        return TrainingSet(
            np.vstack([p.features for p in parts]),
            np.concatenate([p.labels for p in parts]),
            np.concatenate([p.best_ious for p in parts]),
        )


def mine_training_samples(
    hierarchies,
    gt_boxes: list[tuple[int, int, int, int]],
    positive_iou: float = 0.7,
    negative_iou: float = 0.2,
) -> TrainingSet:
    """Label dendrogram nodes against ground-truth boxes.

    A node is positive when its best IoU exceeds `positive_iou`, negative
    when below `negative_iou` and its bbox does not fully contain any gt
    box; everything in between is skipped as ambiguous.
    """
    if not gt_boxes:
        raise InvalidInputError("mining requires at least one ground-truth box")
    gts = np.array([list(b) for b in gt_boxes], dtype=np.float64)
    feats: list[np.ndarray] = []
    labels: list[int] = []
    ious: list[float] = []
    for hier in hierarchies:
        boxes = hier.node_boxes_original()
        if len(boxes) == 0:
            continue
        iou = boxes_iou_matrix(boxes.astype(np.float64), gts)
        best = iou.max(axis=1)
        bx0, by0 = boxes[:, 0], boxes[:, 1]
        bx1, by1 = bx0 + boxes[:, 2], by0 + boxes[:, 3]
        gx0, gy0 = gts[:, 0], gts[:, 1]
        gx1, gy1 = gx0 + gts[:, 2], gy0 + gts[:, 3]
        contains = (
            (bx0[:, None] <= gx0)
            & (by0[:, None] <= gy0)
            & (bx1[:, None] >= gx1)
            & (by1[:, None] >= gy1)
        ).any(axis=1)
        for node in hier.dendrogram.nodes:
            b = best[node.id]
            if b > positive_iou:
                label = 1
            elif b < negative_iou and not contains[node.id]:
                label = -1
            else:
                continue
            feats.append(group_features(node))
            labels.append(label)
            ious.append(float(b))
    if not feats:
        return TrainingSet(np.empty((0, N_GROUP_FEATURES)), np.empty(0), np.empty(0))
    return TrainingSet(np.array(feats), np.array(labels), np.array(ious))


class StumpBoostRanker(BaseEstimator, ClassifierMixin):
    """Additive ensemble of real-valued decision stumps.

    Each round picks the (feature, threshold) stump minimizing
    Z = 2*sqrt(WL+*WL-) + 2*sqrt(WR+*WR-) over the weighted sample halves and
    assigns each side the confidence 0.5*ln((W+ + eps)/(W- + eps)) with
    eps = 1/(2n). Weights follow w <- w*exp(-y*h(x)), renormalized; the
    exponential loss is asserted non-increasing every round.

    Args:
        rounds: number of boosting rounds.
        max_threshold_candidates: cap on candidate thresholds per feature
            (evenly spaced over the sorted distinct-value boundaries).
        exact_thresholds: search every distinct boundary (slower).
        balance: downsample the majority class before training.
        random_state: seed for the balancing draw.
    """

    def __init__(
        self,
        rounds: int = 200,
        max_threshold_candidates: int = 256,
        exact_thresholds: bool = False,
        balance: bool = True,
        random_state: int = 13,
    ):
        self.rounds = rounds
        self.max_threshold_candidates = max_threshold_candidates
        self.exact_thresholds = exact_thresholds
        self.balance = balance
        self.random_state = random_state

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y).ravel()
        if X.ndim != 2 or len(X) != len(y):
            raise InvalidInputError("X must be 2-d with one label per row")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("X must be finite")
        y = np.where(y > 0, 1, -1).astype(np.int64)
        if len(np.unique(y)) < 2:
            raise InvalidInputError("training needs both classes")
        if self.rounds < 1:
            raise InvalidInputError("rounds must be >= 1")

        if self.balance:
            pos = np.flatnonzero(y > 0)
            neg = np.flatnonzero(y < 0)
            rng = np.random.default_rng(self.random_state)
            if len(pos) > len(neg):
                pos = np.sort(rng.choice(pos, size=len(neg), replace=False))
            elif len(neg) > len(pos):
                neg = np.sort(rng.choice(neg, size=len(pos), replace=False))
            keep = np.sort(np.concatenate([pos, neg]))
            X, y = X[keep], y[keep]

        n, d = X.shape
        eps = 1.0 / (2.0 * n)
        orders = [np.argsort(X[:, k], kind="stable") for k in range(d)]
        sorted_vals = [X[orders[k], k] for k in range(d)]
        splits: list[np.ndarray] = []
        for k in range(d):
            xv = sorted_vals[k]
            s = np.flatnonzero(xv[1:] > xv[:-1]) + 1
            if not self.exact_thresholds and len(s) > self.max_threshold_candidates:
                pick = np.unique(
                    np.round(np.linspace(0, len(s) - 1, self.max_threshold_candidates)).astype(int)
                )
                s = s[pick]
            splits.append(s)

        pos_mask = y > 0
        pos_sorted = [pos_mask[orders[k]] for k in range(d)]
        w = np.full(n, 1.0 / n)
        margin_exp = np.ones(n)  # exp(-y * F(x)) so far
        self.stumps_: list[tuple[int, float, float, float]] = []
        self.train_losses_: list[float] = []
        prev_loss = 1.0
        for _ in range(self.rounds):
            best = None  # (Z, feature, split_pos, threshold)
            for k in range(d):
                s = splits[k]
                if len(s) == 0:
                    continue
                ws = w[orders[k]]
                wp = np.where(pos_sorted[k], ws, 0.0)
                wn = np.where(pos_sorted[k], 0.0, ws)
                cp = np.cumsum(wp)
                cn = np.cumsum(wn)
                lp, ln = cp[s - 1], cn[s - 1]
                rp, rn = cp[-1] - lp, cn[-1] - ln
                z = 2.0 * (np.sqrt(lp * ln) + np.sqrt(rp * rn))
                i = int(np.argmin(z))
                cand = (float(z[i]), k, int(s[i]))
                if best is None or cand < best:
                    best = cand
            if best is None:
                raise InvalidInputError("no usable split: all features constant")
            z_val, k, sp = best
            xv = sorted_vals[k]
            thr = (xv[sp - 1] + xv[sp]) / 2.0
            left = X[:, k] <= thr
            wl_p = w[left & pos_mask].sum()
            wl_n = w[left & ~pos_mask].sum()
            wr_p = w[~left & pos_mask].sum()
            wr_n = w[~left & ~pos_mask].sum()
            c_left = 0.5 * np.log((wl_p + eps) / (wl_n + eps))
            c_right = 0.5 * np.log((wr_p + eps) / (wr_n + eps))
            self.stumps_.append((k, float(thr), float(c_left), float(c_right)))

            h = np.where(left, c_left, c_right)
            margin_exp *= np.exp(-y * h)
            loss = float(margin_exp.mean())
            assert loss <= prev_loss * (1.0 + 1e-12), "exponential loss increased"
            self.train_losses_.append(loss)
            prev_loss = loss
            w = margin_exp / margin_exp.sum()

        self.n_features_in_ = d
        self.classes_ = np.array([-1, 1])
        return self

    def decision_function(self, X) -> np.ndarray:
        if not hasattr(self, "stumps_"):
            raise InvalidInputError("ranker is not fitted")
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        scores = np.zeros(len(X))
        for k, thr, cl, cr in self.stumps_:
            scores += np.where(X[:, k] <= thr, cl, cr)
        return scores

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0, 1, -1)


def save_model(model: StumpBoostRanker, path) -> None:
    """Serialize a fitted ranker to the line-oriented model format."""
    if not hasattr(model, "stumps_") or not model.stumps_:
        raise InvalidInputError("refusing to save an unfitted/empty model")
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION} rounds={len(model.stumps_)}"]
    for k, thr, cl, cr in model.stumps_:
        lines.append(f"f={k} t={thr:.17g} cl={cl:.17g} cr={cr:.17g}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> StumpBoostRanker:
    """Parse a model file back into a fitted ranker; bit-exact round trip."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty model file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != MODEL_MAGIC or head[1] != MODEL_VERSION or not head[2].startswith("rounds="):
        raise DataError(f"{path}: bad model header {lines[0]!r}")
    try:
        rounds = int(head[2].split("=", 1)[1])
    except ValueError as exc:
        raise DataError(f"{path}: bad rounds field") from exc
    body = lines[1:]
    if rounds < 1 or len(body) != rounds:
        raise DataError(f"{path}: header promises {rounds} stumps, found {len(body)}")
    stumps: list[tuple[int, float, float, float]] = []
    for ln_no, ln in enumerate(body, start=2):
        parts = ln.split()
        try:
            kv = dict(p.split("=", 1) for p in parts)
            k = int(kv["f"])
            thr, cl, cr = float(kv["t"]), float(kv["cl"]), float(kv["cr"])
        except (ValueError, KeyError) as exc:
            raise DataError(f"{path}:{ln_no}: malformed stump line {ln!r}") from exc
        if not 0 <= k < N_GROUP_FEATURES:
            raise DataError(f"{path}:{ln_no}: feature index {k} out of range")
        stumps.append((k, thr, cl, cr))
    model = StumpBoostRanker(rounds=rounds)
    model.stumps_ = stumps
    model.n_features_in_ = N_GROUP_FEATURES
    model.classes_ = np.array([-1, 1])
    return model
