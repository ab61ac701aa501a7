"""Group descriptors, training-sample mining, boosted ranking, model IO."""
from dataclasses import dataclass

import numpy as np
import pytest

from textprop.grouping import CueSpace, DendroNode, build_dendrogram
from textprop.pipeline import Hierarchy
from textprop.ranking import (
    GROUP_FEATURE_NAMES,
    N_GROUP_FEATURES,
    StumpBoostRanker,
    group_features,
    load_model,
    mine_training_samples,
    save_model,
)
from textprop.features import RegionFeatures
from textprop.validation import DataError, InvalidInputError


@dataclass
class _Stub:
    bbox: tuple[int, int, int, int]
    center: tuple[float, float]


def _node(count, sums, sumsqs, bbox, center_box) -> DendroNode:
    return DendroNode(
        id=0,
        children=None if count == 1 else (0, 1),
        merge_distance=0.0,
        bbox=bbox,
        center_box=center_box,
        count=count,
        sums=np.asarray(sums, dtype=np.float64),
        sumsqs=np.asarray(sumsqs, dtype=np.float64),
        min_member=0,
        needs_evaluation=True,
    )


def _stats_node(member_values: np.ndarray, bbox=(0, 0, 10, 10), center_box=(2.0, 2.0, 8.0, 8.0)):
    """Node whose per-feature stats summarize `member_values` (rows=members)."""
    member_values = np.atleast_2d(np.asarray(member_values, dtype=np.float64))
    return _node(
        count=len(member_values),
        sums=member_values.sum(axis=0),
        sumsqs=(member_values**2).sum(axis=0),
        bbox=bbox,
        center_box=center_box,
    )


class TestGroupFeatures:
    def test_equal_members_have_zero_variation(self):
        vec = group_features(_stats_node(np.tile([7.0, 8.0, 9.0, 1.0, 3.0], (4, 1))))
        assert np.allclose(vec[:5], 0.0)

    def test_two_member_variation_example(self):
        members = np.array([[1.0, 5.0, 5.0, 5.0, 5.0], [3.0, 5.0, 5.0, 5.0, 5.0]])
        vec = group_features(_stats_node(members))
        assert vec[0] == pytest.approx(0.5)  # mean 2, population sigma 1
        assert np.allclose(vec[1:5], 0.0)

    def test_zero_mean_feature_maps_to_zero(self):
        members = np.zeros((3, 5))
        vec = group_features(_stats_node(members))
        assert np.allclose(vec[:5], 0.0)

    def test_bbox_ratio_example(self):
        vec = group_features(
            _stats_node(np.ones((2, 5)), bbox=(0, 0, 10, 10), center_box=(2.0, 2.0, 8.0, 8.0))
        )
        area, width, height, xdiff, ydiff = vec[5:]
        assert area == pytest.approx(0.36)
        assert width == pytest.approx(0.6)
        assert height == pytest.approx(0.6)
        assert xdiff == pytest.approx(1.0)  # 2 px margin on both sides
        assert ydiff == pytest.approx(1.0)

    def test_degenerate_margin_denominator_maps_to_zero(self):
        vec = group_features(
            _stats_node(np.ones((2, 5)), bbox=(0, 0, 10, 10), center_box=(2.0, 2.0, 10.0, 10.0))
        )
        assert vec[8] == 0.0 and vec[9] == 0.0

    def test_single_member_group_is_all_zero_variation(self):
        vec = group_features(_stats_node(np.array([[3.0, 1.0, 4.0, 1.0, 5.0]])))
        assert np.allclose(vec[:5], 0.0)

    def test_scaling_one_feature_leaves_its_variation_unchanged(self):
        rng = np.random.default_rng(50)
        for _ in range(50):
            members = rng.uniform(0.5, 20.0, size=(int(rng.integers(2, 8)), 5))
            k = float(rng.uniform(0.1, 50.0))
            col = int(rng.integers(0, 5))
            scaled = members.copy()
            scaled[:, col] *= k
            a = group_features(_stats_node(members))
            b = group_features(_stats_node(scaled))
            assert a[col] == pytest.approx(b[col], rel=1e-9)

    def test_feature_vector_has_ten_named_entries(self):
        assert N_GROUP_FEATURES == 10
        assert len(GROUP_FEATURE_NAMES) == 10
        vec = group_features(_stats_node(np.ones((2, 5))))
        assert vec.shape == (10,)
        assert np.all(np.isfinite(vec))


def _toy_hierarchy(bboxes: list[tuple[int, int, int, int]]) -> Hierarchy:
    regions = [
        _Stub(bbox=b, center=(b[0] + b[2] / 2.0, b[1] + b[3] / 2.0)) for b in bboxes
    ]
    features = [
        RegionFeatures(
            intensity_fg=float(i), intensity_bg=1.0, gradient_border=1.0,
            stroke_width=1.0, diameter=1.0,
        )
        for i in range(len(bboxes))
    ]
    dendro = build_dendrogram(regions, features, CueSpace(cue="F", x_weight=0.25))
    return Hierarchy(
        kind="R", level="P0", cue="F", scale_factor=1.0,
        image_size=(200, 200), dendrogram=dendro,
    )


class TestMining:
    def test_exact_box_is_positive_disjoint_is_negative(self):
        hier = _toy_hierarchy([(10, 10, 20, 12), (150, 150, 8, 8)])
        samples = mine_training_samples([hier], [(10, 10, 20, 12)])
        by_label = {}
        for i in range(len(samples)):
            s = samples[i]
            by_label.setdefault(s.label, []).append(s)
        assert any(s.best_iou == 1.0 for s in by_label[1])
        assert all(s.best_iou < 0.2 for s in by_label[-1])

    def test_containing_box_with_low_overlap_is_skipped(self):
        # three nodes: a big box swallowing the gt (skipped despite its tiny
        # IoU), a disjoint box (negative), and their union (skipped: contains)
        hier = _toy_hierarchy([(0, 0, 100, 100), (120, 120, 60, 60)])
        gt = (10, 10, 12, 12)
        assert len(hier.dendrogram.nodes) == 3
        samples = mine_training_samples([hier], [gt])
        assert len(samples) == 1
        assert samples[0].label == -1
        assert samples[0].best_iou == 0.0

    def test_every_node_is_positive_negative_or_skipped(self):
        rng = np.random.default_rng(51)
        bboxes = [
            (int(x), int(y), int(w), int(h))
            for x, y, w, h in zip(
                rng.integers(0, 150, 12), rng.integers(0, 150, 12),
                rng.integers(4, 40, 12), rng.integers(4, 40, 12),
            )
        ]
        hier = _toy_hierarchy(bboxes)
        gts = [(20, 20, 30, 20), (100, 90, 40, 25)]
        samples = mine_training_samples([hier], gts)
        from textprop.evaluation import boxes_iou_matrix

        boxes = hier.node_boxes_original().astype(np.float64)
        best = boxes_iou_matrix(boxes, np.array(gts, dtype=np.float64)).max(axis=1)
        n_pos = int(np.count_nonzero(best > 0.7))
        gx = np.array(gts)
        contains = (
            (boxes[:, 0][:, None] <= gx[:, 0])
            & (boxes[:, 1][:, None] <= gx[:, 1])
            & ((boxes[:, 0] + boxes[:, 2])[:, None] >= gx[:, 0] + gx[:, 2])
            & ((boxes[:, 1] + boxes[:, 3])[:, None] >= gx[:, 1] + gx[:, 3])
        ).any(axis=1)
        n_neg = int(np.count_nonzero((best < 0.2) & ~contains))
        assert np.count_nonzero(samples.labels == 1) == n_pos
        assert np.count_nonzero(samples.labels == -1) == n_neg
        assert len(samples) <= len(hier.dendrogram.nodes)

    def test_mining_without_gt_rejected(self):
        hier = _toy_hierarchy([(0, 0, 5, 5), (50, 50, 5, 5)])
        with pytest.raises(InvalidInputError):
            mine_training_samples([hier], [])


class TestTraining:
    def test_separable_set_reaches_zero_error_quickly(self):
        X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
        y = np.array([-1, -1, -1, 1, 1, 1])
        model = StumpBoostRanker(rounds=2, balance=False).fit(X, y)
        assert np.array_equal(model.predict(X), y)

    def test_exponential_loss_never_increases(self):
        rng = np.random.default_rng(52)
        X = rng.normal(size=(300, 6))
        y = np.where(X[:, 0] + 0.5 * rng.normal(size=300) > 0, 1, -1)
        model = StumpBoostRanker(rounds=40, balance=False).fit(X, y)
        losses = np.array(model.train_losses_)
        assert np.all(np.diff(losses) <= 1e-12)
        assert losses[-1] < losses[0]

    def test_inverted_labels_negate_the_scores(self):
        rng = np.random.default_rng(53)
        X = rng.normal(size=(120, 4))
        y = np.where(X[:, 1] > 0.2, 1, -1)
        a = StumpBoostRanker(rounds=15, balance=False).fit(X, y)
        b = StumpBoostRanker(rounds=15, balance=False).fit(X, -y)
        assert np.allclose(a.decision_function(X), -b.decision_function(X), atol=1e-9)

    def test_single_class_rejected(self):
        X = np.ones((10, 3))
        with pytest.raises(InvalidInputError):
            StumpBoostRanker(rounds=1).fit(X, np.ones(10))

    def test_balancing_downsamples_majority_deterministically(self):
        rng = np.random.default_rng(54)
        X = np.vstack([rng.normal(size=(20, 3)), rng.normal(loc=3.0, size=(200, 3))])
        y = np.concatenate([np.ones(20), -np.ones(200)])
        a = StumpBoostRanker(rounds=5, random_state=13).fit(X, y)
        b = StumpBoostRanker(rounds=5, random_state=13).fit(X, y)
        assert a.stumps_ == b.stumps_
        c = StumpBoostRanker(rounds=5, random_state=14).fit(X, y)
        assert isinstance(c.stumps_, list)  # different seed still trains fine

    def test_threshold_cap_limits_candidates_but_not_validity(self):
        rng = np.random.default_rng(55)
        X = rng.uniform(size=(1000, 2))
        y = np.where(X[:, 0] > 0.37, 1, -1)
        capped = StumpBoostRanker(rounds=3, max_threshold_candidates=16, balance=False).fit(X, y)
        exact = StumpBoostRanker(rounds=3, exact_thresholds=True, balance=False).fit(X, y)
        assert (capped.predict(X) == y).mean() > 0.95
        assert (exact.predict(X) == y).mean() == 1.0

    def test_scores_are_sums_of_stump_confidences(self):
        model = StumpBoostRanker(rounds=1)
        model.stumps_ = [(0, 1.0, -1.0, 2.0)]
        model.n_features_in_ = 1
        model.classes_ = np.array([-1, 1])
        assert model.decision_function([[0.5]])[0] == -1.0
        assert model.decision_function([[3.0]])[0] == 2.0


class TestModelFile:
    def _fitted(self, rng, rounds=7):
        X = rng.normal(size=(80, N_GROUP_FEATURES))
        y = np.where(X[:, 2] - X[:, 7] > 0, 1, -1)
        return StumpBoostRanker(rounds=rounds, balance=False).fit(X, y)

    def test_round_trip_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(56)
        model = self._fitted(rng)
        path = tmp_path / "model.txt"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.stumps_ == model.stumps_
        X = rng.normal(size=(40, N_GROUP_FEATURES))
        assert np.array_equal(loaded.decision_function(X), model.decision_function(X))

    def test_save_load_save_is_byte_identical(self, tmp_path):
        rng = np.random.default_rng(57)
        model = self._fitted(rng)
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        save_model(model, p1)
        save_model(load_model(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_model_file_rejected(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        with pytest.raises(DataError):
            load_model(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("something-else v1 rounds=1\nf=0 t=0 cl=0 cr=0\n")
        with pytest.raises(DataError):
            load_model(path)

    def test_wrong_stump_count_rejected(self, tmp_path):
        path = tmp_path / "short.txt"
        path.write_text("textprop-ranker v1 rounds=2\nf=0 t=0.5 cl=-1 cr=1\n")
        with pytest.raises(DataError):
            load_model(path)

    def test_out_of_range_feature_index_rejected(self, tmp_path):
        path = tmp_path / "oob.txt"
        path.write_text("textprop-ranker v1 rounds=1\nf=10 t=0.5 cl=-1 cr=1\n")
        with pytest.raises(DataError):
            load_model(path)

    def test_unfitted_model_cannot_be_saved(self, tmp_path):
        with pytest.raises(InvalidInputError):
            save_model(StumpBoostRanker(), tmp_path / "nope.txt")
