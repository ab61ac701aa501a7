"""Single-linkage dendrograms: distances, merge order, node bookkeeping."""
from dataclasses import dataclass

import numpy as np
import pytest

from textprop.features import FEATURE_ORDER, RegionFeatures
from textprop.grouping import CueSpace, build_dendrogram, slc_distance
from textprop.validation import InvalidInputError

from oracles import dendrogram_merge_sequence, naive_single_linkage


@dataclass
class _Stub:
    """Minimal region stand-in: the clustering only reads bbox and center."""

    bbox: tuple[int, int, int, int]
    center: tuple[float, float]


def _make_features(value: float) -> RegionFeatures:
    return RegionFeatures(
        intensity_fg=value,
        intensity_bg=value,
        gradient_border=value,
        stroke_width=value,
        diameter=value,
    )


def _instance(rng, n, float_centers=True):
    """Random regions + features; returns (regions, features, cue values, centers)."""
    values = rng.uniform(0, 255, size=n)
    if float_centers:
        centers = rng.uniform(0, 100, size=(n, 2))
        regions = [
            _Stub(bbox=(int(c[0]), int(c[1]), 3, 3), center=(float(c[0]), float(c[1])))
            for c in centers
        ]
    else:
        xs = rng.integers(0, 80, size=n)
        ys = rng.integers(0, 80, size=n)
        ws = rng.integers(1, 20, size=n)
        hs = rng.integers(1, 20, size=n)
        regions = [
            _Stub(
                bbox=(int(x), int(y), int(w), int(h)),
                center=(float(x) + w / 2.0, float(y) + h / 2.0),
            )
            for x, y, w, h in zip(xs, ys, ws, hs)
        ]
        centers = np.array([r.center for r in regions])
    features = [_make_features(float(v)) for v in values]
    return regions, features, values, np.asarray(centers, dtype=np.float64)


class TestDistance:
    def test_pythagorean_example(self):
        assert slc_distance(5.0, (0.0, 0.0), 5.0, (3.0, 4.0), x_weight=1.0) == 25.0

    def test_horizontal_weighting_example(self):
        assert slc_distance(7.0, (0.0, 2.0), 7.0, (2.0, 2.0), x_weight=0.25) == 1.0

    def test_identical_regions_are_at_zero(self):
        assert slc_distance(9.0, (4.0, 4.0), 9.0, (4.0, 4.0), x_weight=0.25) == 0.0

    def test_feature_gap_enters_squared(self):
        assert slc_distance(2.0, (0.0, 0.0), 5.0, (0.0, 0.0), x_weight=1.0) == 9.0


class TestCueSpace:
    def test_cue_selects_the_right_feature(self):
        feats = RegionFeatures(
            intensity_fg=1.0, intensity_bg=2.0, gradient_border=3.0, stroke_width=4.0, diameter=5.0
        )
        assert CueSpace(cue="F").select(feats) == 1.0
        assert CueSpace(cue="B").select(feats) == 2.0
        assert CueSpace(cue="G").select(feats) == 3.0
        assert CueSpace(cue="S").select(feats) == 4.0
        assert CueSpace(cue="D").select(feats) == 5.0

    def test_unknown_cue_rejected(self):
        with pytest.raises(InvalidInputError):
            CueSpace(cue="Z")

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(InvalidInputError):
            CueSpace(cue="F", x_weight=0.0)


class TestExamples:
    def test_three_collinear_regions_merge_near_first(self):
        regions = [
            _Stub(bbox=(0, 0, 1, 1), center=(0.0, 0.0)),
            _Stub(bbox=(1, 0, 1, 1), center=(1.0, 0.0)),
            _Stub(bbox=(3, 0, 1, 1), center=(3.0, 0.0)),
        ]
        features = [_make_features(10.0)] * 3
        dendro = build_dendrogram(regions, features, CueSpace(cue="F", x_weight=1.0))
        internal = [n for n in dendro.nodes if n.children is not None]
        assert [n.merge_distance for n in internal] == [1.0, 4.0]
        assert dendro.member_ids(internal[0].id) == [0, 1]

    def test_single_region_yields_leaf_only_dendrogram(self):
        dendro = build_dendrogram(
            [_Stub(bbox=(0, 0, 2, 2), center=(1.0, 1.0))],
            [_make_features(1.0)],
            CueSpace(cue="F"),
        )
        assert dendro.n_leaves == 1 and dendro.root == 0
        assert len(dendro.nodes) == 1

    def test_empty_input_rejected(self):
        with pytest.raises(InvalidInputError):
            build_dendrogram([], [], CueSpace(cue="F"))

    def test_node_count_is_two_n_minus_one(self):
        rng = np.random.default_rng(40)
        regions, features, _, _ = _instance(rng, 57)
        dendro = build_dendrogram(regions, features, CueSpace(cue="F", x_weight=0.25))
        assert dendro.n_leaves == 57
        assert len(dendro.nodes) == 113

    def test_symmetric_tie_follows_member_id_order(self):
        # four identical regions on a unit square: all adjacent pairs tie at 1
        corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
        regions = [_Stub(bbox=(int(x), int(y), 1, 1), center=c) for c in corners for x, y in [c]]
        features = [_make_features(5.0)] * 4
        dendro = build_dendrogram(regions, features, CueSpace(cue="F", x_weight=1.0))
        got = dendrogram_merge_sequence(dendro)
        want = naive_single_linkage(np.full(4, 5.0), np.array(corners), 1.0)
        assert [(a, b) for a, b, _ in got] == [(a, b) for a, b, _ in want]
        assert got[0][:2] == (frozenset({0}), frozenset({1}))


class TestOracleEquivalence:
    @pytest.mark.parametrize("x_weight", [1.0, 0.25])
    def test_merge_sequence_matches_naive_clustering(self, x_weight):
        rng = np.random.default_rng(41)
        for _ in range(30):
            n = int(rng.integers(2, 30))
            regions, features, values, centers = _instance(rng, n)
            dendro = build_dendrogram(regions, features, CueSpace(cue="F", x_weight=x_weight))
            got = dendrogram_merge_sequence(dendro)
            want = naive_single_linkage(values, centers, x_weight)
            assert [(a, b) for a, b, _ in got] == [(a, b) for a, b, _ in want]
            for (_, _, dg), (_, _, dw) in zip(got, want):
                assert dg == pytest.approx(dw, rel=1e-9, abs=1e-12)


class TestStructuralInvariants:
    def _random_dendrogram(self, rng, n=None):
        n = n or int(rng.integers(2, 25))
        regions, features, _, _ = _instance(rng, n, float_centers=False)
        space = CueSpace(cue=str(rng.choice(["F", "B", "G", "S", "D"])), x_weight=0.25)
        return build_dendrogram(regions, features, space), regions, features

    def test_merge_distance_monotone_to_the_root(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            dendro, _, _ = self._random_dendrogram(rng)
            parents = dendro.parents()
            for node in dendro.nodes:
                p = parents[node.id]
                if p != -1:
                    assert dendro.nodes[p].merge_distance >= node.merge_distance

    def test_bbox_is_union_of_children(self):
        rng = np.random.default_rng(43)
        for _ in range(25):
            dendro, _, _ = self._random_dendrogram(rng)
            for node in dendro.nodes:
                if node.children is None:
                    continue
                a, b = (dendro.nodes[c] for c in node.children)
                assert node.bbox == (
                    min(a.bbox[0], b.bbox[0]),
                    min(a.bbox[1], b.bbox[1]),
                    max(a.bbox[2], b.bbox[2]),
                    max(a.bbox[3], b.bbox[3]),
                )

    def test_member_sets_partition_the_leaves(self):
        rng = np.random.default_rng(44)
        dendro, _, _ = self._random_dendrogram(rng, n=20)
        for node in dendro.nodes:
            if node.children is None:
                continue
            a, b = node.children
            ma, mb = set(dendro.member_ids(a)), set(dendro.member_ids(b))
            assert not (ma & mb)
            assert sorted(ma | mb) == dendro.member_ids(node.id)
            assert node.count == len(ma) + len(mb)
            assert node.min_member == min(ma | mb)

    def test_incremental_stats_match_batch_recomputation(self):
        rng = np.random.default_rng(45)
        for _ in range(10):
            dendro, _, features = self._random_dendrogram(rng)
            table = np.array([f.as_vector() for f in features])
            for node in dendro.nodes:
                members = dendro.member_ids(node.id)
                batch_mean = table[members].mean(axis=0)
                batch_std = table[members].std(axis=0)
                mu = node.sums / node.count
                var = np.maximum(node.sumsqs / node.count - mu * mu, 0.0)
                assert np.allclose(mu, batch_mean, rtol=1e-9, atol=1e-9)
                assert np.allclose(np.sqrt(var), batch_std, rtol=1e-9, atol=1e-9)

    def test_dedup_flag_tracks_bbox_novelty(self):
        rng = np.random.default_rng(46)
        for _ in range(15):
            dendro, _, _ = self._random_dendrogram(rng)
            for node in dendro.nodes:
                if node.children is None:
                    assert node.needs_evaluation
                    continue
                a, b = (dendro.nodes[c] for c in node.children)
                repeats_child = node.bbox in (a.bbox, b.bbox)
                assert node.needs_evaluation == (not repeats_child)

    def test_rotating_centers_preserves_merge_order_at_unit_weight(self):
        rng = np.random.default_rng(47)
        for _ in range(10):
            n = int(rng.integers(3, 16))
            regions, features, values, centers = _instance(rng, n)
            base = build_dendrogram(regions, features, CueSpace(cue="F", x_weight=1.0))
            angle = rng.uniform(0, 2 * np.pi)
            pivot = rng.uniform(-50, 150, size=2)
            c, s = np.cos(angle), np.sin(angle)
            shifted = centers - pivot
            rotated = np.column_stack(
                [c * shifted[:, 0] - s * shifted[:, 1], s * shifted[:, 0] + c * shifted[:, 1]]
            ) + pivot
            moved = [
                _Stub(bbox=r.bbox, center=(float(p[0]), float(p[1])))
                for r, p in zip(regions, rotated)
            ]
            turned = build_dendrogram(moved, features, CueSpace(cue="F", x_weight=1.0))
            seq_a = [(a, b) for a, b, _ in dendrogram_merge_sequence(base)]
            seq_b = [(a, b) for a, b, _ in dendrogram_merge_sequence(turned)]
            assert seq_a == seq_b

    def test_horizontal_weight_below_one_prefers_horizontal_pairs(self):
        regions = [
            _Stub(bbox=(0, 0, 1, 1), center=(0.0, 0.0)),
            _Stub(bbox=(3, 0, 1, 1), center=(3.0, 0.0)),   # 3 to the right
            _Stub(bbox=(0, 2, 1, 1), center=(0.0, 2.5)),   # 2.5 below
        ]
        features = [_make_features(1.0)] * 3
        isotropic = build_dendrogram(regions, features, CueSpace(cue="F", x_weight=1.0))
        squeezed = build_dendrogram(regions, features, CueSpace(cue="F", x_weight=0.25))
        first_iso = dendrogram_merge_sequence(isotropic)[0]
        first_sq = dendrogram_merge_sequence(squeezed)[0]
        assert (first_iso[0], first_iso[1]) == (frozenset({0}), frozenset({2}))
        assert (first_sq[0], first_sq[1]) == (frozenset({0}), frozenset({1}))
