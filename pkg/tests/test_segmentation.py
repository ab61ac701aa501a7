"""Extremal-region extraction checked against per-threshold relabelling."""
import numpy as np
import pytest

from textprop.imaging import RasterChannel
from textprop.segmentation import MserParams, POLARITIES, extract_regions
from textprop.validation import InvalidInputError

from oracles import is_four_connected, mask_pixel_ids, stable_region_sets, upper_set_components


def _channel(values: np.ndarray) -> RasterChannel:
    return RasterChannel(
        values=np.ascontiguousarray(values, dtype=np.uint8),
        kind="I",
        pyramid_level="P0",
        scale_factor=1.0,
    )


def _region_sets(regions, polarity, width):
    return {
        mask_pixel_ids(r.pixels.bits, r.pixels.origin, width)
        for r in regions
        if r.polarity == polarity
    }


class TestParams:
    def test_defaults_are_relaxed(self):
        p = MserParams()
        assert (p.delta, p.min_area, p.max_area_ratio, p.max_variation) == (1, 10, 0.5, 1.0)
        assert p.polarity == "both"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"delta": 0},
            {"min_area": 0},
            {"max_area_ratio": 0.0},
            {"max_area_ratio": 1.5},
            {"max_variation": -0.1},
            {"polarity": "sideways"},
        ],
    )
    def test_bad_params_rejected(self, kwargs):
        with pytest.raises(InvalidInputError):
            MserParams(**kwargs)


class TestExamples:
    def test_constant_channel_yields_nothing(self):
        channel = _channel(np.full((30, 30), 128))
        assert extract_regions(channel) == []

    def test_single_dark_square_recovered(self):
        values = np.full((60, 80), 220)
        values[15:35, 20:40] = 30
        regions = extract_regions(_channel(values))
        assert regions, "a high-contrast square must produce regions"
        best = min(
            regions,
            key=lambda r: max(
                abs(r.bbox[0] - 20), abs(r.bbox[1] - 15), abs(r.bbox[2] - 20), abs(r.bbox[3] - 20)
            ),
        )
        assert max(
            abs(best.bbox[0] - 20), abs(best.bbox[1] - 15), abs(best.bbox[2] - 20), abs(best.bbox[3] - 20)
        ) <= 1

    def test_two_disjoint_squares_give_disjoint_regions(self):
        values = np.full((50, 90), 200)
        values[10:26, 10:26] = 20
        values[24:40, 60:76] = 40
        regions = extract_regions(_channel(values))
        left = [r for r in regions if r.bbox[0] < 45]
        right = [r for r in regions if r.bbox[0] >= 45]
        assert left and right
        for a in left:
            ax0, ay0, aw, ah = a.bbox
            for b in right:
                bx0 = b.bbox[0]
                assert ax0 + aw <= bx0  # no horizontal overlap at all

    def test_nested_regions_are_all_kept(self):
        # ring around a darker core: both the core and the full blob qualify
        values = np.full((40, 40), 230)
        values[8:32, 8:32] = 90
        values[14:26, 14:26] = 20
        regions = extract_regions(_channel(values), MserParams(min_area=10))
        areas = sorted(r.area for r in regions if r.polarity == "dark-on-bright")
        assert len(areas) >= 2
        assert areas[0] < areas[-1]


class TestStructure:
    def test_masks_are_connected_and_consistent(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            values = rng.integers(0, 8, size=(18, 22)) * 32
            regions = extract_regions(_channel(values), MserParams(min_area=2))
            for r in regions:
                assert is_four_connected(r.pixels.bits)
                assert r.area == int(r.pixels.bits.sum())
                ys, xs = np.nonzero(r.pixels.bits)
                x, y, w, h = r.bbox
                assert (xs.min(), ys.min()) == (0, 0)  # tight crop
                assert (w, h) == (xs.max() + 1, ys.max() + 1)
                assert r.pixels.origin == (x, y)
                cx, cy = r.center
                assert x <= cx <= x + w and y <= cy <= y + h

    def test_every_region_is_an_upper_set_component(self):
        rng = np.random.default_rng(22)
        for _ in range(15):
            values = rng.integers(0, rng.integers(3, 10), size=(16, 16)) * 25
            channel = _channel(values)
            families = {
                "dark-on-bright": upper_set_components(255 - channel.values),
                "bright-on-dark": upper_set_components(channel.values),
            }
            regions = extract_regions(channel, MserParams(min_area=1))
            assert regions
            for r in regions:
                ids = mask_pixel_ids(r.pixels.bits, r.pixels.origin, channel.width)
                assert ids in families[r.polarity]

    def test_member_levels_beat_adjacent_outside_levels(self):
        rng = np.random.default_rng(23)
        values = rng.integers(0, 6, size=(20, 20)) * 40
        channel = _channel(values)
        regions = extract_regions(channel, MserParams(min_area=2))
        for r in regions:
            x, y, w, h = r.bbox
            grid = np.zeros((channel.height, channel.width), dtype=bool)
            grid[y : y + h, x : x + w] = r.pixels.bits
            neighbors = np.zeros_like(grid)
            neighbors[1:, :] |= grid[:-1, :]
            neighbors[:-1, :] |= grid[1:, :]
            neighbors[:, 1:] |= grid[:, :-1]
            neighbors[:, :-1] |= grid[:, 1:]
            ring = neighbors & ~grid
            if not ring.any():
                continue
            if r.polarity == "dark-on-bright":
                assert values[grid].max() < values[ring].min()
            else:
                assert values[grid].min() > values[ring].max()

    def test_inverting_the_channel_swaps_polarities(self):
        rng = np.random.default_rng(24)
        values = rng.integers(0, 7, size=(24, 24)) * 36
        a = extract_regions(_channel(values), MserParams(min_area=2))
        b = extract_regions(_channel(255 - values), MserParams(min_area=2))

        def keyed(regions, polarity):
            return sorted(
                (r.bbox, r.pixels.bits.tobytes()) for r in regions if r.polarity == polarity
            )

        assert keyed(a, "dark-on-bright") == keyed(b, "bright-on-dark")
        assert keyed(a, "bright-on-dark") == keyed(b, "dark-on-bright")

    def test_area_filters_respected(self):
        rng = np.random.default_rng(25)
        values = rng.integers(0, 5, size=(30, 30)) * 50
        params = MserParams(min_area=12, max_area_ratio=0.3)
        for r in extract_regions(_channel(values), params):
            assert 12 <= r.area <= 0.3 * values.size

    def test_ids_sequential_and_deterministic(self):
        rng = np.random.default_rng(26)
        values = rng.integers(0, 6, size=(20, 26)) * 40
        first = extract_regions(_channel(values), MserParams(min_area=2))
        second = extract_regions(_channel(values), MserParams(min_area=2))
        assert [r.id for r in first] == list(range(len(first)))
        assert [(r.bbox, r.polarity) for r in first] == [(r.bbox, r.polarity) for r in second]
        # dark-on-bright regions precede bright-on-dark ones
        kinds = [r.polarity for r in first]
        assert kinds == sorted(kinds, key=POLARITIES.index)


class TestSelectionOracle:
    def test_whole_tree_matches_component_family_exactly(self):
        rng = np.random.default_rng(31)
        for _ in range(15):
            h, w = rng.integers(5, 18, size=2)
            values = rng.integers(0, rng.integers(3, 9), size=(h, w)) * 30
            channel = _channel(values)
            params = MserParams(min_area=1, max_area_ratio=1.0, whole_tree=True, polarity="bright-on-dark")
            got = _region_sets(extract_regions(channel, params), "bright-on-dark", channel.width)
            family = upper_set_components(values)
            family.discard(frozenset(range(values.size)))  # the root is never emitted
            assert got == family

    def test_stability_selection_matches_reference_recount(self):
        rng = np.random.default_rng(32)
        for trial in range(25):
            h, w = rng.integers(6, 20, size=2)
            n_levels = int(rng.integers(3, 9))
            values = rng.integers(0, n_levels, size=(h, w)).astype(np.uint8)
            delta = int(rng.integers(1, 3))
            min_area = int(rng.integers(1, 4))
            max_var = float(rng.choice([0.5, 1.0, 2.0, 10.0]))
            params = MserParams(
                delta=delta,
                min_area=min_area,
                max_area_ratio=1.0,
                max_variation=max_var,
                polarity="bright-on-dark",
            )
            channel = _channel(values)
            got = _region_sets(extract_regions(channel, params), "bright-on-dark", channel.width)
            want = stable_region_sets(values, delta, min_area, 1.0, max_var)
            assert got == want, f"trial {trial}: selection mismatch"

    def test_whole_tree_is_a_superset_of_stable_selection(self):
        rng = np.random.default_rng(33)
        values = rng.integers(0, 7, size=(22, 22)) * 36
        channel = _channel(values)
        stable = _region_sets(
            extract_regions(channel, MserParams(min_area=3)), "dark-on-bright", channel.width
        )
        everything = _region_sets(
            extract_regions(channel, MserParams(min_area=3, whole_tree=True)),
            "dark-on-bright",
            channel.width,
        )
        assert stable <= everything

    def test_single_polarity_modes(self):
        rng = np.random.default_rng(34)
        values = rng.integers(0, 6, size=(20, 20)) * 40
        channel = _channel(values)
        both = extract_regions(channel, MserParams(min_area=2))
        dark = extract_regions(channel, MserParams(min_area=2, polarity="dark-on-bright"))
        bright = extract_regions(channel, MserParams(min_area=2, polarity="bright-on-dark"))
        assert all(r.polarity == "dark-on-bright" for r in dark)
        assert all(r.polarity == "bright-on-dark" for r in bright)
        assert len(both) == len(dark) + len(bright)
