"""Extremal-region over-segmentation (relaxed MSER) on a component tree."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._component_tree import max_tree_arrays
from .imaging import BitMask, RasterChannel
from .validation import InvalidInputError, check_channel_grid

POLARITIES = ("dark-on-bright", "bright-on-dark")


@dataclass(frozen=True)
class MserParams:
    """Knobs for extremal-region selection.

    `delta` is the level offset used for the stability ratio; `max_variation`
    relaxes the usual tight setting so over-segmentation keeps many nested
    regions. `whole_tree=True` skips the stability/variation filters and
    emits every component-tree node that passes the area filters.
    """

    delta: int = 1
    min_area: int = 10
    max_area_ratio: float = 0.5
    max_variation: float = 1.0
    polarity: str = "both"
    whole_tree: bool = False

    def __post_init__(self) -> None:
        if self.delta < 1:
            raise InvalidInputError("delta must be >= 1")
        if self.min_area < 1:
            raise InvalidInputError("min_area must be >= 1")
        if not 0.0 < self.max_area_ratio <= 1.0:
            raise InvalidInputError("max_area_ratio must be in (0, 1]")
        if self.max_variation < 0.0:
            raise InvalidInputError("max_variation must be >= 0")
        if self.polarity not in POLARITIES + ("both",):
            raise InvalidInputError(f"unknown polarity {self.polarity!r}")


@dataclass
class Region:
    """A connected extremal region of one channel."""

    id: int
    polarity: str
    pixels: BitMask
    bbox: tuple[int, int, int, int]  # (x, y, width, height), channel coords
    area: int

    @property
    def center(self) -> tuple[float, float]:
        """Bbox centroid, channel coordinates."""
        x, y, w, h = self.bbox
        return (x + w / 2.0, y + h / 2.0)


def _tree_regions(plane: np.ndarray, params: MserParams) -> list[tuple[BitMask, tuple[int, int, int, int], int]]:
    """Select stable extremal regions from the max-tree of `plane`.

    Returns (mask, bbox, area) triples in tree traversal order. The root
    (whole frame) is never emitted.
    """
    h, w = plane.shape
    size = plane.size
    if size < 2:
        return []
    par, trav = max_tree_arrays(plane)
    lvl = plane.ravel().astype(np.int32)
    root = int(trav[0])

    self_idx = np.arange(size, dtype=np.intp)
    is_canon = lvl[par] != lvl
    is_canon[root] = True
    canon = np.where(is_canon, self_idx, par)
    # guard: hop until every pointer lands on a canonical pixel
    bad = ~is_canon[canon]
    while bad.any():
        canon[bad] = par[canon[bad]]
        bad = ~is_canon[canon]

    nodes_pix = trav[is_canon[trav]]  # canonical pixels, parents before children
    n_nodes = len(nodes_pix)
    idx = np.full(size, -1, dtype=np.intp)
    idx[nodes_pix] = np.arange(n_nodes, dtype=np.intp)
    node_lvl = lvl[nodes_pix]
    node_parent = idx[canon[par[nodes_pix]]]  # root maps to itself (index 0)

    pix_node = idx[canon]
    own_count = np.bincount(pix_node, minlength=n_nodes)
    ys, xs = np.divmod(self_idx, w)

    area = own_count.astype(np.int64)
    x0 = np.full(n_nodes, w, dtype=np.int64)
    y0 = np.full(n_nodes, h, dtype=np.int64)
    x1 = np.zeros(n_nodes, dtype=np.int64)
    y1 = np.zeros(n_nodes, dtype=np.int64)
    np.minimum.at(x0, pix_node, xs)
    np.minimum.at(y0, pix_node, ys)
    np.maximum.at(x1, pix_node, xs + 1)
    np.maximum.at(y1, pix_node, ys + 1)
    for j in range(n_nodes - 1, 0, -1):  # children accumulate into parents
        p = node_parent[j]
        area[p] += area[j]
        if x0[j] < x0[p]:
            x0[p] = x0[j]
        if y0[j] < y0[p]:
            y0[p] = y0[j]
        if x1[j] > x1[p]:
            x1[p] = x1[j]
        if y1[j] > y1[p]:
            y1[p] = y1[j]

    # stability: compare against the ancestor whose threshold span covers
    # (node level - delta); canonical ancestors drop at least one level per hop
    anc = np.arange(n_nodes, dtype=np.intp)
    target = node_lvl - params.delta
    for _ in range(params.delta):
        pa = node_parent[anc]
        move = (node_lvl[pa] >= target) & (pa != anc)
        if not move.any():
            break
        anc = np.where(move, pa, anc)
    variation = (area[anc] - area) / area

    maximally_stable = np.ones(n_nodes, dtype=bool)
    child = np.arange(1, n_nodes, dtype=np.intp)
    parent = node_parent[child]
    adjacent = node_lvl[child] - node_lvl[parent] == 1
    losers = np.where(variation[child] < variation[parent], parent, child)[adjacent]
    maximally_stable[losers] = False

    keep = (
        (area >= params.min_area)
        & (area <= params.max_area_ratio * size)
        & (np.arange(n_nodes) != 0)
    )
    if not params.whole_tree:
        keep &= maximally_stable & (variation <= params.max_variation)
    kept = np.flatnonzero(keep)
    if len(kept) == 0:
        return []

    # post-order over the canonical tree makes every subtree a contiguous
    # slice of grouped pixels, so masks come out in O(area) each
    children: list[list[int]] = [[] for _ in range(n_nodes)]
    for j in range(1, n_nodes):
        children[node_parent[j]].append(j)
    post = np.empty(n_nodes, dtype=np.intp)
    sub_count = np.ones(n_nodes, dtype=np.int64)
    pos = np.empty(n_nodes, dtype=np.intp)
    stack: list[tuple[int, bool]] = [(0, False)]
    cursor = 0
    while stack:
        node, done = stack.pop()
        if done:
            for c in children[node]:
                sub_count[node] += sub_count[c]
            post[cursor] = node
            pos[node] = cursor
            cursor += 1
            continue
        stack.append((node, True))
        for c in reversed(children[node]):
            stack.append((c, False))

    order = np.argsort(pos[pix_node], kind="stable")  # pixels grouped in post-order
    counts_po = own_count[post]
    ends = np.cumsum(counts_po)
    starts = ends - counts_po

    out = []
    for j in kept:
        lo = pos[j] - (sub_count[j] - 1)
        pix = order[starts[lo] : ends[pos[j]]]
        bx0, by0, bx1, by1 = int(x0[j]), int(y0[j]), int(x1[j]), int(y1[j])
        bits = np.zeros((by1 - by0, bx1 - bx0), dtype=bool)
        bits[ys[pix] - by0, xs[pix] - bx0] = True
        mask = BitMask(bits=bits, origin=(bx0, by0))
        out.append((mask, (bx0, by0, bx1 - bx0, by1 - by0), int(area[j])))
    return out


def extract_regions(channel: RasterChannel, params: MserParams | None = None) -> list[Region]:
    """Over-segment one channel into stable extremal regions.

    Dark-on-bright regions come from the max-tree of the inverted channel,
    bright-on-dark from the channel itself; ordering is (polarity, tree
    traversal order) and ids are sequential in that order.
    """
    params = params or MserParams()
    values = check_channel_grid(channel.values)
    regions: list[Region] = []
    for polarity in POLARITIES:
        if params.polarity not in ("both", polarity):
            continue
        plane = (255 - values) if polarity == "dark-on-bright" else values
        for mask, bbox, area in _tree_regions(plane, params):
            regions.append(
                Region(id=len(regions), polarity=polarity, pixels=mask, bbox=bbox, area=area)
            )
    return regions
