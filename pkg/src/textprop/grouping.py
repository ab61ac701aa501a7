"""Single-linkage dendrograms over regions in feature-plus-position space."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import CUE_TO_FEATURE, FEATURE_ORDER, RegionFeatures
from .segmentation import Region
from .validation import InvalidInputError

CUES = ("D", "F", "B", "G", "S")


@dataclass(frozen=True)
class CueSpace:
    """A grouping space: one scalar cue plus the region centers.

    `x_weight` scales the squared horizontal distance; values below 1 favor
    horizontally aligned merges, 1 restores rotation invariance.
    """

    cue: str
    x_weight: float = 1.0
    normalize: bool = False

    def __post_init__(self) -> None:
        if self.cue not in CUES:
            raise InvalidInputError(f"unknown cue {self.cue!r}")
        if self.x_weight <= 0:
            raise InvalidInputError("x_weight must be positive")

    def select(self, features: RegionFeatures) -> float:
        return float(getattr(features, CUE_TO_FEATURE[self.cue]))


def slc_distance(
    feature_a: float,
    center_a: tuple[float, float],
    feature_b: float,
    center_b: tuple[float, float],
    x_weight: float = 1.0,
) -> float:
    """Squared distance between two regions in (feature, x, y) space."""
    df = feature_a - feature_b
    dx = center_a[0] - center_b[0]
    dy = center_a[1] - center_b[1]
    return df * df + x_weight * (dx * dx) + dy * dy


@dataclass
class DendroNode:
    """One dendrogram node: a leaf region or a merge of two children.

    `bbox` is the (x0, y0, x1, y1) half-open union of member region boxes;
    `center_box` the tight extent of member centers; `sums`/`sumsqs` carry
    incremental per-feature statistics in FEATURE_ORDER. A node needs
    evaluation unless its bbox repeats one of its children's.
    """

    id: int
    children: tuple[int, int] | None
    merge_distance: float
    bbox: tuple[int, int, int, int]
    center_box: tuple[float, float, float, float]
    count: int
    sums: np.ndarray
    sumsqs: np.ndarray
    min_member: int
    needs_evaluation: bool

    @property
    def is_leaf(self) -> bool:
        return self.children is None


@dataclass
class Dendrogram:
    """Binary merge tree over the regions of one channel under one cue."""

    nodes: list[DendroNode]
    root: int
    n_leaves: int

    def parents(self) -> np.ndarray:
        """Parent id per node (-1 for the root)."""
        out = np.full(len(self.nodes), -1, dtype=np.intp)
        for node in self.nodes:
            if node.children is not None:
                out[node.children[0]] = node.id
                out[node.children[1]] = node.id
        return out

    def member_ids(self, node_id: int) -> list[int]:
        """Leaf (region) ids under a node, ascending."""
        stack = [node_id]
        out: list[int] = []
        while stack:
            cur = self.nodes[stack.pop()]
            if cur.children is None:
                out.append(cur.id)
            else:
                stack.extend(cur.children)
        return sorted(out)


def _leaf_node(i: int, region: Region, features: RegionFeatures) -> DendroNode:
    x, y, w, h = region.bbox
    cx, cy = region.center
    vec = features.as_vector()
    return DendroNode(
        id=i,
        children=None,
        merge_distance=0.0,
        bbox=(x, y, x + w, y + h),
        center_box=(cx, cy, cx, cy),
        count=1,
        sums=vec,
        sumsqs=vec * vec,
        min_member=i,
        needs_evaluation=True,
    )


def _merge_nodes(next_id: int, a: DendroNode, b: DendroNode, dist: float) -> DendroNode:
    if b.min_member < a.min_member:
        a, b = b, a
    bbox = (
        min(a.bbox[0], b.bbox[0]),
        min(a.bbox[1], b.bbox[1]),
        max(a.bbox[2], b.bbox[2]),
        max(a.bbox[3], b.bbox[3]),
    )
    center_box = (
        min(a.center_box[0], b.center_box[0]),
        min(a.center_box[1], b.center_box[1]),
        max(a.center_box[2], b.center_box[2]),
        max(a.center_box[3], b.center_box[3]),
    )
    return DendroNode(
        id=next_id,
        children=(a.id, b.id),
        merge_distance=dist,
        bbox=bbox,
        center_box=center_box,
        count=a.count + b.count,
        sums=a.sums + b.sums,
        sumsqs=a.sumsqs + b.sumsqs,
        min_member=a.min_member,
        needs_evaluation=bbox != a.bbox and bbox != b.bbox,
    )


def build_dendrogram(
    regions: list[Region],
    features: list[RegionFeatures],
    space: CueSpace,
) -> Dendrogram:
    """Agglomerate regions by single linkage in the cue space.

    Minimum-spanning-tree construction keeps memory linear in the region
    count; processing MST edges by ascending weight reproduces the
    merge-the-closest-pair sequence. Ties are broken by the smaller
    (min member id of one side, min member id of the other).
    """
    n = len(regions)
    if n == 0:
        raise InvalidInputError("cannot build a dendrogram over zero regions")
    if len(features) != n:
        raise InvalidInputError("regions and features differ in length")

    nodes = [_leaf_node(i, regions[i], features[i]) for i in range(n)]
    if n == 1:
        return Dendrogram(nodes=nodes, root=0, n_leaves=1)

    f = np.array([space.select(ft) for ft in features], dtype=np.float64)
    cx = np.array([r.center[0] for r in regions], dtype=np.float64)
    cy = np.array([r.center[1] for r in regions], dtype=np.float64)
    if space.normalize:
        for arr, rng in ((f, np.ptp(f)), (cx, np.ptp(cx)), (cy, np.ptp(cy))):
            if rng > 0:
                arr /= rng
    xw = float(space.x_weight)

    def row(i: int) -> np.ndarray:
        return (f - f[i]) ** 2 + xw * (cx - cx[i]) ** 2 + (cy - cy[i]) ** 2

    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = row(0)
    best[0] = np.inf
    best_from = np.zeros(n, dtype=np.intp)
    edges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        j = int(np.argmin(best))  # first minimum: deterministic
        edges.append((int(best_from[j]), j, float(best[j])))
        in_tree[j] = True
        best[j] = np.inf
        dj = row(j)
        upd = (dj < best) & ~in_tree
        best[upd] = dj[upd]
        best_from[upd] = j

    edges.sort(key=lambda e: e[2])

    # union-find over leaves; cluster roots carry their current node id
    uf_parent = list(range(n))
    cluster_node = list(range(n))

    def find(v: int) -> int:
        while uf_parent[v] != v:
            uf_parent[v] = uf_parent[uf_parent[v]]
            v = uf_parent[v]
        return v

    def merge(edge: tuple[int, int, float]) -> None:
        ra, rb = find(edge[0]), find(edge[1])
        node = _merge_nodes(len(nodes), nodes[cluster_node[ra]], nodes[cluster_node[rb]], edge[2])
        nodes.append(node)
        uf_parent[rb] = ra
        cluster_node[ra] = node.id

    i = 0
    while i < len(edges):
        j = i + 1
        while j < len(edges) and edges[j][2] == edges[i][2]:
            j += 1
        if j - i == 1:
            merge(edges[i])
        else:
            group = list(edges[i:j])
            while group:
                keys = []
                for g, e in enumerate(group):
                    ma = nodes[cluster_node[find(e[0])]].min_member
                    mb = nodes[cluster_node[find(e[1])]].min_member
                    keys.append((min(ma, mb), max(ma, mb), g))
                _, _, g = min(keys)
                merge(group.pop(g))
        i = j

    return Dendrogram(nodes=nodes, root=len(nodes) - 1, n_leaves=n)
