"""Linear-time max-tree construction (union-find over descending levels).

Output conventions match skimage.morphology.max_tree: `parent` holds the
raveled parent index per pixel (root points to itself), `traverser` orders
pixels so every pixel is preceded by its parent; non-canonical pixels point
to the canonical pixel of their level component.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True, nogil=True)
def _max_tree_kernel(flat: np.ndarray, h: int, w: int):
    n = h * w
    # counting sort: ascending value, stable in pixel index
    counts = np.zeros(257, dtype=np.int64)
    for i in range(n):
        counts[flat[i] + 1] += 1
    for v in range(1, 257):
        counts[v] += counts[v - 1]
    order = np.empty(n, dtype=np.int64)
    cursor = counts[:256].copy()
    for i in range(n):
        v = flat[i]
        order[cursor[v]] = i
        cursor[v] += 1

    parent = np.full(n, -1, dtype=np.int64)
    zpar = np.full(n, -1, dtype=np.int64)
    for k in range(n - 1, -1, -1):  # brightest first
        p = order[k]
        parent[p] = p
        zpar[p] = p
        y = p // w
        x = p - y * w
        for d in range(4):
            if d == 0:
                if x == 0:
                    continue
                q = p - 1
            elif d == 1:
                if x == w - 1:
                    continue
                q = p + 1
            elif d == 2:
                if y == 0:
                    continue
                q = p - w
            else:
                if y == h - 1:
                    continue
                q = p + w
            if zpar[q] == -1:
                continue
            r = q
            while zpar[r] != r:
                r = zpar[r]
            s = q  # path compression
            while zpar[s] != r:
                t = zpar[s]
                zpar[s] = r
                s = t
            if r != p:
                parent[r] = p
                zpar[r] = p

    for k in range(n):  # canonicalization, parents before children
        p = order[k]
        q = parent[p]
        if flat[parent[q]] == flat[q]:
            parent[p] = parent[q]
    return parent, order


def max_tree_arrays(plane: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(parent, traverser) of the max-tree of a uint8 grid."""
    if plane.dtype != np.uint8 or plane.ndim != 2:
        raise ValueError("max tree expects a 2-d uint8 grid")
    if _HAVE_NUMBA:
        flat = np.ascontiguousarray(plane).ravel()
        h, w = plane.shape
        return _max_tree_kernel(flat, h, w)
    from skimage.morphology import max_tree  # pragma: no cover

    parent, traverser = max_tree(plane, connectivity=1)  # pragma: no cover
    return parent.ravel(), traverser  # pragma: no cover
