"""Per-region scalar features that drive the similarity cues."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imaging import BitMask, RasterChannel, _erode3, l1_distance_transform, border_band_mask, outer_boundary_mask
from .segmentation import Region
from .validation import InvalidInputError

# order of the per-feature statistics carried through the dendrogram
FEATURE_ORDER = ("intensity_fg", "intensity_bg", "gradient_border", "stroke_width", "diameter")
CUE_TO_FEATURE = {
    "D": "diameter",
    "F": "intensity_fg",
    "B": "intensity_bg",
    "G": "gradient_border",
    "S": "stroke_width",
}


@dataclass(frozen=True)
class RegionFeatures:
    """Scalar description of one region, in channel coordinates/levels."""

    intensity_fg: float
    intensity_bg: float
    gradient_border: float
    stroke_width: float
    diameter: float
    bg_degenerate: bool = False

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_ORDER], dtype=np.float64)


def _ellipse_major_axis(xs: np.ndarray, ys: np.ndarray) -> float | None:
    """Major-axis length of the direct least-squares ellipse through points.

    Solves the constrained conic fit (4ac - b^2 = 1) via the split scatter
    matrices; returns None when the system is singular or the best conic is
    not an ellipse.
    """
    x = xs.astype(np.float64)
    y = ys.astype(np.float64)
    mx, my = x.mean(), y.mean()
    x = x - mx
    y = y - my
    d1 = np.column_stack([x * x, x * y, y * y])
    d2 = np.column_stack([x, y, np.ones_like(x)])
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    try:
        t = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError:
        return None
    m = s1 + s2 @ t
    m = np.array([m[2] / 2.0, -m[1], m[0] / 2.0])
    try:
        _, eigvec = np.linalg.eig(m)
    except np.linalg.LinAlgError:
        return None
    eigvec = np.real(eigvec)  # a true ellipse fit has exactly one real, admissible vector
    cond = 4.0 * eigvec[0] * eigvec[2] - eigvec[1] ** 2
    ok = np.flatnonzero(cond > 0)
    if len(ok) == 0:
        return None
    a1 = eigvec[:, ok[0]]
    coeffs = np.concatenate([a1, t @ a1])  # A, B, C, D, E, F
    aa, bb, cc, dd, ee, ff = coeffs
    quad = np.array([[aa, bb / 2.0], [bb / 2.0, cc]])
    try:
        cx, cy = np.linalg.solve(2.0 * quad, [-dd, -ee])
    except np.linalg.LinAlgError:
        return None
    mu = aa * cx * cx + bb * cx * cy + cc * cy * cy + dd * cx + ee * cy + ff
    tau = np.linalg.eigvalsh(quad)
    with np.errstate(divide="ignore", invalid="ignore"):
        radii_sq = -mu / tau
    if not np.all(np.isfinite(radii_sq)) or np.any(radii_sq <= 0):
        return None
    return float(2.0 * np.sqrt(radii_sq.max()))


def compute_features(
    region: Region,
    channel: RasterChannel,
    gradient: np.ndarray,
) -> RegionFeatures:
    """Measure the five similarity features of one region.

    `gradient` is the channel's gradient-magnitude grid (same shape as the
    channel). Intensity means use exact integer sums; all values are in
    channel coordinates.
    """
    values = channel.values
    if gradient.shape != values.shape:
        raise InvalidInputError("gradient grid does not match the channel")
    mask = region.pixels
    x0, y0 = mask.origin
    window = values[y0 : y0 + mask.height, x0 : x0 + mask.width]
    area = mask.count()
    if area == 0:
        raise InvalidInputError("region mask is empty")
    fg = int(window[mask.bits].sum(dtype=np.int64)) / area

    bounds = (channel.width, channel.height)
    outer = outer_boundary_mask(mask, bounds=bounds)
    n_outer = outer.count()
    if n_outer == 0:
        bg = fg
        degenerate = True
    else:
        ox, oy = outer.origin
        owin = values[oy : oy + outer.height, ox : ox + outer.width]
        bg = int(owin[outer.bits].sum(dtype=np.int64)) / n_outer
        degenerate = False

    band = border_band_mask(mask, bounds=bounds)
    bx, by = band.origin
    gwin = gradient[by : by + band.height, bx : bx + band.width]
    grad = float(gwin[band.bits].sum()) / band.count()

    dist = l1_distance_transform(mask.bits)
    stroke = float(dist.max(axis=1).sum()) / mask.height

    diameter = None
    if area >= 5:
        contour = mask.bits & ~_erode3(mask.bits)
        cy, cx = np.nonzero(contour)
        if len(cx) >= 5:
            diameter = _ellipse_major_axis(cx, cy)
    if diameter is None or not np.isfinite(diameter) or diameter <= 0:
        diameter = float(np.hypot(mask.width, mask.height))
    diameter = max(diameter, 1.0)

    return RegionFeatures(
        intensity_fg=fg,
        intensity_bg=bg,
        gradient_border=grad,
        stroke_width=stroke,
        diameter=diameter,
        bg_degenerate=degenerate,
    )
