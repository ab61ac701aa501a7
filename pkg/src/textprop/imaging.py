"""Raster primitives: channel pyramid, gradients, distance transform, 3x3 morphology."""
from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .validation import InvalidInputError, check_channel_grid, check_rgb_image

PYRAMID_LEVELS = ("P0", "P1", "P2")
CHANNEL_KINDS = ("R", "G", "B", "I")
SCALE_FACTORS = {"P0": 1.0, "P1": 0.5, "P2": 0.25}
_DIVISORS = {"P0": 1, "P1": 2, "P2": 4}


@dataclass(frozen=True)
class RasterChannel:
    """One 8-bit scalar plane of the input pyramid.

    `values` is a (height, width) uint8 grid; `scale_factor` maps channel
    coordinates back to original-image coordinates (multiply by its inverse).
    """

    values: np.ndarray
    kind: str
    pyramid_level: str
    scale_factor: float

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class BitMask:
    """Boolean crop with an (x, y) origin into its parent channel."""

    bits: np.ndarray
    origin: tuple[int, int] = (0, 0)

    @property
    def height(self) -> int:
        return int(self.bits.shape[0])

    @property
    def width(self) -> int:
        return int(self.bits.shape[1])

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))


def rec601_luma(image: np.ndarray) -> np.ndarray:
    """Luma plane: round(0.299 R + 0.587 G + 0.114 B), half away from zero."""
    rgb = image.astype(np.float64)
    y = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return np.floor(y + 0.5).astype(np.uint8)


def _level_dims(width: int, height: int, level: str) -> tuple[int, int]:
    d = _DIVISORS[level]
    # round half up, floor at 1 so degenerate inputs keep a pixel
    w = max(1, int(np.floor(width / d + 0.5)))
    h = max(1, int(np.floor(height / d + 0.5)))
    return w, h


def extract_channels(
    image,
    levels: tuple[str, ...] = ("P0",),
    kinds: tuple[str, ...] = ("R", "G", "B"),
) -> list[RasterChannel]:
    """Decompose an RGB raster into per-level scalar channels.

    Levels are bilinear downsamples of the full image to half / quarter
    dimensions; channels are extracted from the resized raster. Output order
    is deterministic: levels in P0..P2 order, then kinds in R,G,B,I order.
    """
    arr = check_rgb_image(image)
    bad = [lv for lv in levels if lv not in PYRAMID_LEVELS]
    if bad:
        raise InvalidInputError(f"unknown pyramid level(s) {bad}")
    bad = [k for k in kinds if k not in CHANNEL_KINDS]
    if bad:
        raise InvalidInputError(f"unknown channel kind(s) {bad}")

    height, width = arr.shape[:2]
    out: list[RasterChannel] = []
    for level in PYRAMID_LEVELS:
        if level not in levels:
            continue
        w, h = _level_dims(width, height, level)
        if (w, h) == (width, height):
            resized = arr
        else:
            resized = cv2.resize(arr, (w, h), interpolation=cv2.INTER_LINEAR)
        planes = {
            "R": resized[:, :, 0],
            "G": resized[:, :, 1],
            "B": resized[:, :, 2],
        }
        for kind in CHANNEL_KINDS:
            if kind not in kinds:
                continue
            values = planes[kind] if kind != "I" else rec601_luma(resized)
            out.append(
                RasterChannel(
                    values=np.ascontiguousarray(values),
                    kind=kind,
                    pyramid_level=level,
                    scale_factor=SCALE_FACTORS[level],
                )
            )
    return out


def gradient_magnitude(values: np.ndarray) -> np.ndarray:
    """Gradient magnitude grid (float64).

    Central differences in the interior, one-sided at the borders; same
    shape as the input channel.
    """
    grid = check_channel_grid(values).astype(np.float64)
    if grid.shape[0] == 1 and grid.shape[1] == 1:
        return np.zeros_like(grid)
    if grid.shape[0] == 1:
        gx = np.gradient(grid[0])
        return np.abs(gx)[None, :]
    if grid.shape[1] == 1:
        gy = np.gradient(grid[:, 0])
        return np.abs(gy)[:, None]
    gy, gx = np.gradient(grid)
    return np.hypot(gx, gy)


def l1_distance_transform(bits: np.ndarray) -> np.ndarray:
    """Two-pass L1 (city-block) distance to the nearest off pixel.

    Everything outside the grid counts as off, so on-pixels at the crop
    border get distance 1. Returns int32, zeros on off pixels.
    """
    mask = np.asarray(bits, dtype=bool)
    if mask.ndim != 2:
        raise InvalidInputError("distance transform expects a 2-d mask")
    h, w = mask.shape
    big = h + w + 2
    d = np.full((h + 2, w + 2), 0, dtype=np.int32)
    d[1:-1, 1:-1] = np.where(mask, big, 0)
    cols = np.arange(w + 2, dtype=np.int32)
    rcols = cols[::-1]
    for i in range(1, h + 1):  # forward: top and left neighbors
        row = np.minimum(d[i], d[i - 1] + 1)
        row = np.minimum.accumulate(row - cols) + cols
        d[i] = row
    for i in range(h, 0, -1):  # backward: bottom and right neighbors
        row = np.minimum(d[i], d[i + 1] + 1)
        row = (np.minimum.accumulate((row - rcols)[::-1]) + cols)[::-1]
        d[i] = row
    return d[1:-1, 1:-1]


def _dilate3(bits: np.ndarray) -> np.ndarray:
    """3x3 rectangular dilation of a boolean grid."""
    h, w = bits.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = bits
    out = np.zeros_like(bits)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            out |= padded[dy : dy + h, dx : dx + w]
    return out


def _erode3(bits: np.ndarray) -> np.ndarray:
    """3x3 rectangular erosion; outside the grid counts as off."""
    h, w = bits.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = bits
    out = np.ones_like(bits)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            out &= padded[dy : dy + h, dx : dx + w]
    return out


def _expanded(mask: BitMask, bounds: tuple[int, int] | None) -> tuple[np.ndarray, tuple[int, int]]:
    """Place mask bits into a one-pixel-wider canvas, clipped to bounds."""
    x0, y0 = mask.origin
    ex0, ey0 = x0 - 1, y0 - 1
    ex1, ey1 = x0 + mask.width + 1, y0 + mask.height + 1
    if bounds is not None:
        bw, bh = bounds
        ex0, ey0 = max(ex0, 0), max(ey0, 0)
        ex1, ey1 = min(ex1, bw), min(ey1, bh)
    grid = np.zeros((ey1 - ey0, ex1 - ex0), dtype=bool)
    grid[y0 - ey0 : y0 - ey0 + mask.height, x0 - ex0 : x0 - ex0 + mask.width] = mask.bits
    return grid, (ex0, ey0)


def outer_boundary_mask(mask: BitMask, bounds: tuple[int, int] | None = None) -> BitMask:
    """Off pixels 8-adjacent to the mask (3x3 dilation minus the mask)."""
    grid, origin = _expanded(mask, bounds)
    return BitMask(bits=_dilate3(grid) & ~grid, origin=origin)


def border_band_mask(mask: BitMask, bounds: tuple[int, int] | None = None) -> BitMask:
    """Band around the mask border: 3x3 dilation minus 3x3 erosion."""
    grid, origin = _expanded(mask, bounds)
    return BitMask(bits=_dilate3(grid) & ~_erode3(grid), origin=origin)
