"""Input validation helpers shared across the package."""
from __future__ import annotations

import numpy as np


class InvalidInputError(ValueError):
    """Raised when an operation receives input that violates its contract."""


class DataError(ValueError):
    """Raised when an external file (model, gt, csv) is present but malformed."""


def check_rgb_image(image) -> np.ndarray:
    """Coerce ``image`` to an HxWx3 uint8 array.

    Grayscale input is replicated across channels. Anything that is not an
    8-bit raster (or safely castable to one) raises InvalidInputError.
    """
    arr = np.asarray(image)
    if arr.ndim == 2:
        arr = np.stack([arr, arr, arr], axis=-1)
    if arr.ndim != 3 or arr.shape[2] < 3:
        raise InvalidInputError(f"expected an RGB raster, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError("image has a zero dimension")
    if arr.dtype != np.uint8:
        if not np.issubdtype(arr.dtype, np.number):
            raise InvalidInputError(f"non-numeric image dtype {arr.dtype}")
        if arr.min() < 0 or arr.max() > 255:
            raise InvalidInputError("image values outside [0, 255]")
        arr = arr.astype(np.uint8)
    return np.ascontiguousarray(arr[:, :, :3])


def check_channel_grid(values) -> np.ndarray:
    """Validate a single 8-bit channel plane."""
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"expected a 2-d channel grid, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise InvalidInputError(f"channel grid must be uint8, got {arr.dtype}")
    return arr


def check_box(box) -> tuple[int, int, int, int]:
    """Validate an integer (x, y, width, height) box with positive extent."""
    try:
        x, y, w, h = (int(v) for v in box)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed box {box!r}") from exc
    if w <= 0 or h <= 0:
        raise InvalidInputError(f"box {box!r} has non-positive extent")
    return x, y, w, h
