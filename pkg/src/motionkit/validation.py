"""Input validation helpers used across the toolkit."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def check_positive_int(name: str, value) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValueError(f"{name}: must be an integer, got {value!r}")
    if value < 1:
        raise ValueError(f"{name}: must be >= 1, got {value}")
    return int(value)


def check_dimensions(width, height) -> tuple[int, int]:
    """Validate raster dimensions in pixels."""
    return check_positive_int("width", width), check_positive_int("height", height)


def check_unit_interval(name: str, value) -> float:
    value = float(value)
    if not np.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name}: must lie in [0, 1], got {value}")
    return value


def check_finite(name: str, array: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name}: contains non-finite values")
    return array


def as_point_array(points: Sequence | np.ndarray, name: str = "points") -> np.ndarray:
    """Coerce a sequence of (x, y) pairs to a float64 array of shape (N, 2)."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name}: expected shape (N, 2), got {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name}: must contain at least one point")
    return check_finite(name, arr)


def check_image_rgb(image: np.ndarray, width: int, height: int) -> np.ndarray:
    """Validate an RGB uint8 raster against expected dimensions."""
    image = np.asarray(image)
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"image: expected uint8 RGB of shape (H, W, 3), got {image.dtype} {image.shape}")
    if image.shape[0] != height or image.shape[1] != width:
        raise ValueError(
            f"image: dimension mismatch, image is {image.shape[1]}x{image.shape[0]} "
            f"but trajectory set declares {width}x{height}"
        )
    return image
