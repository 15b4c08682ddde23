"""Hard-edged drawing primitives on numpy rasters.

Everything here is integer-pixel, non-antialiased, and deterministic, so
rendered bytes are reproducible across runs.
"""

from __future__ import annotations

import numpy as np


def _clipped_box(h: int, w: int, cx: float, cy: float, reach: float):
    r0 = max(int(np.ceil(cy - reach)), 0)
    r1 = min(int(np.floor(cy + reach)), h - 1)
    c0 = max(int(np.ceil(cx - reach)), 0)
    c1 = min(int(np.floor(cx + reach)), w - 1)
    if r0 > r1 or c0 > c1:
        return None
    return r0, r1, c0, c1


def fill_disc(image: np.ndarray, cx: float, cy: float, radius: float, color) -> None:
    """Fill pixels within ``radius`` of (cx, cy) in place."""
    if radius < 0:
        raise ValueError(f"radius: must be >= 0, got {radius}")
    box = _clipped_box(image.shape[0], image.shape[1], cx, cy, radius)
    if box is None:
        return
    r0, r1, c0, c1 = box
    rows = np.arange(r0, r1 + 1, dtype=np.float64)[:, None]
    cols = np.arange(c0, c1 + 1, dtype=np.float64)[None, :]
    mask = (cols - cx) ** 2 + (rows - cy) ** 2 <= radius * radius
    image[r0 : r1 + 1, c0 : c1 + 1][mask] = color


def fill_segment(image: np.ndarray, p0, p1, half_width: float, color) -> None:
    """Fill pixels within ``half_width`` of the segment p0-p1 in place."""
    x0, y0 = float(p0[0]), float(p0[1])
    x1, y1 = float(p1[0]), float(p1[1])
    cx0, cx1 = min(x0, x1), max(x0, x1)
    cy0, cy1 = min(y0, y1), max(y0, y1)
    reach = half_width
    r0 = max(int(np.ceil(cy0 - reach)), 0)
    r1 = min(int(np.floor(cy1 + reach)), image.shape[0] - 1)
    c0 = max(int(np.ceil(cx0 - reach)), 0)
    c1 = min(int(np.floor(cx1 + reach)), image.shape[1] - 1)
    if r0 > r1 or c0 > c1:
        return
    rows = np.arange(r0, r1 + 1, dtype=np.float64)[:, None]
    cols = np.arange(c0, c1 + 1, dtype=np.float64)[None, :]
    dx, dy = x1 - x0, y1 - y0
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0.0:
        fill_disc(image, x0, y0, half_width, color)
        return
    t = ((cols - x0) * dx + (rows - y0) * dy) / seg_sq
    t = np.clip(t, 0.0, 1.0)
    dist_sq = (cols - (x0 + t * dx)) ** 2 + (rows - (y0 + t * dy)) ** 2
    mask = dist_sq <= half_width * half_width
    image[r0 : r1 + 1, c0 : c1 + 1][mask] = color


def fill_triangle(image: np.ndarray, a, b, c, color) -> None:
    """Fill a triangle given by three (x, y) vertices in place."""
    xs = [float(a[0]), float(b[0]), float(c[0])]
    ys = [float(a[1]), float(b[1]), float(c[1])]
    r0 = max(int(np.ceil(min(ys))), 0)
    r1 = min(int(np.floor(max(ys))), image.shape[0] - 1)
    c0 = max(int(np.ceil(min(xs))), 0)
    c1 = min(int(np.floor(max(xs))), image.shape[1] - 1)
    if r0 > r1 or c0 > c1:
        return
    rows = np.arange(r0, r1 + 1, dtype=np.float64)[:, None]
    cols = np.arange(c0, c1 + 1, dtype=np.float64)[None, :]

    def edge(px, py, qx, qy):
        return (cols - px) * (qy - py) - (rows - py) * (qx - px)

    e0 = edge(xs[0], ys[0], xs[1], ys[1])
    e1 = edge(xs[1], ys[1], xs[2], ys[2])
    e2 = edge(xs[2], ys[2], xs[0], ys[0])
    mask = ((e0 >= 0) & (e1 >= 0) & (e2 >= 0)) | ((e0 <= 0) & (e1 <= 0) & (e2 <= 0))
    image[r0 : r1 + 1, c0 : c1 + 1][mask] = color
