"""Render trajectory sets onto still images as polylines, points, and arrows.

Color encodes track provenance: green for user input, red for refined user
input, blue for proposed secondary motion and static anchors. Primitives are
hard-edged so output bytes are deterministic.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from PIL import Image

from .raster import fill_disc, fill_segment, fill_triangle
from .tracks import TrackKind, TrajectorySet, denormalize_array
from .validation import check_image_rgb

Color = tuple[int, int, int]

DEFAULT_COLORS: dict[TrackKind, Color] = {
    TrackKind.USER: (0, 200, 0),
    TrackKind.REFINED_USER: (220, 0, 0),
    TrackKind.SECONDARY: (0, 90, 230),
    TrackKind.STATIC: (0, 90, 230),
}

_MIN_SEGMENT = 1e-9


@dataclass(frozen=True)
class OverlayStyle:
    color_by_kind: Mapping[TrackKind, Color] = field(
        default_factory=lambda: dict(DEFAULT_COLORS)
    )
    line_width: float = 3.0
    point_radius: float = 4.0
    arrow_head_len: float = 10.0

    def __post_init__(self):
        for name in ("line_width", "point_radius", "arrow_head_len"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name}: must be > 0, got {getattr(self, name)}")


def _draw_arrowhead(image: np.ndarray, tail, tip, head_len: float, color: Color) -> None:
    direction = np.asarray(tip, dtype=np.float64) - np.asarray(tail, dtype=np.float64)
    norm = float(np.hypot(*direction))
    if norm <= _MIN_SEGMENT:
        return
    direction /= norm
    perp = np.array([-direction[1], direction[0]])
    base = np.asarray(tip, dtype=np.float64) - direction * head_len
    half = 0.5 * head_len
    fill_triangle(image, tip, base + perp * half, base - perp * half, color)


def draw_overlay(
    image: np.ndarray, traj_set: TrajectorySet, style: OverlayStyle | None = None
) -> np.ndarray:
    """Return a copy of ``image`` with the trajectory set drawn on top.

    Each track gets a polyline through its points, a disc at its first
    point, and an arrowhead along its final segment. Static tracks render
    as a disc only. The input raster is never modified.
    """
    style = style or OverlayStyle()
    check_image_rgb(image, traj_set.image_width, traj_set.image_height)
    out = image.copy()
    for track in traj_set.tracks:
        color = style.color_by_kind.get(track.kind, DEFAULT_COLORS[TrackKind.SECONDARY])
        px = denormalize_array(track.points, traj_set.image_width, traj_set.image_height)
        if track.kind is TrackKind.STATIC or track.is_static_geometry():
            fill_disc(out, px[0, 0], px[0, 1], style.point_radius, color)
            continue
        half_width = style.line_width / 2.0
        for a, b in zip(px[:-1], px[1:]):
            if np.hypot(*(b - a)) <= _MIN_SEGMENT:
                continue
            fill_segment(out, a, b, half_width, color)
        fill_disc(out, px[0, 0], px[0, 1], style.point_radius, color)
        # Arrow rides on the last segment with any direction to offer.
        for a in px[-2::-1]:
            if np.hypot(*(px[-1] - a)) > _MIN_SEGMENT:
                _draw_arrowhead(out, a, px[-1], style.arrow_head_len, color)
                break
    return out


def encode_png(image: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    Image.fromarray(image, mode="RGB").save(buffer, format="PNG")
    return buffer.getvalue()


def compose_vlm_image(
    image: np.ndarray, traj_set: TrajectorySet, style: OverlayStyle | None = None
) -> bytes:
    """Draw the overlay and encode it as PNG bytes; deterministic per input."""
    return encode_png(draw_overlay(image, traj_set, style))
