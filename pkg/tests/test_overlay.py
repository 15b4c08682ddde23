import hashlib

import numpy as np
import pytest
from PIL import Image
import io

from motionkit.overlay import OverlayStyle, compose_vlm_image, draw_overlay
from motionkit.tracks import TrackKind

from conftest import make_set, make_track


def checkerboard(width=64, height=48):
    image = np.zeros((height, width, 3), dtype=np.uint8)
    ys, xs = np.mgrid[0:height, 0:width]
    image[(ys // 8 + xs // 8) % 2 == 0] = (120, 130, 140)
    return image


def pixel_hash(image: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(image).tobytes()).hexdigest()


class TestDrawOverlay:
    def test_empty_set_is_noop(self):
        image = checkerboard()
        traj = make_set([make_track(points=[(0.1, 0.1), (0.2, 0.2)])], width=64, height=48)
        traj.tracks = []
        out = draw_overlay(image, traj)
        assert np.array_equal(out, image)
        assert out is not image

    def test_input_not_modified(self):
        image = checkerboard()
        before = image.copy()
        traj = make_set([make_track(points=[(0.2, 0.2), (0.8, 0.8)])], width=64, height=48)
        draw_overlay(image, traj)
        assert np.array_equal(image, before)

    def test_static_track_disc_only(self):
        image = np.zeros((48, 64, 3), dtype=np.uint8)
        traj = make_set(
            [make_track(kind=TrackKind.STATIC, confidence=0.5, points=[(0.5, 0.5)] * 4)],
            width=64,
            height=48,
        )
        style = OverlayStyle(point_radius=3.0)
        out = draw_overlay(image, traj, style)
        changed = np.argwhere((out != image).any(axis=2))
        assert len(changed) > 0
        center = np.array([24, 32])  # row, col
        distances = np.sqrt(((changed - center) ** 2).sum(axis=1))
        assert distances.max() <= 3.0 + 1e-9

    def test_horizontal_arrow_points_right(self):
        image = np.zeros((48, 64, 3), dtype=np.uint8)
        traj = make_set(
            [make_track(points=[(10 / 64, 24 / 48), (40 / 64, 24 / 48)])], width=64, height=48
        )
        out = draw_overlay(image, traj)
        # Ahead of the endpoint: untouched background.
        assert np.array_equal(out[24, 44:64], image[24, 44:64])
        # Behind the endpoint: polyline or arrowhead colored.
        assert (out[24, 36] != 0).any()
        # Arrowhead has vertical extent behind the tip that exceeds the line width.
        wings = np.argwhere((out[:, 33] != 0).any(axis=1))
        assert wings.size > 0
        assert wings.max() - wings.min() > 3

    def test_dimension_mismatch(self):
        image = np.zeros((32, 32, 3), dtype=np.uint8)
        traj = make_set([make_track(points=[(0.1, 0.1), (0.2, 0.2)])], width=64, height=48)
        with pytest.raises(ValueError, match="dimension mismatch"):
            draw_overlay(image, traj)

    def test_colors_by_kind(self):
        image = np.zeros((64, 64, 3), dtype=np.uint8)
        traj = make_set(
            [
                make_track("u", TrackKind.USER, 1.0, [(0.1, 0.1), (0.4, 0.1)]),
                make_track("r", TrackKind.REFINED_USER, 1.0, [(0.1, 0.5), (0.4, 0.5)]),
                make_track("s", TrackKind.SECONDARY, 0.5, [(0.1, 0.9), (0.4, 0.9)]),
            ],
            width=64,
            height=64,
        )
        out = draw_overlay(image, traj)
        green = out[6, 16]
        red = out[32, 16]
        blue = out[57, 16]
        assert green[1] > green[0] and green[1] > green[2]
        assert red[0] > red[1] and red[0] > red[2]
        assert blue[2] > blue[0] and blue[2] > blue[1]

    def test_pixels_outside_envelope_unchanged(self):
        image = checkerboard()
        traj = make_set([make_track(points=[(0.3, 0.3), (0.6, 0.6)])], width=64, height=48)
        out = draw_overlay(image, traj)
        changed = np.argwhere((out != image).any(axis=2))
        # Everything drawn sits near the segment between the two points.
        p0 = np.array([0.3 * 48, 0.3 * 64])  # (row, col) = (y*H, x*W)
        p1 = np.array([0.6 * 48, 0.6 * 64])
        for rc in changed:
            t = np.clip(np.dot(rc - p0, p1 - p0) / np.dot(p1 - p0, p1 - p0), 0, 1)
            dist = np.linalg.norm(rc - (p0 + t * (p1 - p0)))
            assert dist <= 12.0  # point radius + arrowhead reach


class TestComposeVlmImage:
    def test_deterministic_bytes(self):
        image = checkerboard()
        traj = make_set([make_track(points=[(0.2, 0.4), (0.7, 0.5)])], width=64, height=48)
        assert compose_vlm_image(image, traj) == compose_vlm_image(image, traj)

    def test_golden_pixel_hashes(self):
        # Frozen from the first verified render of these fixtures.
        image = checkerboard()
        fixtures = {
            "single_user": make_set(
                [make_track("u", TrackKind.USER, 1.0, [(0.2, 0.3), (0.8, 0.6)])],
                width=64,
                height=48,
            ),
            "static_anchor": make_set(
                [make_track("a", TrackKind.STATIC, 0.5, [(0.5, 0.5), (0.5, 0.5)])],
                width=64,
                height=48,
            ),
            "mixed": make_set(
                [
                    make_track("u", TrackKind.USER, 1.0, [(0.1, 0.2), (0.5, 0.2)]),
                    make_track("s", TrackKind.SECONDARY, 0.5, [(0.3, 0.8), (0.7, 0.6)]),
                ],
                width=64,
                height=48,
            ),
        }
        golden = {
            "single_user": "0d9cef8e2e8aaf2a9c7462ee3ea2a06530aff7e9ef65e18c3a4612203c066edf",
            "static_anchor": "632a40221159eb1e4a1c4a294190cdb7d02a2b2b358136c93d7a6192ef84cc2d",
            "mixed": "cfeda4da2dc243cc1ffbb8c892cf1a40d156de085c1d618aced75781284bf724",
        }
        for name, traj in fixtures.items():
            png = compose_vlm_image(image, traj)
            decoded = np.asarray(Image.open(io.BytesIO(png)).convert("RGB"))
            assert pixel_hash(decoded) == golden[name], name
