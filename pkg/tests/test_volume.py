import math

import numpy as np
import pytest
from PIL import Image

from motionkit.errors import VolumeFormatError
from motionkit.tracks import Track, TrackKind
from motionkit.volume import (
    HEADER_SIZE,
    MotionVolume,
    SigmaConfig,
    export_frames_png,
    kernel_value,
    rasterize,
    read_volume,
    render_preview_video,
    write_volume,
)

from conftest import make_set, make_track


def static_track_at_pixel(px, py, width, height, length=8, confidence=1.0, track_id="s"):
    return make_track(
        track_id,
        TrackKind.USER,
        confidence,
        [(px / width, py / height)] * length,
    )


def brute_force_volume(traj_set, height, width, cfg):
    """Independent per-pixel loop using only kernel_value and max."""
    sigma = cfg.sigma_fraction * min(height, width)
    radius = cfg.truncation_radius_sigmas * sigma
    out = np.zeros((traj_set.length_frames, height, width), dtype=np.float64)
    for track in traj_set.tracks:
        for l in range(traj_set.length_frames):
            cx = track.points[l, 0] * width
            cy = track.points[l, 1] * height
            for r in range(height):
                for c in range(width):
                    d_sq = (c - cx) ** 2 + (r - cy) ** 2
                    if d_sq > radius * radius:
                        continue
                    value = track.confidence * kernel_value(d_sq, sigma)
                    out[l, r, c] = max(out[l, r, c], value)
    return out.astype(np.float32)


class TestKernel:
    def test_peak_is_one(self):
        assert kernel_value(0.0, 2.0) == 1.0

    def test_formula_values(self):
        assert abs(kernel_value(4.0, 2.0) - math.exp(-0.5)) < 1e-12
        assert abs(kernel_value(4.0, 2.0) - 0.606531) < 1e-6
        for sigma in (0.5, 2.0, 11.0):
            assert abs(kernel_value(9 * sigma**2, sigma) - math.exp(-4.5)) < 1e-12
        assert abs(kernel_value(9 * 4.0, 2.0) - 0.011109) < 1e-6

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            kernel_value(1.0, 0.0)
        with pytest.raises(ValueError):
            kernel_value(1.0, -2.0)


class TestRasterize:
    def test_peak_at_pixel(self):
        traj = make_set([static_track_at_pixel(32, 16, 64, 64)], width=64, height=64)
        volume = rasterize(traj, 64, 64)
        for l in range(8):
            for c in range(3):
                assert volume.data[l, 16, 32, c] == 1.0

    def test_peak_scales_with_confidence(self):
        traj = make_set(
            [static_track_at_pixel(32, 16, 64, 64, confidence=0.5)], width=64, height=64
        )
        volume = rasterize(traj, 64, 64)
        assert volume.data[0, 16, 32, 0] == 0.5

    def test_confidence_linearity_exact(self):
        track_full = static_track_at_pixel(20.3, 17.8, 48, 48, length=3)
        track_half = static_track_at_pixel(20.3, 17.8, 48, 48, length=3, confidence=0.5)
        volume_full = rasterize(make_set([track_full], width=48, height=48), 48, 48)
        volume_half = rasterize(make_set([track_half], width=48, height=48), 48, 48)
        assert np.array_equal(volume_half.data, np.float32(0.5) * volume_full.data)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        cfg = SigmaConfig(sigma_fraction=0.08, truncation_radius_sigmas=3.0)
        tracks = [
            Track(
                id=f"t{i}",
                kind=TrackKind.USER,
                confidence=float(rng.uniform(0.2, 1.0)),
                points=rng.uniform(-0.1, 1.1, size=(4, 2)),
            )
            for i in range(3)
        ]
        traj = make_set(tracks, width=24, height=20)
        volume = rasterize(traj, 20, 24, cfg)
        expected = brute_force_volume(traj, 20, 24, cfg)
        assert np.allclose(volume.data[:, :, :, 0], expected, atol=1e-7)

    def test_channels_identical(self):
        rng = np.random.default_rng(5)
        traj = make_set(
            [make_track(points=rng.uniform(0, 1, (6, 2)))], width=32, height=32
        )
        volume = rasterize(traj, 32, 32, SigmaConfig(sigma_fraction=0.1))
        assert np.array_equal(volume.data[..., 0], volume.data[..., 1])
        assert np.array_equal(volume.data[..., 0], volume.data[..., 2])

    def test_duplicate_track_is_noop(self):
        rng = np.random.default_rng(6)
        pts = rng.uniform(0, 1, (5, 2))
        one = make_set([make_track("a", points=pts)], width=32, height=32)
        two = make_set(
            [make_track("a", points=pts), make_track("b", points=pts.copy())],
            width=32,
            height=32,
        )
        cfg = SigmaConfig(sigma_fraction=0.05)
        assert rasterize(one, 32, 32, cfg) == rasterize(two, 32, 32, cfg)

    def test_monotone_in_confidence(self):
        rng = np.random.default_rng(7)
        pts = rng.uniform(0, 1, (5, 2))
        cfg = SigmaConfig(sigma_fraction=0.06)
        low = rasterize(
            make_set([make_track("a", confidence=0.4, points=pts)], width=32, height=32),
            32,
            32,
            cfg,
        )
        high = rasterize(
            make_set([make_track("a", confidence=0.9, points=pts)], width=32, height=32),
            32,
            32,
            cfg,
        )
        assert np.all(high.data >= low.data)

    def test_translation_equivariance(self):
        cfg = SigmaConfig(sigma_fraction=0.05, truncation_radius_sigmas=3.0)
        width = height = 48
        rng = np.random.default_rng(8)
        pts_px = rng.uniform(15, 30, (4, 2))
        shift = np.array([5.0, 7.0])
        base = make_set(
            [make_track(points=pts_px / width)], width=width, height=height
        )
        moved = make_set(
            [make_track(points=(pts_px + shift) / width)], width=width, height=height
        )
        vol_a = rasterize(base, height, width, cfg).data
        vol_b = rasterize(moved, height, width, cfg).data
        assert np.array_equal(
            vol_a[:, : height - 7, : width - 5], vol_b[:, 7:, 5:]
        )

    def test_out_of_frame_tail(self):
        # Center one pixel outside the left edge: only the inner tail lands.
        width = height = 32
        cfg = SigmaConfig(sigma_fraction=0.1, truncation_radius_sigmas=3.0)
        traj = make_set(
            [static_track_at_pixel(-1.0, 16.0, width, height, length=1)],
            width=width,
            height=height,
        )
        volume = rasterize(traj, height, width, cfg)
        sigma = cfg.sigma_px(height, width)
        expected_col0 = kernel_value(1.0, sigma)
        assert abs(volume.data[0, 16, 0, 0] - expected_col0) < 1e-6
        assert volume.data.max() < 1.0

    def test_far_out_of_frame_contributes_nothing(self):
        traj = make_set(
            [static_track_at_pixel(-500.0, -500.0, 32, 32, length=2)], width=32, height=32
        )
        volume = rasterize(traj, 32, 32)
        assert volume.data.max() == 0.0

    def test_values_in_unit_interval(self):
        rng = np.random.default_rng(9)
        tracks = [
            make_track(f"t{i}", confidence=float(rng.uniform(0, 1)), points=rng.uniform(0, 1, (4, 2)))
            for i in range(6)
        ]
        volume = rasterize(make_set(tracks, width=40, height=40), 40, 40, SigmaConfig(0.2))
        assert volume.data.min() >= 0.0
        assert volume.data.max() <= 1.0

    def test_bad_dims(self):
        traj = make_set([make_track(points=[(0.5, 0.5)] * 2)])
        with pytest.raises(ValueError):
            rasterize(traj, 0, 10)


class TestVolumeFile:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(21)
        base = rng.random((3, 5, 7, 1), dtype=np.float32)
        data = np.repeat(base, 3, axis=3)
        volume = MotionVolume(data=data)
        recovered = read_volume(write_volume(volume))
        assert recovered == volume
        assert recovered.data.tobytes() == volume.data.astype("<f4").tobytes()

    def test_size_arithmetic(self):
        volume = MotionVolume(data=np.zeros((1, 1, 1, 3), dtype=np.float32))
        blob = write_volume(volume)
        assert HEADER_SIZE == 28
        assert len(blob) - HEADER_SIZE == 12

    def test_corrupt_magic(self):
        blob = bytearray(write_volume(MotionVolume(np.zeros((1, 2, 2, 3), np.float32))))
        blob[:4] = b"NOPE"
        with pytest.raises(VolumeFormatError, match="magic"):
            read_volume(bytes(blob))

    def test_truncated_payload(self):
        blob = write_volume(MotionVolume(np.zeros((1, 2, 2, 3), np.float32)))
        with pytest.raises(VolumeFormatError, match="truncated"):
            read_volume(blob[:-4])

    def test_dim_overflow(self):
        blob = bytearray(write_volume(MotionVolume(np.zeros((1, 1, 1, 3), np.float32))))
        blob[8:12] = (2**31 - 1).to_bytes(4, "little")
        with pytest.raises(VolumeFormatError):
            read_volume(bytes(blob))

    def test_bad_version_and_dtype(self):
        good = write_volume(MotionVolume(np.zeros((1, 1, 1, 3), np.float32)))
        wrong_version = bytearray(good)
        wrong_version[4:8] = (9).to_bytes(4, "little")
        with pytest.raises(VolumeFormatError, match="version"):
            read_volume(bytes(wrong_version))
        wrong_dtype = bytearray(good)
        wrong_dtype[24] = 7
        with pytest.raises(VolumeFormatError, match="dtype"):
            read_volume(bytes(wrong_dtype))


class TestExportFrames:
    def test_quantization(self, tmp_path):
        data = np.zeros((3, 2, 2, 3), dtype=np.float32)
        data[1] = 1.0
        data[2] = 0.5
        paths = export_frames_png(MotionVolume(data), tmp_path)
        assert [p.name for p in paths] == ["frame_00000.png", "frame_00001.png", "frame_00002.png"]
        frames = [np.asarray(Image.open(p)) for p in paths]
        assert frames[0].max() == 0
        assert frames[1].min() == 255
        assert np.all(frames[2] == 128)


class TestPreviewVideo:
    def test_frame_count_and_disc(self):
        pts = [(8 / 32, 8 / 32), (16 / 32, 8 / 32), (24 / 32, 8 / 32)]
        traj = make_set([make_track(points=pts)], width=32, height=32)
        frames = render_preview_video(traj, 32, 32, dot_radius=2.0)
        assert len(frames) == 3
        centers = [(8, 8), (16, 8), (24, 8)]
        for frame, (cx, cy) in zip(frames, centers):
            assert frame[cy, cx].tolist() == [255, 255, 255]
            assert frame[cy + 10, cx].tolist() == [0, 0, 0]
            assert frame.shape == (32, 32, 3)

    def test_deterministic(self):
        traj = make_set([make_track(points=[(0.3, 0.6)] * 4)], width=40, height=30)
        a = render_preview_video(traj, 30, 40, 3.0)
        b = render_preview_video(traj, 30, 40, 3.0)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
