"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from motionkit.bench_fixture import build_reference_benchmark
from motionkit.tracks import Track, TrackKind, TrajectorySet


def make_track(
    track_id: str = "t0",
    kind: TrackKind = TrackKind.USER,
    confidence: float = 1.0,
    points=None,
) -> Track:
    if points is None:
        points = [(0.2, 0.3), (0.4, 0.5), (0.6, 0.4)]
    return Track(id=track_id, kind=kind, confidence=confidence, points=points)


def make_set(
    tracks: list[Track],
    length: int | None = None,
    width: int = 64,
    height: int = 64,
    fps: float = 4.0,
    prompt: str | None = None,
) -> TrajectorySet:
    if length is None:
        length = tracks[0].length
    return TrajectorySet(
        tracks=tracks,
        length_frames=length,
        image_width=width,
        image_height=height,
        fps=fps,
        prompt=prompt,
    )


def random_walk_track(
    track_id: str,
    length: int,
    rng: np.random.Generator,
    max_step_px: float,
    width: int,
    height: int,
    margin_px: float = 10.0,
) -> Track:
    """A smooth in-bounds pixel random walk, returned in normalized coords."""
    pos = np.array(
        [
            rng.uniform(margin_px, width - margin_px),
            rng.uniform(margin_px, height - margin_px),
        ]
    )
    points = [pos.copy()]
    for _ in range(length - 1):
        step = rng.uniform(-max_step_px, max_step_px, size=2)
        pos = np.clip(pos + step, margin_px, [width - margin_px, height - margin_px])
        points.append(pos.copy())
    arr = np.asarray(points) / np.array([width, height], dtype=np.float64)
    return Track(id=track_id, kind=TrackKind.USER, confidence=1.0, points=arr)


@pytest.fixture(scope="session")
def reference_benchmark(tmp_path_factory):
    root = tmp_path_factory.mktemp("refbench")
    return root, build_reference_benchmark(root)
