"""Confidence-conditioned trajectory degradation.

Three sequential corruptions, each scaled linearly by an intensity I drawn
from the track's confidence score: an affine perturbation about the
trajectory centroid, keypoint linearization, and Savitzky-Golay smoothing.
A score of 1.0 always maps to I = 0 and leaves the track untouched; a score
of 0.5 draws I uniformly from [0.1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.signal import savgol_filter

from .tracks import Track, denormalize_array, normalize_array
from .validation import check_dimensions, check_unit_interval


@dataclass
class DegradeConfig:
    """Degradation magnitudes and schedule bounds.

    theta_max is in degrees, delta_trans in pixels; delta_scale is a
    unitless factor around 1. l_min_fraction bounds the keypoint schedule,
    w_min and poly_order parameterize the smoothing filter, and
    intensity_range_low_conf is the uniform range that a 0.5-confidence
    track draws its intensity from.
    """

    theta_max: float = 5.0
    delta_scale: float = 0.2
    delta_trans: float = 30.0
    l_min_fraction: float = 0.10
    w_min: int = 3
    poly_order: int = 2
    intensity_range_low_conf: tuple[float, float] = (0.1, 1.0)

    def __post_init__(self):
        if self.theta_max < 0:
            raise ValueError(f"theta_max: must be >= 0, got {self.theta_max}")
        if self.delta_scale < 0:
            raise ValueError(f"delta_scale: must be >= 0, got {self.delta_scale}")
        if self.delta_trans < 0:
            raise ValueError(f"delta_trans: must be >= 0, got {self.delta_trans}")
        if not 0 < self.l_min_fraction <= 1:
            raise ValueError(f"l_min_fraction: must lie in (0, 1], got {self.l_min_fraction}")
        if self.w_min < self.poly_order + 1:
            raise ValueError(
                f"w_min: must be >= poly_order + 1 ({self.poly_order + 1}), got {self.w_min}"
            )
        if len(self.intensity_range_low_conf) != 2:
            raise ValueError("intensity_range_low_conf: expected [low, high]")
        lo = check_unit_interval("intensity_range_low_conf[0]", self.intensity_range_low_conf[0])
        hi = check_unit_interval("intensity_range_low_conf[1]", self.intensity_range_low_conf[1])
        if lo > hi:
            raise ValueError("intensity_range_low_conf: low bound exceeds high bound")
        self.intensity_range_low_conf = (lo, hi)


class AffineDraws(NamedTuple):
    """The random draws behind one affine perturbation."""

    theta_deg: float
    scale_x: float
    scale_y: float
    translate_x: float
    translate_y: float


def intensity_for_score(score: float, cfg: DegradeConfig, seed) -> float:
    """Map a confidence score to a degradation intensity in [0, 1].

    score = 1.0 yields exactly 0. score = 0.5 draws uniformly from
    cfg.intensity_range_low_conf. Other scores generalize by scaling the
    draw with (1 - score) / 0.5; that regime is an extrapolation beyond the
    binary setting the schedule was designed for.
    """
    score = check_unit_interval("score", score)
    if score == 1.0:
        return 0.0
    rng = np.random.default_rng(seed)
    draw = rng.uniform(*cfg.intensity_range_low_conf)
    return float(min(1.0, draw * (1.0 - score) / 0.5))


def sample_affine_draws(intensity: float, cfg: DegradeConfig, seed) -> AffineDraws:
    """Draw rotation, per-axis scale, and translation for one perturbation.

    Draw order is fixed (theta, scale_x, scale_y, translate_x, translate_y)
    so callers can reproduce a pipeline run from the same seed.
    """
    intensity = check_unit_interval("intensity", intensity)
    rng = np.random.default_rng(seed)
    theta_bound = cfg.theta_max * intensity
    scale_bound = cfg.delta_scale * intensity
    trans_bound = cfg.delta_trans * intensity
    theta = rng.uniform(-theta_bound, theta_bound)
    scale_x = 1.0 + rng.uniform(-scale_bound, scale_bound)
    scale_y = 1.0 + rng.uniform(-scale_bound, scale_bound)
    translate_x = rng.uniform(-trans_bound, trans_bound)
    translate_y = rng.uniform(-trans_bound, trans_bound)
    return AffineDraws(theta, scale_x, scale_y, translate_x, translate_y)


def apply_affine_draws(
    track: Track, draws: AffineDraws, width: int, height: int
) -> Track:
    """Apply rotation and scaling about the centroid, then translate.

    Operates in pixel space (translation bounds are in pixels), then maps
    back to normalized coordinates.
    """
    width, height = check_dimensions(width, height)
    px = denormalize_array(track.points, width, height)
    centroid = px.mean(axis=0)
    theta = math.radians(draws.theta_deg)
    rot = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    scale = np.diag([draws.scale_x, draws.scale_y])
    out = (scale @ rot @ (px - centroid).T).T + centroid
    out += np.array([draws.translate_x, draws.translate_y])
    return replace(track, points=normalize_array(out, width, height))


def affine_perturb(
    track: Track, intensity: float, cfg: DegradeConfig, seed, width: int, height: int
) -> Track:
    """Random affine perturbation with magnitudes scaled by ``intensity``."""
    draws = sample_affine_draws(intensity, cfg, seed)
    return apply_affine_draws(track, draws, width, height)


def keypoint_count(length: int, intensity: float, l_min_fraction: float = 0.10) -> int:
    """Keypoint schedule: K = floor(L - (L - L_min) * I), clamped to >= 2."""
    if length < 2:
        raise ValueError(f"length: must be >= 2, got {length}")
    intensity = check_unit_interval("intensity", intensity)
    if not 0 < l_min_fraction <= 1:
        raise ValueError(f"l_min_fraction: must lie in (0, 1], got {l_min_fraction}")
    l_min = l_min_fraction * length
    return max(2, math.floor(length - (length - l_min) * intensity))


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def linearize(track: Track, intensity: float, cfg: DegradeConfig) -> Track:
    """Reduce to K uniformly spaced keypoints and rebuild by linear interpolation.

    Endpoints are always keypoints and are preserved exactly; the output has
    the input's length.
    """
    length = track.length
    k = keypoint_count(length, intensity, cfg.l_min_fraction)
    if k >= length:
        return replace(track, points=track.points.copy())
    step = (length - 1) / (k - 1)
    idx = np.array([_round_half_up(j * step) for j in range(k)], dtype=np.int64)
    idx[-1] = length - 1
    grid = np.arange(length, dtype=np.float64)
    out = np.column_stack(
        [
            np.interp(grid, idx.astype(np.float64), track.points[idx, 0]),
            np.interp(grid, idx.astype(np.float64), track.points[idx, 1]),
        ]
    )
    out[idx] = track.points[idx]
    return replace(track, points=out)


def savgol_window(length: int, intensity: float, cfg: DegradeConfig) -> int:
    """Window schedule: floor(W_min + (L/2 - W_min) * I), odd-adjusted down.

    The floor can land on an even value; the window is then reduced to the
    nearest odd integer that still satisfies the filter's minimum size.
    """
    if length < 2 * cfg.w_min:
        raise ValueError(
            f"length: too short for smoothing, need >= {2 * cfg.w_min}, got {length}"
        )
    intensity = check_unit_interval("intensity", intensity)
    w_max = length / 2.0
    raw = math.floor(cfg.w_min + (w_max - cfg.w_min) * intensity)
    window = raw if raw % 2 == 1 else raw - 1
    minimum = max(cfg.w_min, cfg.poly_order + 1)
    if minimum % 2 == 0:
        minimum += 1
    return max(window, minimum)


def savgol_smooth(track: Track, window: int, poly_order: int) -> Track:
    """Savitzky-Golay smoothing of both coordinate series.

    Interior samples come from least-squares polynomial fits over centered
    windows; boundary samples evaluate the polynomial fitted to the first or
    last full window at their own positions.
    """
    if window % 2 != 1:
        raise ValueError(f"window: must be odd, got {window}")
    if window <= poly_order:
        raise ValueError(f"window: must exceed poly_order ({poly_order}), got {window}")
    if window > track.length:
        raise ValueError(f"window: exceeds track length {track.length}, got {window}")
    if poly_order < 0:
        raise ValueError(f"poly_order: must be >= 0, got {poly_order}")
    smoothed = np.column_stack(
        [
            savgol_filter(track.points[:, 0], window, poly_order, mode="interp"),
            savgol_filter(track.points[:, 1], window, poly_order, mode="interp"),
        ]
    )
    return replace(track, points=smoothed)


def derive_stage_seeds(seed) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """Split a pipeline seed into (intensity, affine) stage seeds."""
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = base.spawn(2)
    return children[0], children[1]


def degrade(
    track: Track,
    score: float,
    cfg: DegradeConfig,
    seed,
    width: int,
    height: int,
) -> tuple[Track, float]:
    """Run the full degradation pipeline on one track.

    Draws the intensity from ``score``, then applies affine perturbation,
    linearization, and smoothing in that order. Returns the degraded track
    and the sampled intensity. A score of 1.0 short-circuits and returns the
    input points unchanged.
    """
    seed_intensity, seed_affine = derive_stage_seeds(seed)
    intensity = intensity_for_score(score, cfg, seed_intensity)
    if intensity == 0.0:
        return replace(track, points=track.points.copy()), 0.0
    out = affine_perturb(track, intensity, cfg, seed_affine, width, height)
    out = linearize(out, intensity, cfg)
    window = savgol_window(track.length, intensity, cfg)
    out = savgol_smooth(out, window, cfg.poly_order)
    return out, intensity
