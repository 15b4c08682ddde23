"""Dense motion-conditioning volumes: Gaussian splatting, file I/O, previews.

A trajectory set rasterizes into an L x H x W x 3 float volume where each
track contributes, per frame, a truncated 2D Gaussian peak scaled by the
track's confidence. Overlapping contributions combine by element-wise max so
the peak-equals-confidence property survives crossings.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import VolumeFormatError
from .raster import fill_disc
from .tracks import TrajectorySet, denormalize_array
from .validation import check_dimensions

MAGIC = b"MVOL"
FORMAT_VERSION = 1
DTYPE_F32_LE = 0
_HEADER = struct.Struct("<4sIIIIIB3s")  # magic, version, L, H, W, C, dtype, reserved
HEADER_SIZE = _HEADER.size  # 28 bytes incl. dtype byte and 3 reserved bytes

CHANNELS = 3

# No element count above this is accepted when reading; guards against
# allocating from a corrupt header.
_MAX_ELEMENTS = 1 << 31


@dataclass
class SigmaConfig:
    """Gaussian kernel geometry relative to the raster resolution."""

    sigma_fraction: float = 0.01
    truncation_radius_sigmas: float = 3.0

    def __post_init__(self):
        if not self.sigma_fraction > 0:
            raise ValueError(f"sigma_fraction: must be > 0, got {self.sigma_fraction}")
        if not self.truncation_radius_sigmas >= 1:
            raise ValueError(
                f"truncation_radius_sigmas: must be >= 1, got {self.truncation_radius_sigmas}"
            )

    def sigma_px(self, height: int, width: int) -> float:
        return self.sigma_fraction * min(height, width)


@dataclass(eq=False)
class MotionVolume:
    """Dense conditioning tensor indexed [frame][row][col][channel] in [0, 1]."""

    data: np.ndarray
    sigma_px: float | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 4:
            raise ValueError(f"volume data: expected 4 dims, got {self.data.ndim}")
        if self.data.shape[3] != CHANNELS:
            raise ValueError(f"volume data: expected {CHANNELS} channels, got {self.data.shape[3]}")
        if self.data.size and (self.data.min() < 0.0 or self.data.max() > 1.0):
            raise ValueError("volume data: values must lie in [0, 1]")
        first = self.data[..., :1]
        if not np.array_equal(self.data, np.repeat(first, CHANNELS, axis=3)):
            raise ValueError("volume data: channels must be identical copies")

    @property
    def length(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def channels(self) -> int:
        return self.data.shape[3]

    def __eq__(self, other) -> bool:
        if not isinstance(other, MotionVolume):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)


def kernel_value(d_sq: float, sigma: float) -> float:
    """Gaussian kernel value at squared distance ``d_sq``, peak exactly 1."""
    if sigma <= 0:
        raise ValueError(f"sigma: must be > 0, got {sigma}")
    return float(np.exp(-float(d_sq) / (2.0 * sigma * sigma)))


def _splat_max(frame: np.ndarray, cx: float, cy: float, peak: float, sigma: float, radius: float):
    h, w = frame.shape
    r0 = max(int(np.ceil(cy - radius)), 0)
    r1 = min(int(np.floor(cy + radius)), h - 1)
    c0 = max(int(np.ceil(cx - radius)), 0)
    c1 = min(int(np.floor(cx + radius)), w - 1)
    if r0 > r1 or c0 > c1:
        return
    rows = np.arange(r0, r1 + 1, dtype=np.float64)[:, None]
    cols = np.arange(c0, c1 + 1, dtype=np.float64)[None, :]
    d_sq = (cols - cx) ** 2 + (rows - cy) ** 2
    values = peak * np.exp(-d_sq / (2.0 * sigma * sigma))
    values[d_sq > radius * radius] = 0.0
    region = frame[r0 : r1 + 1, c0 : c1 + 1]
    np.maximum(region, values.astype(np.float32), out=region)


def rasterize(
    traj_set: TrajectorySet, height: int, width: int, cfg: SigmaConfig | None = None
) -> MotionVolume:
    """Rasterize a trajectory set into a motion volume.

    Each track places a Gaussian of peak equal to its confidence at every
    frame's (subpixel) position; the kernel is evaluated at integer pixel
    centers and cut off beyond the truncation radius. Points outside the
    frame keep only their in-bounds tail.
    """
    width, height = check_dimensions(width, height)
    cfg = cfg or SigmaConfig()
    sigma = cfg.sigma_px(height, width)
    radius = cfg.truncation_radius_sigmas * sigma
    frames = np.zeros((traj_set.length_frames, height, width), dtype=np.float32)
    for track in traj_set.tracks:
        px = denormalize_array(track.points, width, height)
        for l in range(traj_set.length_frames):
            _splat_max(frames[l], px[l, 0], px[l, 1], track.confidence, sigma, radius)
    data = np.repeat(frames[:, :, :, None], CHANNELS, axis=3)
    return MotionVolume(data=data, sigma_px=sigma)


def write_volume(volume: MotionVolume) -> bytes:
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        volume.length,
        volume.height,
        volume.width,
        volume.channels,
        DTYPE_F32_LE,
        b"\x00\x00\x00",
    )
    return header + np.ascontiguousarray(volume.data, dtype="<f4").tobytes()


def read_volume(data: bytes) -> MotionVolume:
    if len(data) < HEADER_SIZE:
        raise VolumeFormatError(f"file too short for header ({len(data)} bytes)")
    magic, version, length, height, width, channels, dtype, reserved = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise VolumeFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VolumeFormatError(f"unsupported format version {version}")
    if dtype != DTYPE_F32_LE:
        raise VolumeFormatError(f"unsupported dtype code {dtype}")
    if reserved != b"\x00\x00\x00":
        raise VolumeFormatError("reserved header bytes must be zero")
    dims = (length, height, width, channels)
    if any(d < 1 for d in dims):
        raise VolumeFormatError(f"invalid dimensions {dims}")
    n_elements = length * height * width * channels
    if n_elements > _MAX_ELEMENTS:
        raise VolumeFormatError(f"dimension overflow: {dims}")
    expected = HEADER_SIZE + 4 * n_elements
    if len(data) != expected:
        raise VolumeFormatError(
            f"truncated payload: expected {expected} bytes, got {len(data)}"
        )
    array = np.frombuffer(data, dtype="<f4", offset=HEADER_SIZE).reshape(dims)
    try:
        return MotionVolume(data=array.copy())
    except ValueError as exc:
        raise VolumeFormatError(str(exc)) from exc


def write_volume_file(volume: MotionVolume, path: str | Path) -> None:
    Path(path).write_bytes(write_volume(volume))


def read_volume_file(path: str | Path) -> MotionVolume:
    return read_volume(Path(path).read_bytes())


def export_frames_png(volume: MotionVolume, directory: str | Path) -> list[Path]:
    """Write each frame's channel 0 as an 8-bit grayscale PNG.

    Quantization is round-half-up, so 0.5 maps to 128. Returns the written
    paths in frame order; filenames carry zero-padded frame indices.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []
    for l in range(volume.length):
        gray = np.floor(volume.data[l, :, :, 0].astype(np.float64) * 255.0 + 0.5)
        gray = np.clip(gray, 0, 255).astype(np.uint8)
        path = directory / f"frame_{l:05d}.png"
        Image.fromarray(gray, mode="L").save(path)
        paths.append(path)
    return paths


def render_preview_video(
    traj_set: TrajectorySet, height: int, width: int, dot_radius: float = 3.0
) -> list[np.ndarray]:
    """Deterministic stand-in for a video generator.

    Produces one black RGB frame per trajectory frame with a filled white
    disc at each track's position, so downstream point tracking can recover
    the conditioning trajectories.
    """
    width, height = check_dimensions(width, height)
    frames: list[np.ndarray] = []
    centers = [denormalize_array(track.points, width, height) for track in traj_set.tracks]
    for l in range(traj_set.length_frames):
        frame = np.zeros((height, width, 3), dtype=np.uint8)
        for px in centers:
            fill_disc(frame, px[l, 0], px[l, 1], dot_radius, (255, 255, 255))
        frames.append(frame)
    return frames
