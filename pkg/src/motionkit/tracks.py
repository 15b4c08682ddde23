"""Trajectory data model, coordinate conventions, resampling, and serialization.

Coordinates are normalized to [0, 1] with the origin at the top-left corner
and y increasing downward. Pixel-space coordinates use the same orientation.
All randomness flows through explicit seeds; the functions here are pure.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ManifestError, TrackTextError
from .validation import as_point_array, check_dimensions, check_unit_interval

MANIFEST_VERSION = 1

# Two points closer than this (per axis) count as the same location.
STATIC_TOLERANCE = 1e-9


class Point2(NamedTuple):
    """A 2D point; normalized or pixel units depending on context."""

    x: float
    y: float


class TrackKind(Enum):
    USER = "user"
    REFINED_USER = "refined_user"
    SECONDARY = "secondary"
    STATIC = "static"


@dataclass(eq=False)
class Track:
    """One point track: an (L, 2) coordinate series with kind and confidence.

    ``confidence`` expresses how strictly downstream conditioning should
    follow the track: 1.0 for ground-truth quality, lower values for
    predicted or uncertain motion.
    """

    id: str
    kind: TrackKind
    confidence: float
    points: np.ndarray

    def __post_init__(self):
        if not self.id:
            raise ValueError("track id must be a non-empty string")
        if not isinstance(self.kind, TrackKind):
            raise ValueError(f"track {self.id!r}: kind must be a TrackKind")
        self.confidence = check_unit_interval(f"track {self.id!r} confidence", self.confidence)
        self.points = as_point_array(self.points, f"track {self.id!r} points")
        if self.kind is TrackKind.STATIC and not self.is_static_geometry():
            raise ValueError(f"track {self.id!r}: static track has non-identical points")

    @property
    def length(self) -> int:
        return self.points.shape[0]

    def is_static_geometry(self, tol: float = STATIC_TOLERANCE) -> bool:
        return bool(np.all(np.abs(self.points - self.points[0]) <= tol))

    def point_list(self) -> list[Point2]:
        return [Point2(float(x), float(y)) for x, y in self.points]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Track):
            return NotImplemented
        return (
            self.id == other.id
            and self.kind == other.kind
            and self.confidence == other.confidence
            and np.array_equal(self.points, other.points)
        )


@dataclass(eq=False)
class TrajectorySet:
    """N tracks sharing a frame count, attached to one image raster."""

    tracks: list[Track]
    length_frames: int
    image_width: int
    image_height: int
    fps: float = 4.0
    prompt: str | None = None
    image: str | None = None

    def __post_init__(self):
        if self.length_frames < 1:
            raise ValueError(f"length_frames: must be >= 1, got {self.length_frames}")
        check_dimensions(self.image_width, self.image_height)
        if not self.fps > 0:
            raise ValueError(f"fps: must be > 0, got {self.fps}")
        seen: set[str] = set()
        for track in self.tracks:
            if track.length != self.length_frames:
                raise ValueError(
                    f"track {track.id!r}: track length mismatch "
                    f"(expected {self.length_frames}, got {track.length})"
                )
            if track.id in seen:
                raise ValueError(f"duplicate track id {track.id!r}")
            seen.add(track.id)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrajectorySet):
            return NotImplemented
        return (
            self.tracks == other.tracks
            and self.length_frames == other.length_frames
            and self.image_width == other.image_width
            and self.image_height == other.image_height
            and self.fps == other.fps
            and self.prompt == other.prompt
            and self.image == other.image
        )

    def track_by_id(self, track_id: str) -> Track:
        for track in self.tracks:
            if track.id == track_id:
                return track
        raise KeyError(track_id)


def normalize_points(points: Sequence | np.ndarray, width: int, height: int) -> list[Point2]:
    """Map pixel coordinates to the normalized [0, 1] frame."""
    arr = normalize_array(as_point_array(points), width, height)
    return [Point2(float(x), float(y)) for x, y in arr]


def denormalize_points(points: Sequence | np.ndarray, width: int, height: int) -> list[Point2]:
    """Map normalized coordinates back to pixels; inverse of normalize_points."""
    arr = denormalize_array(as_point_array(points), width, height)
    return [Point2(float(x), float(y)) for x, y in arr]


def normalize_array(points: np.ndarray, width: int, height: int) -> np.ndarray:
    width, height = check_dimensions(width, height)
    return np.asarray(points, dtype=np.float64) / np.array([width, height], dtype=np.float64)


def denormalize_array(points: np.ndarray, width: int, height: int) -> np.ndarray:
    width, height = check_dimensions(width, height)
    return np.asarray(points, dtype=np.float64) * np.array([width, height], dtype=np.float64)


def resample(track: Track, target_len: int) -> Track:
    """Resample a track to ``target_len`` points by linear interpolation.

    The parameterization is by point index, so temporal spacing carried by
    uneven steps is preserved proportionally. Endpoints are kept exactly.
    """
    if target_len < 1:
        raise ValueError(f"target_len: must be >= 1, got {target_len}")
    if track.length == 0:
        raise ValueError("cannot resample an empty track")
    if track.length == target_len:
        return replace(track, points=track.points.copy())
    src = np.linspace(0.0, 1.0, track.length)
    dst = np.linspace(0.0, 1.0, target_len)
    out = np.column_stack(
        [np.interp(dst, src, track.points[:, 0]), np.interp(dst, src, track.points[:, 1])]
    )
    out[0] = track.points[0]
    if target_len > 1:
        out[-1] = track.points[-1]
    return replace(track, points=out)


# --- manifest (de)serialization ---------------------------------------------

def _fmt_float(value: float) -> str:
    # Canonical form: fixed 6 decimals, no exponent.
    return f"{float(value):.6f}"


def _json_str(value: str) -> str:
    return json.dumps(value, ensure_ascii=True)


def serialize_manifest(traj_set: TrajectorySet) -> bytes:
    """Serialize to canonical manifest JSON: sorted keys, 6-decimal floats."""
    parts = ["{"]
    parts.append(f'"fps":{_fmt_float(traj_set.fps)},')
    parts.append(f'"height":{traj_set.image_height},')
    parts.append(f'"image":{_json_str(traj_set.image) if traj_set.image is not None else "null"},')
    parts.append(f'"length":{traj_set.length_frames},')
    parts.append(f'"prompt":{_json_str(traj_set.prompt) if traj_set.prompt is not None else "null"},')
    track_blobs = []
    for track in traj_set.tracks:
        points = ",".join(
            f"[{_fmt_float(x)},{_fmt_float(y)}]" for x, y in track.points
        )
        track_blobs.append(
            "{"
            f'"confidence":{_fmt_float(track.confidence)},'
            f'"id":{_json_str(track.id)},'
            f'"kind":{_json_str(track.kind.value)},'
            f'"points":[{points}]'
            "}"
        )
    parts.append(f'"tracks":[{",".join(track_blobs)}],')
    parts.append(f'"version":{MANIFEST_VERSION},')
    parts.append(f'"width":{traj_set.image_width}')
    parts.append("}")
    return "".join(parts).encode("utf-8")


def _require(obj: dict, key: str, kinds, where: str = ""):
    label = f"{where}{key}"
    if key not in obj:
        raise ManifestError(f"{label}: missing required field")
    value = obj[key]
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise ManifestError(f"{label}: unexpected type {type(value).__name__}")
    return value


def parse_manifest(data: bytes | str) -> TrajectorySet:
    """Parse and validate a trajectory manifest.

    Raises ManifestError naming the offending field on any schema violation.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError("root: expected a JSON object")

    version = _require(doc, "version", int)
    if version != MANIFEST_VERSION:
        raise ManifestError(f"version: unsupported manifest version {version}")
    width = _require(doc, "width", int)
    height = _require(doc, "height", int)
    length = _require(doc, "length", int)
    fps = float(_require(doc, "fps", (int, float)))
    prompt = doc.get("prompt")
    if prompt is not None and not isinstance(prompt, str):
        raise ManifestError("prompt: expected string or null")
    image = doc.get("image")
    if image is not None and not isinstance(image, str):
        raise ManifestError("image: expected string or null")
    raw_tracks = _require(doc, "tracks", list)

    tracks: list[Track] = []
    for i, entry in enumerate(raw_tracks):
        where = f"tracks[{i}]."
        if not isinstance(entry, dict):
            raise ManifestError(f"tracks[{i}]: expected an object")
        track_id = _require(entry, "id", str, where)
        kind_raw = _require(entry, "kind", str, where)
        try:
            kind = TrackKind(kind_raw)
        except ValueError:
            raise ManifestError(f"{where}kind: unknown kind {kind_raw!r}") from None
        confidence = _require(entry, "confidence", (int, float), where)
        points = _require(entry, "points", list, where)
        for j, pair in enumerate(points):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)
            ):
                raise ManifestError(f"{where}points[{j}]: expected a [x, y] number pair")
        if len(points) != length:
            raise ManifestError(
                f"tracks[{i}]: track length mismatch (expected {length}, got {len(points)})"
            )
        try:
            tracks.append(Track(id=track_id, kind=kind, confidence=float(confidence), points=points))
        except ValueError as exc:
            raise ManifestError(f"tracks[{i}]: {exc}") from exc

    try:
        return TrajectorySet(
            tracks=tracks,
            length_frames=length,
            image_width=width,
            image_height=height,
            fps=fps,
            prompt=prompt,
            image=image,
        )
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc


# --- tolerant free-text track parsing ----------------------------------------

_PAIR_RE = re.compile(
    r"\(\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*,"
    r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*\)"
)
# A parenthesized group with a comma that opens like a number is an
# attempted coordinate pair; parenthesized prose is left alone.
_ATTEMPT_RE = re.compile(r"\([^()]*,[^()]*\)")
_NUMERIC_OPEN_RE = re.compile(r"^\(\s*[-+]?(?:\d|\.\d)")
_LABEL_RE = re.compile(r"^\s*([^():]+):")


def _kind_from_label(label: str) -> TrackKind:
    lowered = label.lower()
    if "static" in lowered:
        return TrackKind.STATIC
    if "refined" in lowered:
        return TrackKind.REFINED_USER
    if "user" in lowered:
        return TrackKind.USER
    return TrackKind.SECONDARY


_DEFAULT_CONFIDENCE = {
    TrackKind.USER: 1.0,
    TrackKind.REFINED_USER: 1.0,
    TrackKind.SECONDARY: 0.5,
    TrackKind.STATIC: 0.5,
}


def parse_track_text(text: str) -> list[Track]:
    """Parse labeled coordinate lists out of free-form model output.

    Prose lines are ignored. A line whose prefix before ``:`` contains no
    parenthesis starts a new labeled track; "(x, y)" pairs on that line and
    on following lines belong to it. Labels choose the track kind by keyword
    (static, refined, user), defaulting to secondary.
    """
    pending: list[tuple[str, list[tuple[float, float]]]] = []
    current: list[tuple[float, float]] | None = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        attempts = _ATTEMPT_RE.findall(line)
        valid = _PAIR_RE.findall(line)
        bad = [
            a
            for a in attempts
            if _NUMERIC_OPEN_RE.match(a.strip()) and not _PAIR_RE.fullmatch(a.strip())
        ]
        if bad:
            raise TrackTextError(f"malformed coordinate pair {bad[0]!r}", line=lineno)

        label_match = _LABEL_RE.match(line)
        if label_match:
            label = label_match.group(1).strip()
            track_id = re.sub(r"\[.*?\]", "", label).strip() or label
            pending.append((f"{track_id}\x00{label}", []))
            current = pending[-1][1]
        if valid:
            if current is None:
                pending.append((f"track_{len(pending) + 1}\x00", []))
                current = pending[-1][1]
            current.extend((float(x), float(y)) for x, y in valid)

    tracks: list[Track] = []
    for packed, points in pending:
        if not points:
            continue
        track_id, _, label = packed.partition("\x00")
        kind = _kind_from_label(label or track_id)
        try:
            tracks.append(
                Track(
                    id=track_id,
                    kind=kind,
                    confidence=_DEFAULT_CONFIDENCE[kind],
                    points=points,
                )
            )
        except ValueError as exc:
            raise TrackTextError(f"track {track_id!r}: {exc}") from exc
    if not tracks:
        raise TrackTextError("no parseable track found")
    return tracks


def sample_tracks(
    traj_set: TrajectorySet, count_range: tuple[int, int], seed: int
) -> tuple[TrajectorySet, bool]:
    """Draw a uniform random subset of tracks.

    The subset size is drawn uniformly from ``count_range`` (inclusive).
    Returns the subset and a flag that is True when the range had to be
    clamped to the number of available tracks. Deterministic per seed.
    """
    lo, hi = int(count_range[0]), int(count_range[1])
    if lo < 1 or hi < lo:
        raise ValueError(f"count_range: expected 1 <= lo <= hi, got [{lo}, {hi}]")
    n = len(traj_set.tracks)
    if n == 0:
        raise ValueError("cannot sample from an empty trajectory set")
    clamped = hi > n
    lo, hi = min(lo, n), min(hi, n)
    rng = np.random.default_rng(seed)
    size = int(rng.integers(lo, hi + 1))
    indices = np.sort(rng.choice(n, size=size, replace=False))
    subset = [
        replace(traj_set.tracks[i], points=traj_set.tracks[i].points.copy()) for i in indices
    ]
    return (
        TrajectorySet(
            tracks=subset,
            length_frames=traj_set.length_frames,
            image_width=traj_set.image_width,
            image_height=traj_set.image_height,
            fps=traj_set.fps,
            prompt=traj_set.prompt,
            image=traj_set.image,
        ),
        clamped,
    )
