"""Metrics and judging protocols.

Covers end-point error between trajectory sets, strength-weighted pairwise
preference rates with their aggregation, a desk-scale bright-point tracker
that closes the loop against the stub renderer, and deterministic assembly
of judge requests with recorded presentation-order randomization.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import UndefinedRateError
from .overlay import encode_png
from .tracks import Track, TrackKind, TrajectorySet, denormalize_array


class Metric(Enum):
    OBJECT_PROPERTY = "object_property"
    INTERACTION = "interaction"
    OVERALL = "overall"
    PHYSICAL = "physical"
    PHOTO = "photo"
    SEMANTIC = "semantic"


class Winner(Enum):
    A = "a"
    B = "b"
    TIE = "tie"


class Strength(Enum):
    SLIGHT = "slight"
    MODERATE = "moderate"
    STRONG = "strong"
    NONE = "none"


class JudgeKind(Enum):
    HUMAN = "human"
    VLM = "vlm"


STRENGTH_WEIGHTS = {
    Strength.SLIGHT: 1,
    Strength.MODERATE: 2,
    Strength.STRONG: 3,
    Strength.NONE: 0,
}


@dataclass(frozen=True)
class Verdict:
    """One pairwise judgment for a single metric.

    ``category`` optionally carries the benchmark scenario the pair came
    from so aggregation can group by it.
    """

    pair_id: str
    metric: Metric
    winner: Winner
    strength: Strength
    judge: JudgeKind
    category: str | None = None

    def __post_init__(self):
        if (self.winner is Winner.TIE) != (self.strength is Strength.NONE):
            raise ValueError(
                "verdict invariant violated: winner is a tie exactly when strength is none"
            )


@dataclass(frozen=True)
class PreferenceResult:
    """Strength-weighted preference volumes and A's share of them.

    ``rate_a_percent`` equals 100 * s_a / (s_a + s_b) to within one
    2^-30 quantum; the rate is snapped to that grid (half-to-even, in exact
    rational arithmetic) so that swapping A and B complements the rate
    bit-exactly under float subtraction from 100.
    """

    s_a: float
    s_b: float
    rate_a_percent: float | None
    n_ties: int
    n_total: int


def strength_weight(verdict: Verdict) -> int:
    """Weight of one verdict: slight 1, moderate 2, strong 3, ties 0."""
    return STRENGTH_WEIGHTS[verdict.strength]


_RATE_GRID = 1 << 30


def _share_percent(s_a: int, total: int) -> float:
    # round() on a Fraction rounds half to even; the grid total is even, so
    # complements land exactly on 100 - rate.
    return round(Fraction(100 * s_a * _RATE_GRID, total)) / _RATE_GRID


def preference_rate(verdicts: Sequence[Verdict]) -> PreferenceResult:
    """A's share of the total decisive preference volume, in percent.

    All verdicts must target the same metric. Raises UndefinedRateError
    (carrying the counts) when every verdict is a tie.
    """
    if not verdicts:
        raise ValueError("preference_rate requires at least one verdict")
    metrics = {v.metric for v in verdicts}
    if len(metrics) != 1:
        raise ValueError(f"preference_rate requires a single metric, got {sorted(m.value for m in metrics)}")
    s_a = sum(strength_weight(v) for v in verdicts if v.winner is Winner.A)
    s_b = sum(strength_weight(v) for v in verdicts if v.winner is Winner.B)
    n_ties = sum(1 for v in verdicts if v.winner is Winner.TIE)
    if s_a + s_b == 0:
        raise UndefinedRateError(n_ties=n_ties, n_total=len(verdicts))
    return PreferenceResult(
        s_a=float(s_a),
        s_b=float(s_b),
        rate_a_percent=_share_percent(s_a, s_a + s_b),
        n_ties=n_ties,
        n_total=len(verdicts),
    )


GroupKey = tuple[Metric, JudgeKind, "str | None"]


def aggregate(verdicts: Iterable[Verdict]) -> dict[GroupKey, PreferenceResult]:
    """Group verdicts by (metric, judge, category) and score each group.

    Groups whose verdicts are all ties get a result with an undefined rate.
    """
    groups: dict[GroupKey, list[Verdict]] = {}
    for verdict in verdicts:
        groups.setdefault((verdict.metric, verdict.judge, verdict.category), []).append(verdict)
    table: dict[GroupKey, PreferenceResult] = {}
    for key, group in groups.items():
        try:
            table[key] = preference_rate(group)
        except UndefinedRateError as exc:
            table[key] = PreferenceResult(
                s_a=0.0, s_b=0.0, rate_a_percent=None, n_ties=exc.n_ties, n_total=exc.n_total
            )
    return table


def _sorted_rows(table: dict[GroupKey, PreferenceResult]):
    def sort_key(item):
        (metric, judge, category), _ = item
        return (metric.value, judge.value, category or "")

    return sorted(table.items(), key=sort_key)


def results_to_json(table: dict[GroupKey, PreferenceResult]) -> bytes:
    rows = [
        {
            "metric": metric.value,
            "judge": judge.value,
            "category": category,
            "s_a": result.s_a,
            "s_b": result.s_b,
            "rate_a_percent": result.rate_a_percent,
            "n_ties": result.n_ties,
            "n_total": result.n_total,
        }
        for (metric, judge, category), result in _sorted_rows(table)
    ]
    return (json.dumps({"results": rows}, indent=2, sort_keys=True) + "\n").encode("utf-8")


def results_to_csv(table: dict[GroupKey, PreferenceResult]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["metric", "judge", "category", "s_a", "s_b", "rate_a_percent", "n_ties", "n_total"])
    for (metric, judge, category), result in _sorted_rows(table):
        writer.writerow(
            [
                metric.value,
                judge.value,
                category or "",
                result.s_a,
                result.s_b,
                "" if result.rate_a_percent is None else f"{result.rate_a_percent:.4f}",
                result.n_ties,
                result.n_total,
            ]
        )
    return buffer.getvalue().encode("utf-8")


# --- verdict store (append-only JSON Lines) -----------------------------------

def verdict_to_record(verdict: Verdict, session: str, timestamp: str | None = None) -> dict:
    return {
        "pair_id": verdict.pair_id,
        "metric": verdict.metric.value,
        "winner": verdict.winner.value,
        "strength": verdict.strength.value,
        "judge": verdict.judge.value,
        "category": verdict.category,
        "session": session,
        "timestamp": timestamp or datetime.now(timezone.utc).isoformat(),
    }


def verdict_from_record(record: dict) -> Verdict:
    return Verdict(
        pair_id=record["pair_id"],
        metric=Metric(record["metric"]),
        winner=Winner(record["winner"]),
        strength=Strength(record["strength"]),
        judge=JudgeKind(record["judge"]),
        category=record.get("category"),
    )


def append_verdict(path: str | Path, verdict: Verdict, session: str, timestamp: str | None = None) -> None:
    record = verdict_to_record(verdict, session, timestamp)
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(json.dumps(record, sort_keys=True) + "\n")


def read_verdicts(path: str | Path) -> list[Verdict]:
    verdicts = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                verdicts.append(verdict_from_record(json.loads(line)))
    return verdicts


# --- end-point error ----------------------------------------------------------

def epe(reference: TrajectorySet, estimated: TrajectorySet) -> float:
    """Mean Euclidean pixel distance between corresponding track points.

    Tracks are matched by id; both sets must share track count, length, and
    raster dimensions.
    """
    if reference.length_frames != estimated.length_frames:
        raise ValueError(
            f"length mismatch: {reference.length_frames} vs {estimated.length_frames}"
        )
    if len(reference.tracks) != len(estimated.tracks):
        raise ValueError(
            f"track count mismatch: {len(reference.tracks)} vs {len(estimated.tracks)}"
        )
    if (reference.image_width, reference.image_height) != (
        estimated.image_width,
        estimated.image_height,
    ):
        raise ValueError("raster dimension mismatch between trajectory sets")
    ref_ids = {t.id for t in reference.tracks}
    est_ids = {t.id for t in estimated.tracks}
    if ref_ids != est_ids:
        raise ValueError(f"track id mismatch: {sorted(ref_ids ^ est_ids)}")
    total = 0.0
    count = 0
    for ref_track in reference.tracks:
        est_track = estimated.track_by_id(ref_track.id)
        ref_px = denormalize_array(ref_track.points, reference.image_width, reference.image_height)
        est_px = denormalize_array(est_track.points, estimated.image_width, estimated.image_height)
        total += float(np.sqrt(((ref_px - est_px) ** 2).sum(axis=1)).sum())
        count += ref_track.length
    return total / count


# --- desk-scale bright-point tracker ------------------------------------------

def track_bright_points(
    video: Sequence[np.ndarray],
    init: Sequence[tuple[float, float]],
    search_radius: float = 10.0,
    ids: Sequence[str] | None = None,
    fps: float = 4.0,
) -> TrajectorySet:
    """Greedy per-frame brightest-pixel tracking from initial pixel positions.

    For each frame, each point moves to the brightest pixel within the
    search radius of its previous position; ties break toward the smallest
    displacement, then row-major order. Returns the recovered tracks as a
    trajectory set in normalized coordinates.
    """
    if len(video) == 0:
        raise ValueError("video must contain at least one frame")
    if len(init) == 0:
        raise ValueError("init must contain at least one point")
    first = np.asarray(video[0])
    height, width = first.shape[0], first.shape[1]
    if ids is None:
        ids = [f"track_{i}" for i in range(len(init))]
    if len(ids) != len(init):
        raise ValueError("ids and init must have the same length")

    positions = [np.array([float(x), float(y)]) for x, y in init]
    recovered: list[list[tuple[float, float]]] = [[] for _ in init]
    radius_sq = search_radius * search_radius

    for frame in video:
        frame = np.asarray(frame)
        if frame.shape[0] != height or frame.shape[1] != width:
            raise ValueError("all frames must share dimensions")
        gray = frame if frame.ndim == 2 else frame.max(axis=2)
        for i, pos in enumerate(positions):
            x, y = pos
            r0 = max(int(np.ceil(y - search_radius)), 0)
            r1 = min(int(np.floor(y + search_radius)), height - 1)
            c0 = max(int(np.ceil(x - search_radius)), 0)
            c1 = min(int(np.floor(x + search_radius)), width - 1)
            if r0 > r1 or c0 > c1:
                recovered[i].append((float(x), float(y)))
                continue
            rows = np.arange(r0, r1 + 1)[:, None]
            cols = np.arange(c0, c1 + 1)[None, :]
            disp_sq = (cols - x) ** 2 + (rows - y) ** 2
            window = gray[r0 : r1 + 1, c0 : c1 + 1].astype(np.float64)
            window = np.where(disp_sq <= radius_sq, window, -np.inf)
            best = window.max()
            if not np.isfinite(best):
                recovered[i].append((float(x), float(y)))
                continue
            candidates = np.argwhere(window == best)
            cand_disp = disp_sq[candidates[:, 0], candidates[:, 1]]
            order = np.lexsort((candidates[:, 1], candidates[:, 0], cand_disp))
            r, c = candidates[order[0]]
            positions[i] = np.array([float(c0 + c), float(r0 + r)])
            recovered[i].append((float(c0 + c), float(r0 + r)))

    tracks = [
        Track(
            id=ids[i],
            kind=TrackKind.SECONDARY,
            confidence=1.0,
            points=np.asarray(points, dtype=np.float64) / np.array([width, height], dtype=np.float64),
        )
        for i, points in enumerate(recovered)
    ]
    return TrajectorySet(
        tracks=tracks,
        length_frames=len(video),
        image_width=width,
        image_height=height,
        fps=fps,
    )


# --- judge request assembly ----------------------------------------------------

JUDGE_METRIC_GUIDANCE: dict[Metric, str] = {
    Metric.OBJECT_PROPERTY: (
        "Judge whether each object behaves according to its implied mass, "
        "gravity, and stiffness (rigid versus soft-body deformation)."
    ),
    Metric.INTERACTION: (
        "Judge whether collisions, contact forces, and functional mechanisms "
        "(triggers, fluid flows) produce physically correct environmental changes."
    ),
    Metric.OVERALL: (
        "Judge holistically which video is the more plausible continuation of the scene."
    ),
    Metric.PHYSICAL: "Score the physical realism of the motion in each video.",
    Metric.PHOTO: "Score the photorealism of each video.",
    Metric.SEMANTIC: "Score how well each video matches the described intent.",
}

JUDGE_INSTRUCTION_TEMPLATE = (
    "You are comparing two candidate videos generated from the same starting "
    "image, motion trajectories, and prompt.\n"
    "{guidance}\n"
    "Pick a winner (the first video, the second video, or a tie) and state the "
    "magnitude of the difference: slight, moderate, or strong. A tie carries "
    "no magnitude."
)


@dataclass(frozen=True)
class JudgeRequest:
    """A fully assembled pairwise judging request.

    ``swapped`` records presentation order: when True, ``video_first`` is
    candidate B. Store it so recorded winners can be unwound to canonical
    A/B before scoring.
    """

    instruction: str
    context_png: bytes
    overlay_png: bytes
    prompt: str
    video_first: tuple[bytes, ...]
    video_second: tuple[bytes, ...]
    metric: Metric
    swapped: bool


def _frames_to_png(frames: Sequence[np.ndarray]) -> tuple[bytes, ...]:
    return tuple(encode_png(np.asarray(frame)) for frame in frames)


def build_judge_request(
    context_frame: np.ndarray,
    trajectory_overlay: bytes,
    prompt: str,
    video_a: Sequence[np.ndarray],
    video_b: Sequence[np.ndarray],
    metric: Metric,
    seed: int,
) -> JudgeRequest:
    """Assemble a judge request with seeded A/B presentation order."""
    if context_frame is None or trajectory_overlay is None:
        raise ValueError("context frame and trajectory overlay are required")
    if video_a is None or video_b is None or len(video_a) == 0 or len(video_b) == 0:
        raise ValueError("both candidate videos are required")
    rng = np.random.default_rng(seed)
    swapped = bool(rng.integers(0, 2))
    first, second = (video_b, video_a) if swapped else (video_a, video_b)
    instruction = JUDGE_INSTRUCTION_TEMPLATE.format(guidance=JUDGE_METRIC_GUIDANCE[metric])
    return JudgeRequest(
        instruction=instruction,
        context_png=encode_png(np.asarray(context_frame)),
        overlay_png=trajectory_overlay,
        prompt=prompt,
        video_first=_frames_to_png(first),
        video_second=_frames_to_png(second),
        metric=metric,
        swapped=swapped,
    )


def unwind_presented_winner(presented: str, swapped: bool) -> Winner:
    """Map a winner recorded in presentation terms back to canonical A/B."""
    presented = presented.lower()
    if presented == "tie":
        return Winner.TIE
    if presented not in ("first", "second"):
        raise ValueError(f"presented winner must be 'first', 'second', or 'tie', got {presented!r}")
    if presented == "first":
        return Winner.B if swapped else Winner.A
    return Winner.A if swapped else Winner.B
