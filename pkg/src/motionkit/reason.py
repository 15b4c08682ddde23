"""Reasoning-then-generation orchestration.

A session alternates between a vision-language planner and a video
generator: each step renders the current trajectories onto the image, asks
the planner for a narrative prompt plus refined and secondary tracks, merges
the plan into the session's trajectory set, and generates a new video from
the merged set. The loop stops when the planner stops proposing secondary
trajectories.
"""

from __future__ import annotations

import base64
import json
import os
import re
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from .errors import ProtocolError, TransportError
from .overlay import OverlayStyle, compose_vlm_image
from .tracks import (
    Track,
    TrackKind,
    TrajectorySet,
    parse_track_text,
    resample,
)
from .volume import MotionVolume, SigmaConfig, rasterize, render_preview_video, write_volume

PROMPT_TEMPLATE_NAME = "reason_v1.txt"

USER_TRACK_CONFIDENCE = 1.0
PROPOSED_TRACK_CONFIDENCE = 0.5

_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*)\n```$", re.DOTALL)


def load_prompt_template(name: str = PROMPT_TEMPLATE_NAME) -> str:
    return resources.files("motionkit.templates").joinpath(name).read_text(encoding="utf-8")


@dataclass(frozen=True)
class VlmRequest:
    """One fully assembled planner request."""

    overlay_png: bytes
    coordinate_text: str
    user_prompt: str | None
    instruction: str
    prior_video: tuple[np.ndarray, ...] | None = None


@dataclass
class ReasonedPlan:
    """Planner output: narrative prompt, refined and proposed tracks, stop flag."""

    narrative_prompt: str
    refined_user_tracks: list[Track]
    secondary_tracks: list[Track]
    done: bool

    def __post_init__(self):
        if self.done and self.secondary_tracks:
            raise ValueError("a done plan must not propose secondary tracks")


class RoundRecord(NamedTuple):
    plan: ReasonedPlan
    video: "list[np.ndarray] | None"


@dataclass
class SessionState:
    """Value-typed session snapshot passed through reasoning steps."""

    image: np.ndarray
    current_set: TrajectorySet
    round: int = 0
    history: list[RoundRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.round < 0:
            raise ValueError(f"round: must be >= 0, got {self.round}")


class VlmClient(Protocol):
    def complete(self, request: VlmRequest) -> str: ...


class GeneratorClient(Protocol):
    def generate(
        self, traj_set: TrajectorySet, volume: MotionVolume, prompt: str
    ) -> list[np.ndarray]: ...


def encode_coordinate_text(traj_set: TrajectorySet) -> str:
    """Render every track as one labeled line of normalized coordinate pairs."""
    lines = []
    for track in traj_set.tracks:
        pairs = ", ".join(f"({x:.6f}, {y:.6f})" for x, y in track.points)
        lines.append(
            f"{track.id} [kind={track.kind.value} confidence={track.confidence:.2f}]: {pairs}"
        )
    return "\n".join(lines)


def build_request(
    state: SessionState,
    style: OverlayStyle | None = None,
    template: str | None = None,
) -> VlmRequest:
    """Assemble the planner request for the session's current round."""
    if state.image is None:
        raise ValueError("session state has no image")
    template = template if template is not None else load_prompt_template()
    instruction = template.format(
        length_frames=state.current_set.length_frames, fps=state.current_set.fps
    )
    prior_video = None
    if state.round > 0 and state.history:
        video = state.history[-1].video
        if video is not None:
            prior_video = tuple(video)
    return VlmRequest(
        overlay_png=compose_vlm_image(state.image, state.current_set, style),
        coordinate_text=encode_coordinate_text(state.current_set),
        user_prompt=state.current_set.prompt,
        instruction=instruction,
        prior_video=prior_video,
    )


def _strip_fences(text: str) -> str:
    stripped = text.strip()
    match = _FENCE_RE.match(stripped)
    return match.group(1) if match else stripped


def _track_from_entry(entry: dict, index: int, refined: bool, raw: str) -> Track:
    if not isinstance(entry, dict):
        raise ProtocolError(f"track entry {index} is not an object", raw=raw)
    try:
        track_id = entry["id"]
        points = entry["points"]
    except KeyError as exc:
        raise ProtocolError(f"track entry {index} missing field {exc}", raw=raw) from exc
    if refined:
        kind = TrackKind.REFINED_USER
        confidence = USER_TRACK_CONFIDENCE
    else:
        kind = TrackKind.STATIC if entry.get("kind") == "static" else TrackKind.SECONDARY
        confidence = PROPOSED_TRACK_CONFIDENCE
    try:
        return Track(id=track_id, kind=kind, confidence=confidence, points=points)
    except ValueError as exc:
        raise ProtocolError(f"track entry {index}: {exc}", raw=raw) from exc


def _plan_from_json(doc: dict, raw: str) -> ReasonedPlan:
    narrative = doc.get("narrative_prompt", "")
    if not isinstance(narrative, str):
        raise ProtocolError("narrative_prompt must be a string", raw=raw)
    refined = [
        _track_from_entry(entry, i, refined=True, raw=raw)
        for i, entry in enumerate(doc.get("refined_tracks", []))
    ]
    secondary = [
        _track_from_entry(entry, i, refined=False, raw=raw)
        for i, entry in enumerate(doc.get("secondary_tracks", []))
    ]
    done_flag = doc.get("done")
    if done_flag is not None and not isinstance(done_flag, bool):
        raise ProtocolError("done must be a boolean", raw=raw)
    if done_flag and secondary:
        raise ProtocolError("reply declares done but still proposes secondary tracks", raw=raw)
    done = bool(done_flag) or not secondary
    return ReasonedPlan(
        narrative_prompt=narrative,
        refined_user_tracks=refined,
        secondary_tracks=secondary,
        done=done,
    )


def _plan_from_text(raw: str) -> ReasonedPlan:
    from .errors import TrackTextError

    try:
        parsed = parse_track_text(raw)
    except TrackTextError as exc:
        raise ProtocolError(f"unparseable reply: {exc}", raw=raw) from exc
    refined = []
    secondary = []
    for track in parsed:
        if track.kind in (TrackKind.USER, TrackKind.REFINED_USER):
            refined.append(
                replace(track, kind=TrackKind.REFINED_USER, confidence=USER_TRACK_CONFIDENCE)
            )
        else:
            secondary.append(replace(track, confidence=PROPOSED_TRACK_CONFIDENCE))
    prose = [
        line.strip()
        for line in raw.splitlines()
        if line.strip() and "(" not in line and ":" not in line
    ]
    return ReasonedPlan(
        narrative_prompt=" ".join(prose),
        refined_user_tracks=refined,
        secondary_tracks=secondary,
        done=not secondary,
    )


def parse_response(raw: str, length_frames: int) -> ReasonedPlan:
    """Parse a planner reply into a validated plan.

    Strict JSON is preferred; free text with labeled coordinate lists is
    accepted as a fallback. All tracks are resampled to the session length.
    """
    body = _strip_fences(raw)
    plan: ReasonedPlan | None = None
    try:
        doc = json.loads(body)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict):
        plan = _plan_from_json(doc, raw)
    else:
        plan = _plan_from_text(raw)
    plan.refined_user_tracks = [resample(t, length_frames) for t in plan.refined_user_tracks]
    plan.secondary_tracks = [resample(t, length_frames) for t in plan.secondary_tracks]
    return plan


def merge_plan(current: TrajectorySet, plan: ReasonedPlan) -> TrajectorySet:
    """Merge a plan into the session trajectory set.

    Refined tracks replace the originals that share their id; secondary
    tracks replace same-id proposals from earlier rounds or append. Track
    confidences are pinned by provenance: refined user tracks at 1.0,
    proposed tracks at 0.5. Merging the same plan twice is a no-op.
    """
    merged: list[Track] = list(current.tracks)
    index = {track.id: i for i, track in enumerate(merged)}

    def upsert(track: Track, warn_on_new: bool) -> None:
        if track.id in index:
            merged[index[track.id]] = track
        else:
            if warn_on_new:
                warnings.warn(
                    f"refined track {track.id!r} does not match any existing track; appending",
                    stacklevel=3,
                )
            index[track.id] = len(merged)
            merged.append(track)

    for track in plan.refined_user_tracks:
        upsert(
            replace(track, kind=TrackKind.REFINED_USER, confidence=USER_TRACK_CONFIDENCE),
            warn_on_new=True,
        )
    for track in plan.secondary_tracks:
        upsert(replace(track, confidence=PROPOSED_TRACK_CONFIDENCE), warn_on_new=False)
    return TrajectorySet(
        tracks=merged,
        length_frames=current.length_frames,
        image_width=current.image_width,
        image_height=current.image_height,
        fps=current.fps,
        prompt=current.prompt,
        image=current.image,
    )


def step(
    state: SessionState,
    vlm: VlmClient,
    gen: GeneratorClient,
    style: OverlayStyle | None = None,
    sigma: SigmaConfig | None = None,
) -> SessionState:
    """One reasoning-then-generation round; returns the successor state."""
    request = build_request(state, style=style)
    try:
        raw = vlm.complete(request)
    except Exception as exc:
        raise TransportError(f"planner call failed: {exc}", partial_state=state) from exc
    plan = parse_response(raw, state.current_set.length_frames)
    if plan.done:
        merged = state.current_set
        video = None
    else:
        merged = merge_plan(state.current_set, plan)
        volume = rasterize(merged, merged.image_height, merged.image_width, sigma)
        try:
            video = gen.generate(merged, volume, plan.narrative_prompt)
        except Exception as exc:
            raise TransportError(f"generator call failed: {exc}", partial_state=state) from exc
    return SessionState(
        image=state.image,
        current_set=merged,
        round=state.round + 1,
        history=state.history + [RoundRecord(plan, video)],
    )


def run_loop(
    state: SessionState,
    vlm: VlmClient,
    gen: GeneratorClient,
    max_rounds: int,
    style: OverlayStyle | None = None,
    sigma: SigmaConfig | None = None,
) -> SessionState:
    """Iterate ``step`` until the plan is done or the round budget runs out."""
    if max_rounds < 1:
        raise ValueError(f"max_rounds: must be >= 1, got {max_rounds}")
    for _ in range(max_rounds):
        try:
            state = step(state, vlm, gen, style=style, sigma=sigma)
        except TransportError as exc:
            exc.partial_state = state
            raise
        if state.history[-1].plan.done:
            break
    return state


# --- clients -------------------------------------------------------------------

class MockVlmClient:
    """Replays scripted replies in order; raises when exhausted."""

    def __init__(self, replies: Sequence[str]):
        self._replies = list(replies)
        self.requests: list[VlmRequest] = []

    @classmethod
    def from_files(cls, paths: Sequence[str | Path]) -> "MockVlmClient":
        return cls([Path(p).read_text(encoding="utf-8") for p in paths])

    def complete(self, request: VlmRequest) -> str:
        self.requests.append(request)
        if not self._replies:
            raise RuntimeError("mock planner has no replies left")
        return self._replies.pop(0)


class StubGeneratorClient:
    """Deterministic dot-following renderer standing in for a video model."""

    def __init__(self, dot_radius: float = 3.0):
        self.dot_radius = dot_radius

    def generate(
        self, traj_set: TrajectorySet, volume: MotionVolume, prompt: str
    ) -> list[np.ndarray]:
        return render_preview_video(
            traj_set, traj_set.image_height, traj_set.image_width, self.dot_radius
        )


ENV_VLM_ENDPOINT = "MOTIONKIT_VLM_ENDPOINT"
ENV_VLM_TOKEN = "MOTIONKIT_VLM_TOKEN"
ENV_VLM_MODEL = "MOTIONKIT_VLM_MODEL"


class HttpVlmClient:
    """JSON-over-HTTP planner client.

    Endpoint, auth token, and model name fall back to the
    MOTIONKIT_VLM_ENDPOINT / MOTIONKIT_VLM_TOKEN / MOTIONKIT_VLM_MODEL
    environment variables.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        token: str | None = None,
        model: str | None = None,
        timeout: float = 120.0,
    ):
        self.endpoint = endpoint or os.environ.get(ENV_VLM_ENDPOINT)
        self.token = token or os.environ.get(ENV_VLM_TOKEN)
        self.model = model or os.environ.get(ENV_VLM_MODEL)
        self.timeout = timeout
        if not self.endpoint:
            raise ValueError(f"no planner endpoint configured (set {ENV_VLM_ENDPOINT})")

    @staticmethod
    def build_payload(request: VlmRequest, model: str | None = None) -> dict:
        payload = {
            "model": model,
            "instruction": request.instruction,
            "coordinate_text": request.coordinate_text,
            "user_prompt": request.user_prompt,
            "overlay_png_b64": base64.b64encode(request.overlay_png).decode("ascii"),
        }
        if request.prior_video is not None:
            from .overlay import encode_png

            payload["prior_video_png_b64"] = [
                base64.b64encode(encode_png(np.asarray(frame))).decode("ascii")
                for frame in request.prior_video
            ]
        return payload

    def complete(self, request: VlmRequest) -> str:
        import httpx

        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        response = httpx.post(
            self.endpoint,
            json=self.build_payload(request, self.model),
            headers=headers,
            timeout=self.timeout,
        )
        response.raise_for_status()
        return response.json()["reply"]


class HttpGeneratorClient:
    """Sends the motion volume and prompt to an external generation service."""

    def __init__(self, endpoint: str, timeout: float = 600.0):
        self.endpoint = endpoint
        self.timeout = timeout

    @staticmethod
    def build_payload(traj_set: TrajectorySet, volume: MotionVolume, prompt: str) -> dict:
        from .tracks import serialize_manifest

        return {
            "prompt": prompt,
            "manifest": json.loads(serialize_manifest(traj_set)),
            "volume_b64": base64.b64encode(write_volume(volume)).decode("ascii"),
        }

    def generate(
        self, traj_set: TrajectorySet, volume: MotionVolume, prompt: str
    ) -> list[np.ndarray]:
        import httpx

        from PIL import Image
        import io

        response = httpx.post(
            self.endpoint,
            json=self.build_payload(traj_set, volume, prompt),
            timeout=self.timeout,
        )
        response.raise_for_status()
        frames = []
        for encoded in response.json()["frames_png_b64"]:
            with Image.open(io.BytesIO(base64.b64decode(encoded))) as img:
                frames.append(np.asarray(img.convert("RGB")))
        return frames
