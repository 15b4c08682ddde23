"""HTTP API backing the annotation and judging studio.

Serves benchmark items and pair media, records annotation revisions and
study verdicts, runs reasoning jobs on a bounded worker pool, and exports
aggregated results. All persistence is flat files under the configured
store directory.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.responses import FileResponse, RedirectResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel

from . import reason
from .bench import Benchmark, load_benchmark
from .config import ServiceConfig
from .degrade import degrade
from .errors import ManifestError
from .evalkit import (
    JudgeKind,
    Metric,
    Strength,
    Verdict,
    Winner,
    aggregate,
    results_to_csv,
    results_to_json,
    unwind_presented_winner,
)
from .overlay import compose_vlm_image, draw_overlay, encode_png
from .store import (
    AnnotationStore,
    PairDescriptor,
    PairStore,
    SessionStore,
    StoreError,
    VerdictStore,
)
from .tracks import TrajectorySet, parse_manifest, serialize_manifest
from .volume import rasterize, render_preview_video

_JOB_WORKERS = 4

_DEMO_METRICS = (Metric.OBJECT_PROPERTY, Metric.INTERACTION, Metric.OVERALL)


def _load_image(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def _save_gif(frames: list[np.ndarray], path: Path, fps: float) -> None:
    images = [Image.fromarray(frame, mode="RGB") for frame in frames]
    images[0].save(
        path,
        save_all=True,
        append_images=images[1:],
        duration=int(1000 / fps),
        loop=0,
    )


def build_demo_pairs(
    benchmark: Benchmark,
    media_dir: Path,
    count: int,
    seed: int,
    dot_radius: float,
) -> list[PairDescriptor]:
    """Render stub comparison pairs: clean conditioning versus degraded.

    Method A follows the annotated tracks exactly; method B follows the
    same tracks after degradation at half confidence, giving the study
    something visibly different to judge.
    """
    from .degrade import DegradeConfig

    media_dir.mkdir(parents=True, exist_ok=True)
    cfg = DegradeConfig()
    pairs: list[PairDescriptor] = []
    for k in range(count):
        item = benchmark.items[k % len(benchmark.items)]
        metric = _DEMO_METRICS[k % len(_DEMO_METRICS)]
        traj_set = item.trajectory_set
        image = _load_image(item.image)
        degraded_tracks = [
            degrade(
                track,
                0.5,
                cfg,
                seed + 1000 * k + i,
                traj_set.image_width,
                traj_set.image_height,
            )[0]
            for i, track in enumerate(traj_set.tracks)
        ]
        degraded_set = replace(traj_set, tracks=degraded_tracks)
        video_a = render_preview_video(
            traj_set, traj_set.image_height, traj_set.image_width, dot_radius
        )
        video_b = render_preview_video(
            degraded_set, traj_set.image_height, traj_set.image_width, dot_radius
        )
        pair_id = f"pair_{k:04d}_{item.id}"
        names = {
            "context_frame": f"{pair_id}_context.png",
            "overlay": f"{pair_id}_overlay.png",
            "video_a": f"{pair_id}_a.gif",
            "video_b": f"{pair_id}_b.gif",
        }
        (media_dir / names["context_frame"]).write_bytes(encode_png(image))
        (media_dir / names["overlay"]).write_bytes(compose_vlm_image(image, traj_set))
        _save_gif(video_a, media_dir / names["video_a"], traj_set.fps)
        _save_gif(video_b, media_dir / names["video_b"], traj_set.fps)
        pairs.append(
            PairDescriptor(
                pair_id=pair_id,
                item_id=item.id,
                category=item.category.value,
                prompt=traj_set.prompt or "",
                metric=metric,
                method_a="conditioned",
                method_b="degraded",
                context_frame=names["context_frame"],
                overlay=names["overlay"],
                video_a=names["video_a"],
                video_b=names["video_b"],
            )
        )
    return pairs


@dataclass
class JobRecord:
    job_id: str
    item_id: str
    status: str = "queued"
    error: str | None = None
    snapshot: dict = field(default_factory=dict)


class SessionCreateBody(BaseModel):
    participant: str
    seed: int | None = None


class VerdictBody(BaseModel):
    cursor: int
    winner: str
    strength: str


class ReasonBody(BaseModel):
    max_rounds: int | None = None


class RenderBody(BaseModel):
    manifest: dict
    frame: int = 0


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="motionkit service")

    config.store_dir.mkdir(parents=True, exist_ok=True)
    media_dir = config.store_dir / "media"
    jobs_dir = config.store_dir / "jobs"
    jobs_dir.mkdir(parents=True, exist_ok=True)

    benchmark: Benchmark | None = None
    if config.bench_root is not None:
        benchmark = load_benchmark(config.bench_root)

    verdict_store = VerdictStore(config.store_dir / "verdicts.jsonl")
    annotation_store = AnnotationStore(config.store_dir / "annotations")
    session_store = SessionStore(config.store_dir / "sessions.json")
    pair_store = PairStore(config.store_dir / "pairs.json")

    pairs = pair_store.load()
    if not pairs and config.demo_pairs > 0 and benchmark is not None:
        pairs = build_demo_pairs(
            benchmark, media_dir, config.demo_pairs, config.demo_seed, config.dot_radius
        )
        pair_store.save(pairs)
    pairs_by_id = {pair.pair_id: pair for pair in pairs}

    jobs: dict[str, JobRecord] = {}
    jobs_lock = threading.Lock()
    executor = ThreadPoolExecutor(max_workers=_JOB_WORKERS)

    def require_benchmark() -> Benchmark:
        if benchmark is None:
            raise HTTPException(status_code=404, detail="no benchmark configured")
        return benchmark

    def get_item(item_id: str):
        try:
            return require_benchmark().item_by_id(item_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id}") from None

    def current_manifest(item_id: str) -> bytes:
        latest = annotation_store.latest(item_id)
        if latest is not None:
            return latest[1]
        return get_item(item_id).manifest.read_bytes()

    # --- benchmark --------------------------------------------------------

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/bench/items")
    def list_items():
        bench = require_benchmark()
        return {
            "version": bench.version,
            "items": [
                {
                    "id": item.id,
                    "category": item.category.value,
                    "trigger_type": item.trigger_type,
                    "multi_object": item.multi_object,
                    "prompt": item.trajectory_set.prompt,
                    "width": item.trajectory_set.image_width,
                    "height": item.trajectory_set.image_height,
                    "image_url": f"/api/bench/items/{item.id}/image",
                    "manifest_url": f"/api/bench/items/{item.id}/manifest",
                }
                for item in bench.items
            ],
        }

    @app.get("/api/bench/items/{item_id}")
    def item_detail(item_id: str):
        item = get_item(item_id)
        latest = annotation_store.latest(item_id)
        return {
            "id": item.id,
            "category": item.category.value,
            "trigger_type": item.trigger_type,
            "multi_object": item.multi_object,
            "prompt": item.trajectory_set.prompt,
            "width": item.trajectory_set.image_width,
            "height": item.trajectory_set.image_height,
            "image_url": f"/api/bench/items/{item.id}/image",
            "manifest_url": f"/api/bench/items/{item.id}/manifest",
            "manifest": json.loads(current_manifest(item_id)),
            "annotation_revision": latest[0] if latest else None,
        }

    @app.get("/api/bench/items/{item_id}/image")
    def item_image(item_id: str):
        return FileResponse(get_item(item_id).image, media_type="image/png")

    @app.get("/api/bench/items/{item_id}/manifest")
    def item_manifest(item_id: str):
        return Response(content=current_manifest(item_id), media_type="application/json")

    # --- annotations ------------------------------------------------------

    @app.post("/api/annotations/{item_id}")
    def save_annotation(item_id: str, manifest: dict):
        item = get_item(item_id)
        try:
            traj_set = parse_manifest(json.dumps(manifest))
        except ManifestError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        if (traj_set.image_width, traj_set.image_height) != (
            item.trajectory_set.image_width,
            item.trajectory_set.image_height,
        ):
            raise HTTPException(
                status_code=422,
                detail="width/height: manifest dimensions do not match the item image",
            )
        revision = annotation_store.save(item_id, serialize_manifest(traj_set))
        return {"item_id": item_id, "revision": revision}

    @app.get("/api/annotations/{item_id}")
    def latest_annotation(item_id: str):
        get_item(item_id)
        latest = annotation_store.latest(item_id)
        if latest is None:
            raise HTTPException(status_code=404, detail=f"no annotations for {item_id}")
        revision, manifest_bytes = latest
        return {"item_id": item_id, "revision": revision, "manifest": json.loads(manifest_bytes)}

    # --- study ------------------------------------------------------------

    @app.post("/api/study")
    def create_session(body: SessionCreateBody):
        try:
            session = session_store.create(
                body.participant, pairs, config.questions_per_session, body.seed
            )
        except StoreError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return {"token": session.token, "total": len(session.assigned_pairs)}

    @app.get("/api/study/{token}/next")
    def next_pair(token: str):
        try:
            session = session_store.get(token)
        except StoreError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        if session.exhausted:
            return {"done": True, "cursor": session.cursor, "total": len(session.assigned_pairs)}
        assigned = session.assigned_pairs[session.cursor]
        pair = pairs_by_id[assigned.pair_id]
        first, second = (
            (pair.video_b, pair.video_a) if assigned.swapped else (pair.video_a, pair.video_b)
        )
        return {
            "done": False,
            "cursor": session.cursor,
            "total": len(session.assigned_pairs),
            "pair_id": pair.pair_id,
            "metric": assigned.metric.value,
            "prompt": pair.prompt,
            "context_frame_url": f"/media/{pair.context_frame}",
            "overlay_url": f"/media/{pair.overlay}",
            "video_first_url": f"/media/{first}",
            "video_second_url": f"/media/{second}",
        }

    @app.post("/api/study/{token}/verdict")
    def record_verdict(token: str, body: VerdictBody):
        try:
            session = session_store.get(token)
        except StoreError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        if session.exhausted:
            raise HTTPException(status_code=409, detail="session already completed")
        if body.cursor != session.cursor:
            raise HTTPException(
                status_code=409,
                detail=f"cursor mismatch: session is at {session.cursor}",
            )
        assigned = session.assigned_pairs[session.cursor]
        pair = pairs_by_id[assigned.pair_id]
        try:
            winner = unwind_presented_winner(body.winner, assigned.swapped)
            strength = Strength(body.strength)
            verdict = Verdict(
                pair_id=pair.pair_id,
                metric=assigned.metric,
                winner=winner,
                strength=strength,
                judge=JudgeKind.HUMAN,
                category=pair.category,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        verdict_store.append(verdict, session=token)
        session = session_store.advance(token, body.cursor)
        return {
            "ok": True,
            "cursor": session.cursor,
            "total": len(session.assigned_pairs),
            "done": session.exhausted,
        }

    # --- results ----------------------------------------------------------

    @app.get("/api/results")
    def export_results(format: str = "json"):
        table = aggregate(verdict_store.read_all())
        if format == "csv":
            return Response(content=results_to_csv(table), media_type="text/csv")
        if format == "json":
            return Response(content=results_to_json(table), media_type="application/json")
        raise HTTPException(status_code=422, detail=f"unknown format {format!r}")

    # --- reasoning jobs ----------------------------------------------------

    def make_vlm_client():
        if config.vlm_replies:
            return reason.MockVlmClient.from_files(config.vlm_replies)
        try:
            return reason.HttpVlmClient()
        except ValueError as exc:
            raise StoreError(str(exc)) from exc

    def run_job(record: JobRecord, traj_set: TrajectorySet, image: np.ndarray, max_rounds: int):
        with jobs_lock:
            record.status = "running"
        try:
            vlm = make_vlm_client()
            gen = reason.StubGeneratorClient(dot_radius=config.dot_radius)
            state = reason.SessionState(image=image, current_set=traj_set)
            final = reason.run_loop(state, vlm, gen, max_rounds=max_rounds, sigma=config.sigma)
            rounds = []
            working = traj_set
            for i, entry in enumerate(final.history):
                if not entry.plan.done:
                    working = reason.merge_plan(working, entry.plan)
                overlay_name = f"{record.job_id}_round_{i:02d}.png"
                (jobs_dir / overlay_name).write_bytes(compose_vlm_image(image, working))
                rounds.append(
                    {
                        "round": i,
                        "narrative_prompt": entry.plan.narrative_prompt,
                        "done": entry.plan.done,
                        "n_tracks": len(working.tracks),
                        "overlay_url": f"/media/jobs/{overlay_name}",
                    }
                )
            with jobs_lock:
                record.snapshot = {
                    "round": final.round,
                    "done": bool(final.history and final.history[-1].plan.done),
                    "rounds": rounds,
                    "final_manifest": json.loads(serialize_manifest(final.current_set)),
                }
                record.status = "done"
        except Exception as exc:
            with jobs_lock:
                record.status = "failed"
                record.error = str(exc)

    @app.post("/api/reason/{item_id}")
    def start_reason_job(item_id: str, body: ReasonBody | None = None):
        get_item(item_id)
        manifest_bytes = current_manifest(item_id)
        traj_set = parse_manifest(manifest_bytes)
        image = _load_image(get_item(item_id).image)
        max_rounds = (body.max_rounds if body and body.max_rounds else config.max_rounds)
        record = JobRecord(job_id=uuid.uuid4().hex, item_id=item_id)
        with jobs_lock:
            jobs[record.job_id] = record
        executor.submit(run_job, record, traj_set, image, max_rounds)
        return {"job_id": record.job_id, "status": record.status}

    @app.get("/api/jobs/{job_id}")
    def poll_job(job_id: str):
        with jobs_lock:
            record = jobs.get(job_id)
            if record is None:
                raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
            return {
                "job_id": record.job_id,
                "item_id": record.item_id,
                "status": record.status,
                "error": record.error,
                "snapshot": record.snapshot,
            }

    # --- rendering for the studio ------------------------------------------

    def parse_body_manifest(item_id: str, body: RenderBody) -> tuple[np.ndarray, TrajectorySet]:
        item = get_item(item_id)
        try:
            traj_set = parse_manifest(json.dumps(body.manifest))
        except ManifestError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _load_image(item.image), traj_set

    @app.post("/api/render/overlay/{item_id}")
    def render_overlay(item_id: str, body: RenderBody):
        image, traj_set = parse_body_manifest(item_id, body)
        return Response(content=compose_vlm_image(image, traj_set), media_type="image/png")

    @app.post("/api/render/heatmap/{item_id}")
    def render_heatmap(item_id: str, body: RenderBody):
        image, traj_set = parse_body_manifest(item_id, body)
        if not 0 <= body.frame < traj_set.length_frames:
            raise HTTPException(status_code=422, detail=f"frame: out of range 0..{traj_set.length_frames - 1}")
        volume = rasterize(traj_set, traj_set.image_height, traj_set.image_width, config.sigma)
        gray = np.floor(volume.data[body.frame, :, :, 0].astype(np.float64) * 255.0 + 0.5)
        gray = np.clip(gray, 0, 255).astype(np.uint8)
        rgb = np.repeat(gray[:, :, None], 3, axis=2)
        return Response(content=encode_png(rgb), media_type="image/png")

    # --- media and studio ----------------------------------------------------

    media_dir.mkdir(parents=True, exist_ok=True)
    app.mount("/media/jobs", StaticFiles(directory=jobs_dir), name="job-media")
    app.mount("/media", StaticFiles(directory=media_dir), name="media")

    studio_dist = config.studio_dist
    if studio_dist is None:
        studio_dist = Path(__file__).resolve().parents[2] / "studio" / "dist"
    if studio_dist.is_dir():
        app.mount("/studio", StaticFiles(directory=studio_dist, html=True), name="studio")

        @app.get("/")
        def index():
            return RedirectResponse(url="/studio/")

    return app
