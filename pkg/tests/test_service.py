import hashlib
import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from motionkit.config import ServiceConfig
from motionkit.evalkit import Winner, aggregate, read_verdicts, results_to_json
from motionkit.service import create_app


JOB_REPLY_ADD = json.dumps(
    {
        "narrative_prompt": "the lever tips and the load shifts",
        "refined_tracks": [],
        "secondary_tracks": [
            {"id": "react_1", "kind": "secondary", "points": [[0.6, 0.5], [0.6, 0.62]]}
        ],
    }
)
JOB_REPLY_DONE = json.dumps(
    {"narrative_prompt": "plan complete", "refined_tracks": [], "secondary_tracks": [], "done": True}
)


@pytest.fixture()
def service(tmp_path, reference_benchmark, monkeypatch):
    monkeypatch.delenv("MOTIONKIT_VLM_ENDPOINT", raising=False)
    bench_root, _ = reference_benchmark
    replies_dir = tmp_path / "replies"
    replies_dir.mkdir()
    (replies_dir / "r1.json").write_text(JOB_REPLY_ADD)
    (replies_dir / "r2.json").write_text(JOB_REPLY_DONE)
    config = ServiceConfig(
        store_dir=tmp_path / "store",
        bench_root=bench_root,
        questions_per_session=3,
        demo_pairs=3,
        demo_seed=0,
        max_rounds=4,
        dot_radius=2.0,
        vlm_replies=[replies_dir / "r1.json", replies_dir / "r2.json"],
    )
    app = create_app(config)
    with TestClient(app) as client:
        yield client, config


def wait_for_job(client, job_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        record = client.get(f"/api/jobs/{job_id}").json()
        if record["status"] in ("done", "failed"):
            return record
        time.sleep(0.05)
    raise TimeoutError("job did not finish")


class TestBenchEndpoints:
    def test_list_items(self, service):
        client, _ = service
        body = client.get("/api/bench/items").json()
        assert len(body["items"]) == 62
        assert body["items"][0]["id"] <= body["items"][1]["id"]

    def test_item_detail_and_assets(self, service, reference_benchmark):
        client, _ = service
        bench_root, benchmark = reference_benchmark
        item = benchmark.items[0]
        detail = client.get(f"/api/bench/items/{item.id}").json()
        assert detail["id"] == item.id
        assert detail["manifest"]["width"] == item.trajectory_set.image_width
        image_bytes = client.get(f"/api/bench/items/{item.id}/image").content
        assert hashlib.sha256(image_bytes).hexdigest() == hashlib.sha256(
            item.image.read_bytes()
        ).hexdigest()
        manifest_bytes = client.get(f"/api/bench/items/{item.id}/manifest").content
        assert manifest_bytes == item.manifest.read_bytes()

    def test_unknown_item(self, service):
        client, _ = service
        assert client.get("/api/bench/items/nope").status_code == 404


class TestAnnotations:
    def test_save_fetch_round_trip(self, service, reference_benchmark):
        client, _ = service
        _, benchmark = reference_benchmark
        item = benchmark.items[0]
        manifest = json.loads(item.manifest.read_text())
        manifest["prompt"] = "updated intent"
        response = client.post(f"/api/annotations/{item.id}", json=manifest)
        assert response.status_code == 200
        revision = response.json()["revision"]
        fetched = client.get(f"/api/annotations/{item.id}").json()
        assert fetched["revision"] == revision
        assert fetched["manifest"]["prompt"] == "updated intent"

    def test_invalid_confidence_rejected(self, service, reference_benchmark):
        client, _ = service
        _, benchmark = reference_benchmark
        item = benchmark.items[1]
        manifest = json.loads(item.manifest.read_text())
        manifest["tracks"][0]["confidence"] = 1.5
        response = client.post(f"/api/annotations/{item.id}", json=manifest)
        assert response.status_code == 422
        assert "confidence" in response.json()["detail"]

    def test_two_saves_latest_wins(self, service, reference_benchmark):
        client, _ = service
        _, benchmark = reference_benchmark
        item = benchmark.items[2]
        manifest = json.loads(item.manifest.read_text())
        manifest["prompt"] = "first"
        first = client.post(f"/api/annotations/{item.id}", json=manifest).json()["revision"]
        manifest["prompt"] = "second"
        second = client.post(f"/api/annotations/{item.id}", json=manifest).json()["revision"]
        assert first < second
        assert client.get(f"/api/annotations/{item.id}").json()["manifest"]["prompt"] == "second"


class TestStudyFlow:
    def test_full_session(self, service, tmp_path):
        client, config = service
        created = client.post("/api/study", json={"participant": "p1", "seed": 42}).json()
        token = created["token"]
        assert created["total"] == 3

        sessions = json.loads((config.store_dir / "sessions.json").read_text())
        assigned = sessions[token]["assigned_pairs"]

        for i in range(3):
            descriptor = client.get(f"/api/study/{token}/next").json()
            assert descriptor["done"] is False
            assert descriptor["cursor"] == i
            assert descriptor["pair_id"] == assigned[i]["pair_id"]
            for key in ("context_frame_url", "overlay_url", "video_first_url", "video_second_url"):
                asset = client.get(descriptor[key])
                assert asset.status_code == 200
                assert len(asset.content) > 0
            ack = client.post(
                f"/api/study/{token}/verdict",
                json={"cursor": i, "winner": "first", "strength": "strong"},
            )
            assert ack.status_code == 200

        assert client.get(f"/api/study/{token}/next").json()["done"] is True

        verdicts = read_verdicts(config.store_dir / "verdicts.jsonl")
        assert len(verdicts) == 3
        for verdict, assignment in zip(verdicts, assigned):
            expected = Winner.B if assignment["swapped"] else Winner.A
            assert verdict.winner is expected

    def test_duplicate_cursor_rejected(self, service):
        client, _ = service
        token = client.post("/api/study", json={"participant": "p2", "seed": 1}).json()["token"]
        ok = client.post(
            f"/api/study/{token}/verdict",
            json={"cursor": 0, "winner": "second", "strength": "slight"},
        )
        assert ok.status_code == 200
        repeat = client.post(
            f"/api/study/{token}/verdict",
            json={"cursor": 0, "winner": "second", "strength": "slight"},
        )
        assert repeat.status_code == 409

    def test_tie_with_strength_rejected(self, service):
        client, _ = service
        token = client.post("/api/study", json={"participant": "p3", "seed": 2}).json()["token"]
        bad = client.post(
            f"/api/study/{token}/verdict",
            json={"cursor": 0, "winner": "tie", "strength": "strong"},
        )
        assert bad.status_code == 422
        also_bad = client.post(
            f"/api/study/{token}/verdict",
            json={"cursor": 0, "winner": "first", "strength": "none"},
        )
        assert also_bad.status_code == 422

    def test_unknown_session(self, service):
        client, _ = service
        assert client.get("/api/study/deadbeef/next").status_code == 404


class TestResults:
    def test_export_matches_aggregate(self, service):
        client, config = service
        token = client.post("/api/study", json={"participant": "p4", "seed": 5}).json()["token"]
        submissions = [("first", "strong"), ("second", "moderate"), ("tie", "none")]
        for i, (winner, strength) in enumerate(submissions):
            client.post(
                f"/api/study/{token}/verdict",
                json={"cursor": i, "winner": winner, "strength": strength},
            )
        exported = client.get("/api/results").content
        table = aggregate(read_verdicts(config.store_dir / "verdicts.jsonl"))
        assert exported == results_to_json(table)
        assert client.get("/api/results").content == exported  # idempotent
        csv_body = client.get("/api/results", params={"format": "csv"}).content
        assert csv_body.startswith(b"metric,judge,category,")

    def test_empty_store_headers_only(self, service):
        client, _ = service
        csv_body = client.get("/api/results", params={"format": "csv"}).content
        assert csv_body == b"metric,judge,category,s_a,s_b,rate_a_percent,n_ties,n_total\n"
        assert json.loads(client.get("/api/results").content) == {"results": []}


class TestReasonJobs:
    def test_stub_backed_job_completes(self, service, reference_benchmark):
        client, _ = service
        _, benchmark = reference_benchmark
        item = benchmark.items[0]
        job_id = client.post(f"/api/reason/{item.id}", json={}).json()["job_id"]
        record = wait_for_job(client, job_id)
        assert record["status"] == "done", record["error"]
        snapshot = record["snapshot"]
        assert snapshot["done"] is True
        assert snapshot["round"] == 2
        track_ids = [t["id"] for t in snapshot["final_manifest"]["tracks"]]
        assert "react_1" in track_ids
        overlay = client.get(snapshot["rounds"][0]["overlay_url"])
        assert overlay.status_code == 200

    def test_unknown_job(self, service):
        client, _ = service
        assert client.get("/api/jobs/nope").status_code == 404

    def test_concurrent_jobs(self, service, reference_benchmark):
        client, _ = service
        _, benchmark = reference_benchmark
        first = client.post(f"/api/reason/{benchmark.items[3].id}", json={}).json()["job_id"]
        second = client.post(f"/api/reason/{benchmark.items[4].id}", json={}).json()["job_id"]
        assert wait_for_job(client, first)["status"] == "done"
        assert wait_for_job(client, second)["status"] == "done"

    def test_unconfigured_vlm_fails_with_reason(
        self, tmp_path, reference_benchmark, monkeypatch
    ):
        monkeypatch.delenv("MOTIONKIT_VLM_ENDPOINT", raising=False)
        bench_root, benchmark = reference_benchmark
        config = ServiceConfig(store_dir=tmp_path / "store2", bench_root=bench_root)
        with TestClient(create_app(config)) as client:
            job_id = client.post(f"/api/reason/{benchmark.items[0].id}", json={}).json()["job_id"]
            record = wait_for_job(client, job_id)
            assert record["status"] == "failed"
            assert "endpoint" in record["error"]


class TestRenderEndpoints:
    def test_overlay_and_heatmap(self, service, reference_benchmark):
        client, _ = service
        _, benchmark = reference_benchmark
        item = benchmark.items[0]
        manifest = json.loads(item.manifest.read_text())
        overlay = client.post(f"/api/render/overlay/{item.id}", json={"manifest": manifest})
        assert overlay.status_code == 200
        assert overlay.content[:8] == b"\x89PNG\r\n\x1a\n"
        # Deterministic server-side rendering.
        again = client.post(f"/api/render/overlay/{item.id}", json={"manifest": manifest})
        assert again.content == overlay.content
        heatmap = client.post(
            f"/api/render/heatmap/{item.id}", json={"manifest": manifest, "frame": 0}
        )
        assert heatmap.status_code == 200
        out_of_range = client.post(
            f"/api/render/heatmap/{item.id}", json={"manifest": manifest, "frame": 99}
        )
        assert out_of_range.status_code == 422
