"""Flat-file persistence for the study service.

Verdicts land in an append-only JSON Lines file, annotations in per-item
revision files, sessions in a single JSON document. Every store serializes
its writes behind one lock per file.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .evalkit import Metric, Verdict, append_verdict, read_verdicts


class StoreError(Exception):
    pass


class VerdictStore:
    """Append-only JSON Lines verdict log."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, verdict: Verdict, session: str) -> None:
        with self._lock:
            append_verdict(self.path, verdict, session)

    def read_all(self) -> list[Verdict]:
        if not self.path.exists():
            return []
        return read_verdicts(self.path)


class AnnotationStore:
    """Per-item, totally ordered revision store for trajectory manifests."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _item_dir(self, item_id: str) -> Path:
        return self.root / item_id

    def save(self, item_id: str, manifest_bytes: bytes) -> str:
        with self._lock:
            item_dir = self._item_dir(item_id)
            item_dir.mkdir(parents=True, exist_ok=True)
            revision = len(list(item_dir.glob("rev_*.json"))) + 1
            rev_id = f"rev_{revision:05d}"
            (item_dir / f"{rev_id}.json").write_bytes(manifest_bytes)
            return rev_id

    def revisions(self, item_id: str) -> list[str]:
        item_dir = self._item_dir(item_id)
        if not item_dir.is_dir():
            return []
        return sorted(p.stem for p in item_dir.glob("rev_*.json"))

    def latest(self, item_id: str) -> tuple[str, bytes] | None:
        revs = self.revisions(item_id)
        if not revs:
            return None
        return revs[-1], (self._item_dir(item_id) / f"{revs[-1]}.json").read_bytes()

    def get(self, item_id: str, rev_id: str) -> bytes:
        path = self._item_dir(item_id) / f"{rev_id}.json"
        if not path.is_file():
            raise StoreError(f"unknown revision {rev_id} for item {item_id}")
        return path.read_bytes()


@dataclass
class PairDescriptor:
    """One judgeable comparison with its on-disk media."""

    pair_id: str
    item_id: str
    category: str
    prompt: str
    metric: Metric
    method_a: str
    method_b: str
    context_frame: str
    overlay: str
    video_a: str
    video_b: str

    def to_dict(self) -> dict:
        data = self.__dict__.copy()
        data["metric"] = self.metric.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PairDescriptor":
        data = dict(data)
        data["metric"] = Metric(data["metric"])
        return cls(**data)


class PairStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)

    def load(self) -> list[PairDescriptor]:
        if not self.path.exists():
            return []
        doc = json.loads(self.path.read_text(encoding="utf-8"))
        return [PairDescriptor.from_dict(entry) for entry in doc["pairs"]]

    def save(self, pairs: list[PairDescriptor]) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        doc = {"pairs": [pair.to_dict() for pair in pairs]}
        self.path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass
class AssignedPair:
    pair_id: str
    metric: Metric
    swapped: bool


@dataclass
class StudySession:
    token: str
    participant: str
    assigned_pairs: list[AssignedPair]
    cursor: int = 0
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )

    @property
    def exhausted(self) -> bool:
        return self.cursor >= len(self.assigned_pairs)


class SessionStore:
    """Study sessions persisted as one JSON document; mutations are atomic."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._sessions: dict[str, StudySession] = {}
        if self.path.exists():
            doc = json.loads(self.path.read_text(encoding="utf-8"))
            for token, entry in doc.items():
                self._sessions[token] = StudySession(
                    token=token,
                    participant=entry["participant"],
                    assigned_pairs=[
                        AssignedPair(a["pair_id"], Metric(a["metric"]), a["swapped"])
                        for a in entry["assigned_pairs"]
                    ],
                    cursor=entry["cursor"],
                    created_at=entry["created_at"],
                )

    def _flush(self) -> None:
        doc = {
            token: {
                "participant": s.participant,
                "assigned_pairs": [
                    {"pair_id": a.pair_id, "metric": a.metric.value, "swapped": a.swapped}
                    for a in s.assigned_pairs
                ],
                "cursor": s.cursor,
                "created_at": s.created_at,
            }
            for token, s in self._sessions.items()
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def create(
        self, participant: str, pairs: list[PairDescriptor], count: int, seed: int | None = None
    ) -> StudySession:
        """Assign up to ``count`` pairs sampled uniformly without replacement."""
        if not pairs:
            raise StoreError("no pairs available for assignment")
        rng = np.random.default_rng(seed)
        count = min(count, len(pairs))
        indices = rng.choice(len(pairs), size=count, replace=False)
        assigned = [
            AssignedPair(
                pair_id=pairs[int(i)].pair_id,
                metric=pairs[int(i)].metric,
                swapped=bool(rng.integers(0, 2)),
            )
            for i in indices
        ]
        with self._lock:
            token = uuid.uuid4().hex
            session = StudySession(token=token, participant=participant, assigned_pairs=assigned)
            self._sessions[token] = session
            self._flush()
            return session

    def get(self, token: str) -> StudySession:
        with self._lock:
            if token not in self._sessions:
                raise StoreError(f"unknown session {token}")
            return self._sessions[token]

    def advance(self, token: str, expected_cursor: int) -> StudySession:
        """Advance the cursor; rejects stale or repeated submissions."""
        with self._lock:
            session = self._sessions.get(token)
            if session is None:
                raise StoreError(f"unknown session {token}")
            if session.cursor != expected_cursor:
                raise StoreError(
                    f"cursor mismatch: session is at {session.cursor}, submission targets {expected_cursor}"
                )
            session.cursor += 1
            self._flush()
            return session
