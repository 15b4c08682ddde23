"""Benchmark dataset store: index schema, validation, distribution stats.

A benchmark is a directory with an ``index.json`` listing items; each item
references a pre-event image and a trajectory manifest annotating the
intended trigger motion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from PIL import Image

from .errors import ManifestError, MotionKitError
from .tracks import TrajectorySet, parse_manifest


class Category(Enum):
    COLLISION = "collision"
    CONSTRAINT_CHANGE = "constraint_change"
    TOOL_MECHANISMS = "tool_mechanisms"
    FLOW = "flow"
    COMMON_OBJECTS = "common_objects"


TRIGGER_TYPES = (
    "support failure",
    "connection removal",
    "non-contact force disappearance",
    "external force onset",
    "pressure release",
    "mechanical release",
    "unstable equilibrium",
)


class BenchmarkError(MotionKitError):
    """Benchmark failed validation; ``failures`` lists every problem found."""

    def __init__(self, failures: list[str]):
        super().__init__("benchmark validation failed:\n" + "\n".join(f"- {f}" for f in failures))
        self.failures = failures


@dataclass
class BenchItem:
    id: str
    image: Path
    manifest: Path
    category: Category
    trigger_type: str
    multi_object: bool
    trajectory_set: TrajectorySet


@dataclass
class Benchmark:
    items: list[BenchItem]
    version: str

    def item_by_id(self, item_id: str) -> BenchItem:
        for item in self.items:
            if item.id == item_id:
                return item
        raise KeyError(item_id)


def load_benchmark(root_dir: str | Path) -> Benchmark:
    """Load and fully validate a benchmark directory.

    Every invalid item is reported; the error lists all failures rather
    than stopping at the first. Items are returned sorted by id so the
    result does not depend on directory listing order.
    """
    root = Path(root_dir)
    index_path = root / "index.json"
    if not index_path.is_file():
        raise BenchmarkError([f"missing index file {index_path}"])
    try:
        index = json.loads(index_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BenchmarkError([f"index.json: invalid JSON: {exc}"]) from exc

    failures: list[str] = []
    version = index.get("version")
    if not isinstance(version, str):
        failures.append("index.json: version must be a string")
        version = ""
    raw_items = index.get("items")
    if not isinstance(raw_items, list):
        raise BenchmarkError(failures + ["index.json: items must be a list"])

    items: list[BenchItem] = []
    seen_ids: set[str] = set()
    for i, entry in enumerate(raw_items):
        where = f"items[{i}]"
        if not isinstance(entry, dict):
            failures.append(f"{where}: expected an object")
            continue
        item_id = entry.get("id")
        if not isinstance(item_id, str) or not item_id:
            failures.append(f"{where}: id must be a non-empty string")
            continue
        where = f"item {item_id!r}"
        if item_id in seen_ids:
            failures.append(f"{where}: duplicate id")
            continue
        seen_ids.add(item_id)

        try:
            category = Category(entry.get("category"))
        except ValueError:
            failures.append(f"{where}: unknown category {entry.get('category')!r}")
            continue
        trigger = entry.get("trigger_type", "")
        multi = entry.get("multi_object")
        if not isinstance(multi, bool):
            failures.append(f"{where}: multi_object must be a boolean")
            continue

        image_path = root / entry.get("image", "")
        manifest_path = root / entry.get("manifest", "")
        if not image_path.is_file():
            failures.append(f"{where}: image not found at {image_path}")
            continue
        if not manifest_path.is_file():
            failures.append(f"{where}: manifest not found at {manifest_path}")
            continue
        try:
            traj_set = parse_manifest(manifest_path.read_bytes())
        except ManifestError as exc:
            failures.append(f"{where}: manifest invalid: {exc}")
            continue
        with Image.open(image_path) as img:
            width, height = img.size
        if (width, height) != (traj_set.image_width, traj_set.image_height):
            failures.append(
                f"{where}: image is {width}x{height} but manifest declares "
                f"{traj_set.image_width}x{traj_set.image_height}"
            )
            continue
        items.append(
            BenchItem(
                id=item_id,
                image=image_path,
                manifest=manifest_path,
                category=category,
                trigger_type=str(trigger),
                multi_object=multi,
                trajectory_set=traj_set,
            )
        )

    if failures:
        raise BenchmarkError(failures)
    items.sort(key=lambda item: item.id)
    return Benchmark(items=items, version=version)


@dataclass(frozen=True)
class CategoryStat:
    count: int
    percent_exact: float
    percent: int


@dataclass(frozen=True)
class BenchStats:
    total: int
    by_category: dict[Category, CategoryStat]
    multi_object_count: int
    multi_object_percent: int


def _percent(count: int, total: int) -> tuple[float, int]:
    if total == 0:
        return 0.0, 0
    exact = 100.0 * count / total
    return exact, math.floor(exact + 0.5)


def stats(benchmark: Benchmark) -> BenchStats:
    """Category distribution with exact and round-half-up percentages.

    Percentages are always recomputed from the counts; nothing is cached in
    the store, so the exact values are available alongside the integers.
    """
    total = len(benchmark.items)
    by_category: dict[Category, CategoryStat] = {}
    for category in Category:
        count = sum(1 for item in benchmark.items if item.category is category)
        exact, rounded = _percent(count, total)
        by_category[category] = CategoryStat(count=count, percent_exact=exact, percent=rounded)
    multi = sum(1 for item in benchmark.items if item.multi_object)
    _, multi_pct = _percent(multi, total)
    return BenchStats(
        total=total,
        by_category=by_category,
        multi_object_count=multi,
        multi_object_percent=multi_pct,
    )


def stats_as_dict(s: BenchStats) -> dict:
    return {
        "total": s.total,
        "categories": {
            category.value: {
                "count": stat.count,
                "percent_exact": stat.percent_exact,
                "percent": stat.percent,
            }
            for category, stat in s.by_category.items()
        },
        "multi_object": {"count": s.multi_object_count, "percent": s.multi_object_percent},
    }
