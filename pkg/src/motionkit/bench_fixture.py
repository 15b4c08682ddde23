"""Procedural reference benchmark.

Builds a synthetic benchmark of 62 pre-event scenes whose category counts
match the reference distribution (collision 9, constraint change 17, tool
mechanisms 8, flow 9, common objects 19) with 19 multi-object items. Scenes
are simple deterministic geometric renders; they exist so the full pipeline
can run at desk scale without shipping photographs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .bench import Benchmark, Category, TRIGGER_TYPES, load_benchmark
from .raster import fill_disc, fill_segment
from .tracks import Track, TrackKind, TrajectorySet, serialize_manifest

REFERENCE_COUNTS: dict[Category, int] = {
    Category.COLLISION: 9,
    Category.CONSTRAINT_CHANGE: 17,
    Category.TOOL_MECHANISMS: 8,
    Category.FLOW: 9,
    Category.COMMON_OBJECTS: 19,
}

# How many items per category carry more than one interacting object;
# totals 19 across the reference benchmark.
MULTI_OBJECT_COUNTS: dict[Category, int] = {
    Category.COLLISION: 3,
    Category.CONSTRAINT_CHANGE: 5,
    Category.TOOL_MECHANISMS: 2,
    Category.FLOW: 3,
    Category.COMMON_OBJECTS: 6,
}

IMAGE_WIDTH = 128
IMAGE_HEIGHT = 96
LENGTH_FRAMES = 8
FPS = 4.0

_PROMPTS: dict[Category, str] = {
    Category.COLLISION: "push the ball into the stack",
    Category.CONSTRAINT_CHANGE: "cut the string holding the weight",
    Category.TOOL_MECHANISMS: "press the lever arm down",
    Category.FLOW: "tilt the container and pour",
    Category.COMMON_OBJECTS: "slide the object across the table",
}


def _scene_image(category: Category, rng: np.random.Generator) -> np.ndarray:
    image = np.zeros((IMAGE_HEIGHT, IMAGE_WIDTH, 3), dtype=np.uint8)
    # Vertical gradient backdrop plus a ground line.
    ramp = np.linspace(40, 90, IMAGE_HEIGHT, dtype=np.uint8)
    image[:, :, :] = ramp[:, None, None]
    image[IMAGE_HEIGHT - 12 :, :, :] = 30
    cx = float(rng.uniform(30, IMAGE_WIDTH - 30))
    if category is Category.COLLISION:
        fill_disc(image, cx, IMAGE_HEIGHT - 20, 6, (200, 80, 60))
        image[IMAGE_HEIGHT - 40 : IMAGE_HEIGHT - 12, int(cx) + 18 : int(cx) + 30] = (90, 140, 190)
    elif category is Category.CONSTRAINT_CHANGE:
        fill_segment(image, (cx, 8), (cx, 44), 1.0, (210, 210, 210))
        fill_disc(image, cx, 50, 7, (170, 170, 60))
    elif category is Category.TOOL_MECHANISMS:
        fill_segment(image, (cx - 22, IMAGE_HEIGHT - 30), (cx + 22, IMAGE_HEIGHT - 42), 3.0, (150, 150, 150))
        fill_disc(image, cx, IMAGE_HEIGHT - 26, 4, (120, 120, 200))
    elif category is Category.FLOW:
        image[20:52, int(cx) - 10 : int(cx) + 10] = (70, 110, 180)
        fill_disc(image, cx, 56, 3, (120, 170, 230))
    else:
        image[IMAGE_HEIGHT - 34 : IMAGE_HEIGHT - 12, int(cx) - 9 : int(cx) + 9] = (160, 120, 80)
    return image


def _item_tracks(
    category: Category, multi_object: bool, rng: np.random.Generator
) -> list[Track]:
    x0 = float(rng.uniform(0.2, 0.6))
    y0 = float(rng.uniform(0.3, 0.7))
    dx = float(rng.uniform(0.1, 0.25))
    dy = float(rng.uniform(-0.15, 0.15))
    steps = np.linspace(0.0, 1.0, LENGTH_FRAMES)
    main = np.column_stack([x0 + dx * steps, y0 + dy * steps])
    tracks = [Track(id="user_1", kind=TrackKind.USER, confidence=1.0, points=main)]
    if multi_object:
        react = np.column_stack([x0 + 0.3 - 0.08 * steps, y0 + 0.1 + 0.12 * steps])
        tracks.append(
            Track(id="user_2", kind=TrackKind.USER, confidence=1.0, points=np.clip(react, 0.0, 1.0))
        )
    return tracks


def build_reference_benchmark(root_dir: str | Path, seed: int = 7) -> Benchmark:
    """Write the synthetic reference benchmark under ``root_dir`` and load it."""
    root = Path(root_dir)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "manifests").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    entries = []
    serial = 0
    for category in Category:
        count = REFERENCE_COUNTS[category]
        multi_budget = MULTI_OBJECT_COUNTS[category]
        for j in range(count):
            item_id = f"{category.value}_{j:02d}"
            multi = j < multi_budget
            image = _scene_image(category, rng)
            image_rel = f"images/{item_id}.png"
            manifest_rel = f"manifests/{item_id}.json"
            Image.fromarray(image, mode="RGB").save(root / image_rel)
            traj_set = TrajectorySet(
                tracks=_item_tracks(category, multi, rng),
                length_frames=LENGTH_FRAMES,
                image_width=IMAGE_WIDTH,
                image_height=IMAGE_HEIGHT,
                fps=FPS,
                prompt=_PROMPTS[category],
                image=image_rel,
            )
            (root / manifest_rel).write_bytes(serialize_manifest(traj_set))
            entries.append(
                {
                    "id": item_id,
                    "image": image_rel,
                    "manifest": manifest_rel,
                    "category": category.value,
                    "trigger_type": TRIGGER_TYPES[serial % len(TRIGGER_TYPES)],
                    "multi_object": multi,
                }
            )
            serial += 1

    index = {"version": "reference-1", "items": entries}
    (root / "index.json").write_text(json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return load_benchmark(root)
