"""Configuration loading: file, environment, flags (flags win)."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .degrade import DegradeConfig
from .volume import SigmaConfig

ENV_PREFIX = "MOTIONKIT_"


def load_config_file(path: str | Path) -> dict:
    """Read a JSON or TOML config file into a plain dict."""
    path = Path(path)
    text = path.read_bytes()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib  # py311+
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text.decode("utf-8"))
    return json.loads(text.decode("utf-8"))


def degrade_config_from_dict(data: dict | None) -> DegradeConfig:
    """Build a DegradeConfig from config-file keys mirroring its field names."""
    data = dict(data or {})
    if "intensity_range_low_conf" in data:
        data["intensity_range_low_conf"] = tuple(data["intensity_range_low_conf"])
    return DegradeConfig(**data)


def sigma_config_from_dict(data: dict | None) -> SigmaConfig:
    return SigmaConfig(**(data or {}))


@dataclass
class ServiceConfig:
    """Resolved service settings.

    Environment variables use the MOTIONKIT_ prefix: BENCH_ROOT, STORE_DIR,
    QUESTIONS_PER_SESSION, DEMO_PAIRS, DEMO_SEED, MAX_ROUNDS, DOT_RADIUS,
    VLM_REPLIES (path-list separated by os.pathsep), plus the VLM client
    variables documented in the reasoning module.
    """

    store_dir: Path
    bench_root: Path | None = None
    questions_per_session: int = 30
    demo_pairs: int = 0
    demo_seed: int = 0
    max_rounds: int = 4
    dot_radius: float = 3.0
    vlm_replies: list[Path] = field(default_factory=list)
    sigma: SigmaConfig = field(default_factory=SigmaConfig)
    degrade: DegradeConfig = field(default_factory=DegradeConfig)
    host: str = "127.0.0.1"
    port: int = 8600
    studio_dist: Path | None = None

    @classmethod
    def resolve(cls, config_path: str | Path | None = None, **overrides) -> "ServiceConfig":
        data: dict = {}
        if config_path is not None:
            data.update(load_config_file(config_path))

        env = os.environ
        mapping = {
            "BENCH_ROOT": ("bench_root", str),
            "STORE_DIR": ("store_dir", str),
            "QUESTIONS_PER_SESSION": ("questions_per_session", int),
            "DEMO_PAIRS": ("demo_pairs", int),
            "DEMO_SEED": ("demo_seed", int),
            "MAX_ROUNDS": ("max_rounds", int),
            "DOT_RADIUS": ("dot_radius", float),
            "HOST": ("host", str),
            "PORT": ("port", int),
            "STUDIO_DIST": ("studio_dist", str),
        }
        for env_key, (key, cast) in mapping.items():
            value = env.get(ENV_PREFIX + env_key)
            if value is not None:
                data[key] = cast(value)
        replies = env.get(ENV_PREFIX + "VLM_REPLIES")
        if replies is not None:
            data["vlm_replies"] = [p for p in replies.split(os.pathsep) if p]

        for key, value in overrides.items():
            if value is not None:
                data[key] = value

        sigma = sigma_config_from_dict(data.pop("sigma", None)) if not isinstance(
            data.get("sigma"), SigmaConfig
        ) else data.pop("sigma")
        degrade = degrade_config_from_dict(data.pop("degrade", None)) if not isinstance(
            data.get("degrade"), DegradeConfig
        ) else data.pop("degrade")

        if "store_dir" not in data:
            raise ValueError("store_dir is required (flag, config file, or MOTIONKIT_STORE_DIR)")
        return cls(
            store_dir=Path(data["store_dir"]),
            bench_root=Path(data["bench_root"]) if data.get("bench_root") else None,
            questions_per_session=int(data.get("questions_per_session", 30)),
            demo_pairs=int(data.get("demo_pairs", 0)),
            demo_seed=int(data.get("demo_seed", 0)),
            max_rounds=int(data.get("max_rounds", 4)),
            dot_radius=float(data.get("dot_radius", 3.0)),
            vlm_replies=[Path(p) for p in data.get("vlm_replies", [])],
            sigma=sigma,
            degrade=degrade,
            host=str(data.get("host", "127.0.0.1")),
            port=int(data.get("port", 8600)),
            studio_dist=Path(data["studio_dist"]) if data.get("studio_dist") else None,
        )
