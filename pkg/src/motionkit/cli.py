"""Command-line surface for batch and scripted use.

Exit codes: 0 success, 2 usage, 3 validation, 4 I/O, 5 upstream client
failure. Failures emit one machine-readable JSON line on stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

from . import __version__
from .bench import BenchmarkError, load_benchmark, stats, stats_as_dict
from .bench_fixture import build_reference_benchmark
from .config import (
    ServiceConfig,
    degrade_config_from_dict,
    load_config_file,
    sigma_config_from_dict,
)
from .degrade import degrade as degrade_track
from .errors import MotionKitError, TransportError
from .evalkit import aggregate, epe, read_verdicts, results_to_json
from .overlay import compose_vlm_image
from .reason import MockVlmClient, SessionState, StubGeneratorClient, run_loop
from .tracks import parse_manifest, serialize_manifest
from .volume import (
    SigmaConfig,
    rasterize,
    render_preview_video,
    write_volume_file,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4
EXIT_UPSTREAM = 5


def _fail(code: int, kind: str, message: str) -> None:
    click.echo(json.dumps({"error": kind, "message": message}), err=True)
    sys.exit(code)


def _read_manifest(path: str):
    return parse_manifest(Path(path).read_bytes())


def _load_configs(config_path: str | None):
    data = load_config_file(config_path) if config_path else {}
    return (
        sigma_config_from_dict(data.get("sigma")),
        degrade_config_from_dict(data.get("degrade")),
        data,
    )


@click.group()
@click.version_option(__version__, prog_name="motionkit")
def cli():
    """Motion conditioning, degradation, reasoning, and evaluation tools."""


@cli.command("rasterize")
@click.option("-i", "--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--height", type=int, default=None, help="Raster height; defaults to the manifest's.")
@click.option("--width", type=int, default=None, help="Raster width; defaults to the manifest's.")
@click.option("--sigma-fraction", type=float, default=None)
@click.option("--truncation", type=float, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def rasterize_cmd(input_path, output_path, height, width, sigma_fraction, truncation, config_path):
    """Rasterize a trajectory manifest into a motion volume file."""
    sigma_cfg, _, _ = _load_configs(config_path)
    if sigma_fraction is not None or truncation is not None:
        sigma_cfg = SigmaConfig(
            sigma_fraction=sigma_fraction if sigma_fraction is not None else sigma_cfg.sigma_fraction,
            truncation_radius_sigmas=truncation if truncation is not None else sigma_cfg.truncation_radius_sigmas,
        )
    traj_set = _read_manifest(input_path)
    volume = rasterize(
        traj_set,
        height if height is not None else traj_set.image_height,
        width if width is not None else traj_set.image_width,
        sigma_cfg,
    )
    write_volume_file(volume, output_path)
    click.echo(f"wrote {output_path} ({volume.length}x{volume.height}x{volume.width}x{volume.channels})")


@cli.command("degrade")
@click.option("-i", "--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--score", type=float, required=True, help="Confidence score driving the intensity draw.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def degrade_cmd(input_path, output_path, score, seed, config_path):
    """Degrade every track in a manifest at the given confidence score."""
    _, degrade_cfg, _ = _load_configs(config_path)
    traj_set = _read_manifest(input_path)
    out_tracks = []
    for i, track in enumerate(traj_set.tracks):
        degraded, _ = degrade_track(
            track,
            score,
            degrade_cfg,
            np.random.SeedSequence([seed, i]),
            traj_set.image_width,
            traj_set.image_height,
        )
        out_tracks.append(degraded)
    traj_set.tracks = out_tracks
    Path(output_path).write_bytes(serialize_manifest(traj_set))
    click.echo(f"wrote {output_path}")


@cli.command("overlay")
@click.option("-i", "--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", "output_path", required=True, type=click.Path(dir_okay=False))
def overlay_cmd(input_path, image_path, output_path):
    """Draw a manifest's tracks onto an image and write a PNG."""
    traj_set = _read_manifest(input_path)
    with Image.open(image_path) as img:
        image = np.asarray(img.convert("RGB"))
    Path(output_path).write_bytes(compose_vlm_image(image, traj_set))
    click.echo(f"wrote {output_path}")


@cli.command("preview")
@click.option("-i", "--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", "output_dir", required=True, type=click.Path(file_okay=False))
@click.option("--dot-radius", type=float, default=3.0, show_default=True)
def preview_cmd(input_path, output_dir, dot_radius):
    """Render the deterministic stub video for a manifest as PNG frames."""
    traj_set = _read_manifest(input_path)
    frames = render_preview_video(traj_set, traj_set.image_height, traj_set.image_width, dot_radius)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        Image.fromarray(frame, mode="RGB").save(out / f"frame_{i:05d}.png")
    click.echo(f"wrote {len(frames)} frames to {output_dir}")


@cli.command("reason")
@click.option("-i", "--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option(
    "--replies",
    "reply_paths",
    multiple=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Scripted planner reply files; replays them instead of calling a live endpoint.",
)
@click.option("--max-rounds", type=int, default=4, show_default=True)
@click.option("--dot-radius", type=float, default=3.0, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Print the round log as JSON.")
def reason_cmd(input_path, image_path, output_path, reply_paths, max_rounds, dot_radius, as_json):
    """Run the reasoning loop against the stub generator; write the merged manifest."""
    if not reply_paths:
        _fail(EXIT_USAGE, "usage", "at least one --replies file is required (live endpoints: use the service)")
    traj_set = _read_manifest(input_path)
    with Image.open(image_path) as img:
        image = np.asarray(img.convert("RGB"))
    vlm = MockVlmClient.from_files(list(reply_paths))
    state = SessionState(image=image, current_set=traj_set)
    state = run_loop(state, vlm, StubGeneratorClient(dot_radius=dot_radius), max_rounds=max_rounds)
    Path(output_path).write_bytes(serialize_manifest(state.current_set))
    log = [
        {"round": i, "done": rec.plan.done, "narrative_prompt": rec.plan.narrative_prompt}
        for i, rec in enumerate(state.history)
    ]
    if as_json:
        click.echo(json.dumps({"rounds": log, "n_tracks": len(state.current_set.tracks)}, indent=2))
    else:
        click.echo(f"ran {state.round} rounds, final set has {len(state.current_set.tracks)} tracks")


@cli.command("epe")
@click.option("--ref", "ref_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--est", "est_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True)
def epe_cmd(ref_path, est_path, as_json):
    """Mean end-point error in pixels between two manifests."""
    value = epe(_read_manifest(ref_path), _read_manifest(est_path))
    if as_json:
        click.echo(json.dumps({"epe_px": value}))
    else:
        click.echo(f"{value:.6f}")


@cli.command("prefs")
@click.argument("store_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Emit the aggregate table as JSON bytes.")
def prefs_cmd(store_path, as_json):
    """Aggregate a verdict store into preference rates."""
    table = aggregate(read_verdicts(store_path))
    if as_json:
        sys.stdout.buffer.write(results_to_json(table))
        return
    for (metric, judge, category), result in sorted(
        table.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value, kv[0][2] or "")
    ):
        label = f"{metric.value}/{judge.value}" + (f"/{category}" if category else "")
        rate = "undefined" if result.rate_a_percent is None else f"{result.rate_a_percent:.2f}%"
        click.echo(
            f"{label}: rate_a={rate} (s_a={result.s_a:g}, s_b={result.s_b:g}, "
            f"ties={result.n_ties}, n={result.n_total})"
        )


@cli.group("bench")
def bench_group():
    """Benchmark dataset tools."""


@bench_group.command("validate")
@click.argument("root", type=click.Path(exists=True, file_okay=False))
def bench_validate(root):
    """Validate a benchmark directory; lists every failure."""
    benchmark = load_benchmark(root)
    click.echo(f"ok: {len(benchmark.items)} items, version {benchmark.version!r}")


@bench_group.command("stats")
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--json", "as_json", is_flag=True)
def bench_stats(root, as_json):
    """Category distribution of a benchmark."""
    table = stats(load_benchmark(root))
    if as_json:
        click.echo(json.dumps(stats_as_dict(table), indent=2, sort_keys=True))
        return
    click.echo(f"total: {table.total}")
    for category, stat in table.by_category.items():
        click.echo(
            f"{category.value}: {stat.count} ({stat.percent}%, exact {stat.percent_exact:.2f}%)"
        )
    click.echo(
        f"multi-object: {table.multi_object_count} ({table.multi_object_percent}%)"
    )


@bench_group.command("build-fixture")
@click.argument("root", type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=7, show_default=True)
def bench_build_fixture(root, seed):
    """Generate the synthetic reference benchmark."""
    benchmark = build_reference_benchmark(root, seed=seed)
    click.echo(f"built {len(benchmark.items)} items under {root}")


@cli.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--bench-root", type=click.Path(file_okay=False), default=None)
@click.option("--store-dir", type=click.Path(file_okay=False), default=None)
def serve_cmd(config_path, host, port, bench_root, store_dir):
    """Run the studio HTTP service."""
    import uvicorn

    from .service import create_app

    config = ServiceConfig.resolve(
        config_path, host=host, port=port, bench_root=bench_root, store_dir=store_dir
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port)


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except click.exceptions.Abort:
        _fail(EXIT_USAGE, "aborted", "aborted")
    except click.UsageError as exc:
        _fail(EXIT_USAGE, "usage", exc.format_message())
    except click.ClickException as exc:
        _fail(EXIT_USAGE, "usage", exc.format_message())
    except TransportError as exc:
        _fail(EXIT_UPSTREAM, "upstream", str(exc))
    except BenchmarkError as exc:
        _fail(EXIT_VALIDATION, "validation", str(exc))
    except MotionKitError as exc:
        _fail(EXIT_VALIDATION, "validation", str(exc))
    except ValueError as exc:
        _fail(EXIT_VALIDATION, "validation", str(exc))
    except OSError as exc:
        _fail(EXIT_IO, "io", str(exc))


if __name__ == "__main__":
    main()
