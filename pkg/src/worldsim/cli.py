"""Command-line interface."""

from __future__ import annotations

import ast
import dataclasses
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

from .config import AblationFlags, PipelineConfig, load_config
from .scene import SceneInput, load_frame_dir
from .store import RunStore

log = logging.getLogger(__name__)


def _build_orchestrator(config: PipelineConfig):
    from .pipeline import Orchestrator

    store = RunStore(config.store_dir)
    return Orchestrator(store, config)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="YAML/JSON config document.")
@click.option("--store", "store_dir", default=None, help="Run store directory.")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx, config_path, store_dir, verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    config = load_config(config_path) if config_path else PipelineConfig()
    if store_dir:
        config.store_dir = store_dir
    ctx.obj = config


@main.command()
@click.option("--image", "image_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--caption", default="")
@click.option("--no-api", is_flag=True)
@click.option("--no-critic", is_flag=True)
@click.option("--no-image", is_flag=True)
@click.option("--no-caption", is_flag=True)
@click.option("--samples", type=int, default=None, help="Best-of-N sample count.")
@click.option("--fps", type=float, default=None)
@click.option("--duration", "duration_s", type=float, default=None)
@click.pass_obj
def generate(config: PipelineConfig, image_path, caption, no_api, no_critic,
             no_image, no_caption, samples, fps, duration_s):
    """Generate a world program for an image + caption and simulate it."""
    if samples:
        config.budgets.n_samples = samples
    if any((no_api, no_critic, no_image, no_caption)):
        config.ablation = AblationFlags(no_api, no_critic, no_image, no_caption)
    image = np.asarray(Image.open(image_path).convert("RGB"))
    scene = SceneInput(
        image=image,
        caption=caption,
        frame_size=(image.shape[1], image.shape[0]),
        fps=fps or config.budgets.fps,
        duration_s=duration_s or config.budgets.duration_s,
    )
    record = _build_orchestrator(config).generate(scene)
    click.echo(json.dumps(record.summary(), indent=2))
    if record.status != "complete":
        sys.exit(1)


@main.command()
@click.option("--run", "run_id", required=True)
@click.option("--gt", "gt_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.pass_obj
def evaluate(config: PipelineConfig, run_id, gt_dir):
    """Score a run's predictions against a ground-truth frame directory."""
    gt = load_frame_dir(gt_dir)
    report = _build_orchestrator(config).evaluate(run_id, gt)
    click.echo(json.dumps(report.as_dict(), indent=2))


@main.command("bench-physics")
@click.option("--dataset", "dataset_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--pipeline", "pipeline_kind",
              type=click.Choice(["vlm", "gt-replay", "static"]), default="vlm")
@click.option("--samples", "n_samples", type=int, default=3)
@click.option("--out", "out_dir", default=None)
@click.pass_obj
def bench_physics(config: PipelineConfig, dataset_dir, pipeline_kind, n_samples, out_dir):
    """Run the physical-plausibility benchmark over a dataset directory."""
    from . import bench

    if pipeline_kind == "gt-replay":
        pipeline = bench.gt_replay_pipeline
    elif pipeline_kind == "static":
        pipeline = bench.static_frame_pipeline
    else:
        orchestrator = _build_orchestrator(config)

        def pipeline(scene, sample_index):
            return orchestrator.predict_frames(scene, sample_index)

    report = bench.run_physics_benchmark(
        dataset_dir, pipeline, n_samples=n_samples,
        threshold=config.eval.motion_threshold,
        min_blob_px=config.eval.min_blob_px,
    )
    click.echo(report.as_table(label=pipeline_kind))
    if out_dir:
        report.save(out_dir, label=pipeline_kind)
        click.echo(f"report written to {out_dir}/scores.json")


@main.command("bench-conway")
@click.option("--scenes", "scenes_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of board .txt files ('#'/'.' rows).")
@click.option("--steps", type=int, default=10)
@click.option("--cell-px", type=int, default=16)
@click.option("--out", "out_path", default=None)
@click.pass_obj
def bench_conway(config: PipelineConfig, scenes_dir, steps, cell_px, out_path):
    """Run the rule-based benchmark with the bundled reference program."""
    from .bench import conway_reference_pipeline
    from .conway import BinaryGrid, run_conway_benchmark

    boards = [
        BinaryGrid.from_text(path.read_text(encoding="utf-8"))
        for path in sorted(Path(scenes_dir).glob("*.txt"))
    ]
    if not boards:
        raise click.ClickException(f"no .txt boards found in {scenes_dir}")
    pipeline = conway_reference_pipeline(steps, cell_px=cell_px,
                                         wall_clock_s=config.budgets.wall_clock_s)
    result = run_conway_benchmark(boards, pipeline, steps)
    for t, value in enumerate(result.per_timestep, start=1):
        click.echo(f"timestep {t:2d}: mean F1 = {value:.4f}")
    if out_path:
        Path(out_path).write_text(json.dumps(result.as_dict(), indent=2), encoding="utf-8")
        click.echo(f"curve written to {out_path}")


def _parse_patch(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise click.ClickException(f"--patch takes KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        value = raw
    return key.strip(), value


@main.command()
@click.option("--run", "run_id", required=True)
@click.option("--patch", "patches", multiple=True, help="KEY=VALUE parameter override.")
@click.option("--caption", default=None)
@click.option("--source", "source_file", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.pass_obj
def intervene(config: PipelineConfig, run_id, patches, caption, source_file):
    """Fork a run with a parameter patch, new caption, or edited source."""
    from .pipeline import Intervention

    chosen = [bool(patches), caption is not None, source_file is not None]
    if sum(chosen) != 1:
        raise click.ClickException("pass exactly one of --patch/--caption/--source")
    if patches:
        intervention = Intervention.parameter_patch(dict(_parse_patch(p) for p in patches))
    elif caption is not None:
        intervention = Intervention.caption_edit(caption)
    else:
        intervention = Intervention.source_edit(
            Path(source_file).read_text(encoding="utf-8")
        )
    child = _build_orchestrator(config).intervene(run_id, intervention)
    click.echo(json.dumps(child.summary(), indent=2))
    if child.status != "complete":
        sys.exit(1)


@main.command()
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
@click.pass_obj
def serve(config: PipelineConfig, port, host):
    """Serve the REST API backing the intervention console."""
    from .server import serve as run_server

    if port:
        config.serve.port = port
    if host:
        config.serve.host = host
    click.echo(f"serving on http://{config.serve.host}:{config.serve.port} "
               f"(store: {config.store_dir})")
    run_server(config)


@main.command("show-config")
@click.pass_obj
def show_config(config: PipelineConfig):
    """Print the full effective configuration."""
    click.echo(json.dumps(dataclasses.asdict(config), indent=2, sort_keys=True))


@main.command("seed-demo")
@click.pass_obj
def seed_demo(config: PipelineConfig):
    """Seed the store with deterministic demo runs (no VLM required)."""
    from .demo import seed_demo_store

    run_ids = seed_demo_store(config)
    click.echo(json.dumps({"run_ids": run_ids}))


if __name__ == "__main__":
    main()
