"""Seed a run store with complete, scored runs without any VLM access.

Used by the intervention-console integration tests and as an offline demo:
the scripted client deterministically answers the generation and critic
calls with the bundled reference programs.
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np

from .assets import reference_program
from .config import PipelineConfig
from .pipeline import Orchestrator
from .scene import SceneInput
from .store import RunStore
from .vlm import ScriptedClient


def _approval() -> str:
    return json.dumps({"accurate": True, "suggestions": []})


def _fenced(source: str) -> str:
    return f"```python\n{source}```\n"


def _ball_scene() -> SceneInput:
    rng = np.random.default_rng(11)
    image = rng.integers(0, 60, size=(72, 96, 3), dtype=np.uint8)
    return SceneInput(
        image=image,
        caption="a ball drops onto the floor",
        frame_size=(96, 72),
        fps=10.0,
        duration_s=1.2,
    )


def seed_demo_store(config: PipelineConfig) -> list[str]:
    """Create two falling-ball runs: one unscored, one scored against its
    own frames as ground truth. Returns their run ids (unscored first)."""
    store = RunStore(config.store_dir)
    ball = reference_program("falling_ball")

    probe_orch = Orchestrator(
        store, config, client=ScriptedClient([_fenced(ball), _approval()])
    )
    probe = probe_orch.generate(_ball_scene())
    if probe.status != "complete":
        raise RuntimeError(f"demo probe run failed: {probe.meta.get('error')}")
    gt = probe.load_frames()

    scene = dataclasses.replace(_ball_scene(), gt_video=gt)
    orch = Orchestrator(
        store, config, client=ScriptedClient([_fenced(ball), _approval()])
    )
    record = orch.generate(scene)
    if record.status != "complete":
        raise RuntimeError(f"demo run failed: {record.meta.get('error')}")
    return [probe.run_id, record.run_id]
