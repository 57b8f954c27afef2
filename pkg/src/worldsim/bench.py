"""Physical-plausibility benchmark runner.

Dataset layout: <dataset>/<category>/<scene_id>/{input.png, caption.txt,
gt/%05d.png}. Each scene is predicted n_samples times, scored, reduced by
best-of-N, then averaged per category; the overall average weights scenes
equally. Reports land as scores.json plus a plain-text category table.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from PIL import Image

from .metrics import ScoreReport, best_of_n, score_prediction
from .scene import SceneInput, load_frame_dir

log = logging.getLogger(__name__)

# Sequence of frames produced by one pipeline sample for a scene.
PipelineFn = Callable[[SceneInput, int], Sequence[np.ndarray]]


@dataclass
class PhysicsScene:
    category: str
    scene_id: str
    path: Path

    def load(self) -> SceneInput:
        caption = (self.path / "caption.txt").read_text(encoding="utf-8").strip()
        image = np.asarray(Image.open(self.path / "input.png").convert("RGB"))
        gt = load_frame_dir(self.path / "gt")
        if not gt:
            raise FileNotFoundError(f"missing ground truth for scene {self.scene_id}")
        h, w = gt[0].shape[:2]
        # Duration bound to the ground-truth clip length at the default rate.
        fps = 30.0
        return SceneInput(
            image=image,
            caption=caption,
            frame_size=(w, h),
            fps=fps,
            duration_s=len(gt) / fps,
            gt_video=gt,
        )


def load_physics_dataset(dataset_dir: str | Path) -> list[PhysicsScene]:
    dataset_dir = Path(dataset_dir)
    scenes = []
    for category_dir in sorted(p for p in dataset_dir.iterdir() if p.is_dir()):
        for scene_dir in sorted(p for p in category_dir.iterdir() if p.is_dir()):
            if not (scene_dir / "input.png").is_file():
                continue
            if not (scene_dir / "gt").is_dir():
                raise FileNotFoundError(f"missing ground truth for scene {scene_dir}")
            scenes.append(PhysicsScene(category_dir.name, scene_dir.name, scene_dir))
    if not scenes:
        raise ValueError(f"no scenes found under {dataset_dir}")
    return scenes


@dataclass
class CategoryScore:
    category: str
    n_scenes: int
    combined: float
    spatial_iou: float
    weighted_spatial_iou: float
    spatiotemporal_iou: float


@dataclass
class PhysicsBenchmarkReport:
    per_category: dict[str, CategoryScore]
    per_scene: dict[str, ScoreReport]
    overall_combined: float
    n_samples: int
    combiner: str = "mean (non-canonical; see physics_score)"

    def as_dict(self) -> dict:
        return {
            "overall_combined": self.overall_combined,
            "n_samples": self.n_samples,
            "combiner": self.combiner,
            "per_category": {k: dataclasses.asdict(v) for k, v in self.per_category.items()},
            "per_scene": {k: v.as_dict() for k, v in self.per_scene.items()},
        }

    def as_table(self, label: str = "pipeline") -> str:
        categories = sorted(self.per_category)
        header = ["Model"] + [c.replace("_", " ").title() for c in categories] + ["Average"]
        row = [label] + [f"{self.per_category[c].combined:.1f}" for c in categories]
        row.append(f"{self.overall_combined:.1f}")
        widths = [max(len(h), len(v)) for h, v in zip(header, row)]
        line = " | ".join(h.ljust(w) for h, w in zip(header, widths))
        sep = "-+-".join("-" * w for w in widths)
        values = " | ".join(v.ljust(w) for v, w in zip(row, widths))
        return "\n".join([line, sep, values])

    def save(self, directory: str | Path, label: str = "pipeline") -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "scores.json").write_text(
            json.dumps(self.as_dict(), indent=2, sort_keys=True), encoding="utf-8"
        )
        (directory / "scores.txt").write_text(self.as_table(label) + "\n", encoding="utf-8")


def run_physics_benchmark(
    dataset_dir: str | Path,
    pipeline: PipelineFn,
    n_samples: int = 3,
    threshold: float = 0.05,
    min_blob_px: int = 0,
) -> PhysicsBenchmarkReport:
    """Score a pipeline over every scene of a dataset with best-of-N sampling."""
    scenes = load_physics_dataset(dataset_dir)
    per_scene: dict[str, ScoreReport] = {}
    by_category: dict[str, list[ScoreReport]] = {}
    for entry in scenes:
        scene = entry.load()
        reports = []
        for k in range(n_samples):
            try:
                frames = pipeline(scene, k)
            except Exception:
                log.exception("sample %d failed for scene %s", k, entry.scene_id)
                continue
            reports.append(
                score_prediction(
                    frames, scene.gt_video, threshold, min_blob_px,
                    category=entry.category, sample_index=k,
                )
            )
        if not reports:
            raise RuntimeError(f"all samples failed for scene {entry.scene_id}")
        best = best_of_n(reports)
        key = f"{entry.category}/{entry.scene_id}"
        per_scene[key] = best
        by_category.setdefault(entry.category, []).append(best)

    per_category = {}
    for category, reports in by_category.items():
        per_category[category] = CategoryScore(
            category=category,
            n_scenes=len(reports),
            combined=float(np.mean([r.combined for r in reports])),
            spatial_iou=float(np.mean([r.spatial_iou for r in reports])),
            weighted_spatial_iou=float(np.mean([r.weighted_spatial_iou for r in reports])),
            spatiotemporal_iou=float(np.mean([r.spatiotemporal_iou for r in reports])),
        )
    overall = float(np.mean([r.combined for r in per_scene.values()]))
    return PhysicsBenchmarkReport(
        per_category=per_category,
        per_scene=per_scene,
        overall_combined=overall,
        n_samples=n_samples,
    )


def conway_reference_pipeline(
    steps: int,
    cell_px: int = 16,
    executor=None,
    wall_clock_s: float = 120.0,
    rng_seed: int = 0,
):
    """A board -> frames pipeline running the bundled rule program in the sandbox."""
    from .assets import reference_program
    from .conway import BinaryGrid, render_grid
    from .sandbox import ExecutionBudget, SandboxExecutor, WorldProgram

    executor = executor or SandboxExecutor()
    source = reference_program("conway")

    def pipeline(board: BinaryGrid) -> Sequence[np.ndarray]:
        rows, cols = board.shape
        frame_size = (cols * cell_px, rows * cell_px)
        scene = SceneInput(
            image=render_grid(board, frame_size),
            caption=(
                f"Conway's Game of Life on a {rows}x{cols} grid; "
                "live cells are white, dead cells are black."
            ),
            frame_size=frame_size,
            fps=float(steps),
            duration_s=1.0,
        )
        budget = ExecutionBudget(
            wall_clock_s=wall_clock_s, memory_mb=2048,
            frame_count=steps, rng_seed=rng_seed,
        )
        result = executor.execute(WorldProgram(source), scene, budget)
        if not result.ok:
            raise RuntimeError(f"reference program failed: {result.traceback}")
        return result.frames

    return pipeline


def gt_replay_pipeline(scene: SceneInput, sample_index: int) -> Sequence[np.ndarray]:
    """Oracle pipeline replaying the ground-truth video (self-score identity)."""
    if scene.gt_video is None:
        raise ValueError("scene has no ground-truth video to replay")
    return scene.gt_video


def static_frame_pipeline(scene: SceneInput, sample_index: int) -> Sequence[np.ndarray]:
    """Frozen-frame baseline: repeats the conditioning image."""
    count = len(scene.gt_video) if scene.gt_video else scene.frame_count
    return [scene.image] * count
