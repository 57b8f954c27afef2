"""Scene inputs: the pipeline's sole external input."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image


@dataclass
class SceneInput:
    """A single conditioning image plus caption and output-frame geometry.

    ``gt_video`` is carried only for evaluation; it never reaches the
    generation pipeline.
    """

    image: np.ndarray  # H x W x 3 uint8
    caption: str
    frame_size: tuple[int, int] = (1024, 576)  # (width, height)
    fps: float = 30.0
    duration_s: float = 5.0
    gt_video: list[np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        img = np.asarray(self.image)
        if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
            raise ValueError("scene image must be an HxWx3 uint8 array")
        self.image = img
        w, h = self.frame_size
        if w < 1 or h < 1:
            raise ValueError("frame_size must be at least 1x1")
        if not self.fps > 0:
            raise ValueError("fps must be positive")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")

    @property
    def frame_count(self) -> int:
        return round(self.fps * self.duration_s)

    def require_caption(self, allow_empty: bool) -> None:
        if not self.caption and not allow_empty:
            raise ValueError(
                "caption is empty; enable the no_caption ablation to run without one"
            )

    def save(self, directory: str | Path) -> None:
        """Persist as image.png + scene.json (and gt/%05d.png when present)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        Image.fromarray(self.image).save(directory / "image.png")
        meta = {
            "caption": self.caption,
            "frame_size": list(self.frame_size),
            "fps": self.fps,
            "duration_s": self.duration_s,
            "has_gt": self.gt_video is not None,
        }
        (directory / "scene.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8"
        )
        if self.gt_video is not None:
            gt_dir = directory / "gt"
            gt_dir.mkdir(exist_ok=True)
            for i, frame in enumerate(self.gt_video):
                Image.fromarray(frame).save(gt_dir / f"{i:05d}.png")

    @classmethod
    def load(cls, directory: str | Path) -> "SceneInput":
        directory = Path(directory)
        meta = json.loads((directory / "scene.json").read_text(encoding="utf-8"))
        image = np.asarray(Image.open(directory / "image.png").convert("RGB"))
        gt_video = None
        if meta.get("has_gt"):
            gt_video = load_frame_dir(directory / "gt")
        return cls(
            image=image,
            caption=meta["caption"],
            frame_size=tuple(meta["frame_size"]),
            fps=meta["fps"],
            duration_s=meta["duration_s"],
            gt_video=gt_video,
        )


def load_frame_dir(directory: str | Path) -> list[np.ndarray]:
    """Load a %05d.png frame sequence, sorted by index."""
    directory = Path(directory)
    frames = []
    for path in sorted(directory.glob("*.png")):
        frames.append(np.asarray(Image.open(path).convert("RGB")))
    return frames


def save_frames(frames: list[np.ndarray], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        Image.fromarray(frame).save(directory / f"{i:05d}.png")
