"""Persistent run store.

One directory per run: scene.json + image.png (+ gt/), prompt.txt,
program.*.src, frames/, stmap.png, critique.*.json, scores.json, meta.json.
Multi-sample runs keep non-selected samples under samples/<k>/; the selected
sample's artifacts are promoted to the run root. meta.json writes are atomic
and flip to a terminal status only after all artifacts are in place.
"""

from __future__ import annotations

import json
import os
import secrets
import shutil
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .scene import SceneInput, load_frame_dir


class RunNotFoundError(KeyError):
    pass


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


@dataclass
class RunRecord:
    run_id: str
    path: Path
    meta: dict[str, Any]

    @property
    def status(self) -> str:
        return self.meta.get("status", "unknown")

    @property
    def parent_run(self) -> str | None:
        return self.meta.get("parent_run")

    @property
    def selected_sample(self) -> int | None:
        return self.meta.get("selected_sample")

    @property
    def caption(self) -> str:
        return self.meta.get("scene", {}).get("caption", "")

    def sample_dir(self, sample_index: int) -> Path:
        if sample_index == self.selected_sample:
            return self.path
        return self.path / "samples" / str(sample_index)

    @property
    def frames_dir(self) -> Path:
        return self.path / "frames"

    @property
    def frame_count(self) -> int:
        if not self.frames_dir.is_dir():
            return 0
        return sum(1 for _ in self.frames_dir.glob("*.png"))

    def frame_path(self, index: int) -> Path:
        return self.frames_dir / f"{index:05d}.png"

    def load_frames(self, sample_index: int | None = None) -> list[np.ndarray]:
        base = self.path if sample_index is None else self.sample_dir(sample_index)
        return load_frame_dir(base / "frames")

    def final_program_path(self) -> Path | None:
        selected = self.selected_sample
        if selected is None:
            return None
        entry = self.meta["samples"][selected]
        name = entry.get("program")
        return self.path / name if name else None

    def final_program_source(self) -> str:
        path = self.final_program_path()
        if path is None or not path.is_file():
            raise FileNotFoundError(f"run {self.run_id} has no final program")
        return path.read_text(encoding="utf-8")

    def scene(self) -> SceneInput:
        return SceneInput.load(self.path)

    def scores(self) -> dict | None:
        path = self.path / "scores.json"
        if not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def summary(self) -> dict[str, Any]:
        scores = self.scores()
        return {
            "run_id": self.run_id,
            "status": self.status,
            "caption": self.caption,
            "created_at": self.meta.get("created_at"),
            "parent_run": self.parent_run,
            "intervention": self.meta.get("intervention"),
            "frame_count": self.frame_count,
            "scores": scores.get("best") if scores else None,
            "error": self.meta.get("error"),
        }


class RunStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def new_run_id(self) -> str:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        return f"{stamp}-{secrets.token_hex(3)}"

    def run_dir(self, run_id: str) -> Path:
        return self.root / run_id

    def create_run(
        self,
        scene: SceneInput,
        config_snapshot: dict[str, Any],
        parent_run: str | None = None,
        intervention: dict[str, Any] | None = None,
    ) -> RunRecord:
        run_id = self.new_run_id()
        path = self.run_dir(run_id)
        path.mkdir(parents=True)
        scene.save(path)
        meta = {
            "run_id": run_id,
            "status": "queued",
            "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
            "parent_run": parent_run,
            "intervention": intervention,
            "scene": {
                "caption": scene.caption,
                "frame_size": list(scene.frame_size),
                "fps": scene.fps,
                "duration_s": scene.duration_s,
                "has_gt": scene.gt_video is not None,
            },
            "config": config_snapshot,
            "samples": [],
            "selected_sample": None,
            "error": None,
        }
        self._write_meta(run_id, meta)
        return RunRecord(run_id, path, meta)

    def _write_meta(self, run_id: str, meta: dict[str, Any]) -> None:
        _atomic_write(self.run_dir(run_id) / "meta.json", json.dumps(meta, indent=2, sort_keys=True))

    def update_meta(self, run_id: str, **fields: Any) -> RunRecord:
        record = self.get(run_id)
        record.meta.update(fields)
        self._write_meta(run_id, record.meta)
        return record

    def get(self, run_id: str) -> RunRecord:
        path = self.run_dir(run_id)
        meta_path = path / "meta.json"
        if not meta_path.is_file():
            raise RunNotFoundError(run_id)
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        return RunRecord(run_id, path, meta)

    def list_runs(self) -> list[RunRecord]:
        records = []
        for meta_path in sorted(self.root.glob("*/meta.json")):
            run_id = meta_path.parent.name
            try:
                records.append(self.get(run_id))
            except (json.JSONDecodeError, RunNotFoundError):
                continue
        return records

    def children(self, run_id: str) -> list[RunRecord]:
        return [r for r in self.list_runs() if r.parent_run == run_id]

    def promote_sample(self, run_id: str, sample_index: int) -> None:
        """Move a sample's artifacts to the run root as the canonical output."""
        run_dir = self.run_dir(run_id)
        sample_dir = run_dir / "samples" / str(sample_index)
        if not sample_dir.is_dir():
            return
        for item in sorted(sample_dir.iterdir()):
            target = run_dir / item.name
            if target.exists():
                continue
            shutil.move(str(item), str(target))
        sample_dir.rmdir()
        samples_root = run_dir / "samples"
        if samples_root.is_dir() and not any(samples_root.iterdir()):
            samples_root.rmdir()

    def mark_stale_runs_failed(self) -> int:
        """Crash recovery: no worker owns queued/running runs at startup."""
        count = 0
        for record in self.list_runs():
            if record.status in ("queued", "running"):
                self.update_meta(
                    record.run_id, status="failed",
                    error="interrupted: no worker owns this run",
                )
                count += 1
        return count

    # -- idempotency ---------------------------------------------------------
    def claim_request_id(self, request_id: str) -> str | None:
        """Return the existing run id for a request id, or None if fresh."""
        path = self.root / "requests" / f"{request_id}.json"
        if path.is_file():
            return json.loads(path.read_text(encoding="utf-8"))["run_id"]
        return None

    def bind_request_id(self, request_id: str, run_id: str) -> None:
        directory = self.root / "requests"
        directory.mkdir(parents=True, exist_ok=True)
        _atomic_write(directory / f"{request_id}.json", json.dumps({"run_id": run_id}))
