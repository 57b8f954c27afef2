"""Perception backends: synthetic fixtures for offline use, pluggable live models.

The synthetic backend reads segmentation masks, depth, and intrinsics from a
labeled fixture (image + label-map file pair), so the full pipeline runs and
is testable without any model weights. Live backends wrap external
segmentation / point-map models and are registered by the embedding
application; they are intentionally not implemented here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import numpy as np
from PIL import Image

from .types import CameraIntrinsics, PointMap, SegmentMask


class BackendUnavailable(RuntimeError):
    pass


class SegmentationBackend(Protocol):
    def segment(self, image: np.ndarray, queries: list[str]) -> list[SegmentMask]: ...


class GeometryBackend(Protocol):
    def pts3d(self, image: np.ndarray) -> PointMap: ...

    def intrinsics(self, image: np.ndarray) -> CameraIntrinsics: ...


@dataclass
class SyntheticFixture:
    """Ground-truth scene: image, label map, known intrinsics, optional depth."""

    image: np.ndarray  # H x W x 3 uint8
    labels: np.ndarray  # H x W int label ids, 0 = background
    queries: dict[str, int]  # query text -> label id
    intrinsics: CameraIntrinsics
    depth: np.ndarray | None = None  # H x W float, <=0 marks invalid

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        Image.fromarray(self.image).save(directory / "image.png")
        Image.fromarray(self.labels.astype(np.uint8)).save(directory / "labels.png")
        meta = {
            "queries": self.queries,
            "intrinsics": {
                "fx": self.intrinsics.fx,
                "fy": self.intrinsics.fy,
                "cx": self.intrinsics.cx,
                "cy": self.intrinsics.cy,
            },
            "has_depth": self.depth is not None,
        }
        (directory / "meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
        if self.depth is not None:
            np.save(directory / "depth.npy", self.depth)

    @classmethod
    def load(cls, directory: str | Path) -> "SyntheticFixture":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
        depth = None
        if meta.get("has_depth"):
            depth = np.load(directory / "depth.npy")
        return cls(
            image=np.asarray(Image.open(directory / "image.png").convert("RGB")),
            labels=np.asarray(Image.open(directory / "labels.png")).astype(np.int64),
            queries=dict(meta["queries"]),
            intrinsics=CameraIntrinsics(**meta["intrinsics"]),
            depth=depth,
        )


def _mask_to_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    ys, xs = np.nonzero(mask)
    return int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1


class SyntheticBackend:
    """Serves segmentation and geometry straight from a fixture's labels."""

    name = "synthetic"

    def __init__(self, fixture: SyntheticFixture):
        self.fixture = fixture

    def segment(self, image: np.ndarray, queries: list[str]) -> list[SegmentMask]:
        results: list[SegmentMask] = []
        for query in queries:
            label = self.fixture.queries.get(query)
            if label is None:
                continue
            mask = self.fixture.labels == label
            if not mask.any():
                continue
            results.append(
                SegmentMask(query=query, mask=mask, bbox=_mask_to_bbox(mask), confidence=1.0)
            )
        return results

    def pts3d(self, image: np.ndarray) -> PointMap:
        if self.fixture.depth is None:
            raise BackendUnavailable("pts3d backend 'synthetic': fixture has no depth map")
        depth = self.fixture.depth
        h, w = depth.shape
        intr = self.fixture.intrinsics
        xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
        valid = np.isfinite(depth) & (depth > 0)
        z = np.where(valid, depth, 0.0)
        points = np.stack(
            [(xs - intr.cx) / intr.fx * z, (ys - intr.cy) / intr.fy * z, z], axis=-1
        )
        return PointMap(points=points, valid=valid)

    def intrinsics(self, image: np.ndarray) -> CameraIntrinsics:
        return self.fixture.intrinsics


class UnconfiguredBackend:
    """Placeholder that fails with the backend name at call time."""

    def __init__(self, kind: str, name: str):
        self.kind = kind
        self.name = name

    def _fail(self):
        raise BackendUnavailable(
            f"{self.kind} backend {self.name!r} unavailable: no provider registered"
        )

    def segment(self, image, queries):
        self._fail()

    def pts3d(self, image):
        self._fail()

    def intrinsics(self, image):
        self._fail()


_LIVE_FACTORIES: dict[str, Callable[[], object]] = {}


def register_live_backend(kind: str, factory: Callable[[], object]) -> None:
    """Plug in a live model provider ('segment' or 'pts3d')."""
    _LIVE_FACTORIES[kind] = factory


@dataclass
class ToolboxBackends:
    segmentation: SegmentationBackend
    geometry: GeometryBackend
    fixture: SyntheticFixture | None = field(default=None, repr=False)


def backends_from_config(cfg) -> ToolboxBackends:
    """Resolve ``toolbox.segment.backend`` / ``toolbox.pts3d.backend`` selections."""
    fixture = None
    if "synthetic" in (cfg.segment_backend, cfg.pts3d_backend):
        if cfg.fixture_dir:
            fixture = SyntheticFixture.load(cfg.fixture_dir)

    def resolve(kind: str, choice: str):
        if choice == "synthetic":
            if fixture is None:
                return UnconfiguredBackend(kind, "synthetic (no fixture_dir)")
            return SyntheticBackend(fixture)
        if choice == "live":
            factory = _LIVE_FACTORIES.get(kind)
            if factory is None:
                return UnconfiguredBackend(kind, "live")
            return factory()
        raise ValueError(f"unknown {kind} backend {choice!r}")

    return ToolboxBackends(
        segmentation=resolve("segment", cfg.segment_backend),
        geometry=resolve("pts3d", cfg.pts3d_backend),
        fixture=fixture,
    )
