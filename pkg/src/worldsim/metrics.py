"""Motion-overlap metrics and score combination.

Three components measure where (Spatial IoU), how much (Weighted Spatial IoU,
a generalized Jaccard over accumulated magnitudes), and when-and-where
(Spatiotemporal IoU) action occurred; they combine into a score out of 100.
By convention every metric returns exactly 1.0 when both sides are empty: a
correctly predicted static scene scores perfectly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .stmap import to_gray

BLOB_STRUCTURE = np.ones((3, 3), dtype=bool)  # 8-connected motion blobs


@dataclass
class MotionMaskSet:
    per_frame: np.ndarray  # (T, H, W) bool
    aggregate_any: np.ndarray  # (H, W) bool, OR over time
    aggregate_mag: np.ndarray  # (H, W) float >= 0, summed magnitudes

    def __post_init__(self) -> None:
        self.per_frame = np.asarray(self.per_frame, dtype=bool)
        self.aggregate_any = np.asarray(self.aggregate_any, dtype=bool)
        self.aggregate_mag = np.asarray(self.aggregate_mag, dtype=np.float64)
        if self.per_frame.ndim != 3:
            raise ValueError("per_frame must be (T, H, W)")
        if not np.array_equal(self.aggregate_any, self.per_frame.any(axis=0)):
            raise ValueError("aggregate_any must equal the OR of per-frame masks")
        if (self.aggregate_mag < 0).any():
            raise ValueError("aggregate_mag must be non-negative")

    @property
    def shape(self) -> tuple[int, int]:
        return self.per_frame.shape[1:]

    @classmethod
    def from_per_frame(cls, per_frame, aggregate_mag=None) -> "MotionMaskSet":
        per_frame = np.asarray(per_frame, dtype=bool)
        if aggregate_mag is None:
            aggregate_mag = per_frame.sum(axis=0).astype(np.float64)
        return cls(per_frame, per_frame.any(axis=0), aggregate_mag)


def _remove_small_blobs(mask: np.ndarray, min_blob_px: int) -> np.ndarray:
    labels, count = ndimage.label(mask, structure=BLOB_STRUCTURE)
    if not count:
        return mask
    sizes = np.bincount(labels.ravel())
    keep = sizes >= min_blob_px
    keep[0] = False
    return keep[labels]


def motion_masks(frames: Sequence[np.ndarray], threshold: float = 0.05,
                 min_blob_px: int = 0) -> MotionMaskSet:
    """Per-step motion masks from gray-level frame differences.

    per_frame[t] marks pixels whose step magnitude exceeds the threshold,
    with connected components smaller than min_blob_px removed.
    """
    if len(frames) < 2:
        raise ValueError("motion masks need at least 2 frames")
    grays = np.stack([to_gray(f) for f in frames])
    mags = np.abs(np.diff(grays, axis=0))
    per_frame = mags > threshold
    if min_blob_px > 1:
        per_frame = np.stack([_remove_small_blobs(m, min_blob_px) for m in per_frame])
    return MotionMaskSet(
        per_frame=per_frame,
        aggregate_any=per_frame.any(axis=0),
        aggregate_mag=mags.sum(axis=0),
    )


def _require_same_hw(pred: MotionMaskSet, gt: MotionMaskSet) -> None:
    if pred.shape != gt.shape:
        raise ValueError(f"mask sizes differ: {pred.shape} vs {gt.shape}")


def spatial_iou(pred: MotionMaskSet, gt: MotionMaskSet) -> float:
    """IoU of the time-collapsed (any-motion) masks; both empty -> 1.0."""
    _require_same_hw(pred, gt)
    union = int((pred.aggregate_any | gt.aggregate_any).sum())
    if union == 0:
        return 1.0
    intersection = int((pred.aggregate_any & gt.aggregate_any).sum())
    return intersection / union


def weighted_spatial_iou(pred: MotionMaskSet, gt: MotionMaskSet) -> float:
    """Generalized Jaccard over accumulated magnitudes; both zero -> 1.0."""
    _require_same_hw(pred, gt)
    p, g = pred.aggregate_mag, gt.aggregate_mag
    denominator = float(np.maximum(p, g).sum())
    if denominator == 0.0:
        return 1.0
    return float(np.minimum(p, g).sum()) / denominator


def spatiotemporal_iou(pred: MotionMaskSet, gt: MotionMaskSet) -> float:
    """Mean per-frame mask IoU.

    Frames empty on both sides are skipped; a frame empty on exactly one side
    scores 0. All frames skipped -> 1.0.
    """
    if pred.per_frame.shape != gt.per_frame.shape:
        raise ValueError(
            f"mask stacks differ: {pred.per_frame.shape} vs {gt.per_frame.shape}"
        )
    values: list[float] = []
    for a, b in zip(pred.per_frame, gt.per_frame):
        union = int((a | b).sum())
        if union == 0:
            continue
        values.append(int((a & b).sum()) / union)
    if not values:
        return 1.0
    return sum(values) / len(values)


@dataclass
class ScoreReport:
    spatial_iou: float
    weighted_spatial_iou: float
    spatiotemporal_iou: float
    combined: float
    n_samples: int = 1
    category: str = ""
    sample_index: int = 0
    resampled: bool = False

    def __post_init__(self) -> None:
        for name in ("spatial_iou", "weighted_spatial_iou", "spatiotemporal_iou"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} out of range: {value}")
        if not 0.0 <= self.combined <= 100.0:
            raise ValueError(f"combined score out of range: {self.combined}")

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def physics_score(components: Sequence[float],
                  combiner: Callable[[Sequence[float]], float] | None = None) -> float:
    """Combine the three IoU components into a score out of 100.

    Default combiner is the plain arithmetic mean; alternatives plug in via
    the combiner argument. Note the canonical Physics-IQ normalization is not
    reproduced here; reports carry the combiner used.
    """
    if len(components) != 3:
        raise ValueError("expected exactly 3 components")
    for value in components:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"component out of range: {value}")
    if combiner is None:
        return 100.0 * (sum(components) / 3.0)
    return 100.0 * combiner(components)


def score_prediction(
    pred_frames: Sequence[np.ndarray],
    gt_frames: Sequence[np.ndarray],
    threshold: float = 0.05,
    min_blob_px: int = 0,
    category: str = "",
    sample_index: int = 0,
) -> ScoreReport:
    """Score a predicted frame sequence against ground truth.

    Predictions with a different frame count are resampled to the ground
    truth timeline by nearest frame; the report records that this happened.
    """
    resampled = False
    if len(pred_frames) != len(gt_frames):
        pred_frames = resample_frames(pred_frames, len(gt_frames))
        resampled = True
    pred = motion_masks(pred_frames, threshold, min_blob_px)
    gt = motion_masks(gt_frames, threshold, min_blob_px)
    components = (
        spatial_iou(pred, gt),
        weighted_spatial_iou(pred, gt),
        spatiotemporal_iou(pred, gt),
    )
    return ScoreReport(
        spatial_iou=components[0],
        weighted_spatial_iou=components[1],
        spatiotemporal_iou=components[2],
        combined=physics_score(components),
        category=category,
        sample_index=sample_index,
        resampled=resampled,
    )


def resample_frames(frames: Sequence[np.ndarray], count: int) -> list[np.ndarray]:
    """Nearest-frame resampling onto a target frame count."""
    if count < 1 or not len(frames):
        raise ValueError("cannot resample an empty sequence")
    if count == 1:
        return [frames[0]]
    indices = np.round(np.linspace(0, len(frames) - 1, count)).astype(int)
    return [frames[i] for i in indices]


def best_of_n(reports: Sequence[ScoreReport]) -> ScoreReport:
    """Best-of-N selection: maximal combined score, ties to the lowest sample index."""
    if not reports:
        raise ValueError("best_of_n requires at least one report")
    best = max(reports, key=lambda r: (r.combined, -r.sample_index))
    return dataclasses.replace(best, n_samples=len(reports))
